#pragma once

// Backcasting: the SAV introduction schedule u(1..T) of least operator cost
// whose cumulative emissions stay under a cap.
//
// Augmented Lagrangian on the terminal constraint xi(T) <= cap; each
// subproblem is a bound-constrained minimisation by spectral projected
// gradient with forward finite-difference gradients. Perturbing u_t only
// re-simulates years t..T.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mobility/error.hpp"
#include "mobility/simulator.hpp"

namespace mobility {

struct PolicyEvaluation {
    double cost = 0.0;  // EUR, sum of C_S + C_R
    double xi_T = 0.0;  // t
};

inline void check_policy(const std::vector<double>& policy, double u_max) {
    if (policy.empty()) throw ModelError("policy is empty");
    for (std::size_t t = 0; t < policy.size(); ++t)
        if (!(policy[t] >= 0.0 && policy[t] <= u_max))
            throw ModelError("policy year " + std::to_string(t + 1) + ": u = " + text::format_double(policy[t]) +
                             " outside [0, " + text::format_double(u_max) + "]");
}

inline PolicyEvaluation evaluate_policy(const MobilityModel& model, const std::vector<double>& policy,
                                        double u_max = std::numeric_limits<double>::infinity()) {
    check_policy(policy, u_max);
    const auto run = forecast(model, policy);
    return {run.total_cost, run.xi_T};
}

struct BackcastOptions {
    double u_max = 2000.0;        // veh/y
    std::uint64_t seed = 1;
    int starts = 8;               // reference, zero, then seeded draws
    double cap_tolerance = 5e-3;  // relative
    double improvement_tolerance = 1e-5;
    double fd_step = 1.0;         // veh
    int max_outer = 8;
    int max_inner = 25;
    int polish_outer = 8;         // extra outer iterations for the best start
    double penalty = 1000.0;      // initial augmented-Lagrangian penalty
    long long year_budget = 40000;  // simulated model years over the whole solve
    std::function<void(const std::string&)> log;  // progress lines, optional
};

struct BackcastProblem {
    std::vector<double> reference;  // reference policy, veh/y
    double cap = 0.0;               // t; <= 0 means xi(T) of the reference
    BackcastOptions options;
};

struct BackcastSolution {
    std::vector<double> policy;
    double total_cost = 0.0;
    double xi_T = 0.0;
    double cap = 0.0;
    double reference_cost = 0.0;
    double reference_xi = 0.0;
    double violation = 0.0;    // max(0, xi_T / cap - 1)
    double improvement = 0.0;  // 1 - cost / reference cost
    int best_start = 0;
    int outer_iterations = 0;
    int inner_iterations = 0;
    long long simulated_years = 0;
    bool rounded = false;      // integer policy passed the re-check
};

namespace detail {

class Backcaster {
public:
    Backcaster(const MobilityModel& model, const BackcastProblem& problem, double cap, double cost_scale)
        : model_(model), opt_(problem.options), cap_(cap), cost_scale_(cost_scale),
          T_(problem.reference.size()) {}

    struct Point {
        std::vector<double> v;  // u / u_max
        ForecastResult run;
        double f = 0.0;  // cost / reference cost
        double c = 0.0;  // xi / cap - 1
        std::vector<double> grad_f, grad_c;
        bool has_grad = false;
    };

    struct Candidate {
        Point p;
        int outer = 0;
        int inner = 0;
        double lambda = 0.0;
        double rho = 0.0;
    };

    /// Starts a candidate at `v`; the multiplier begins at the least-squares
    /// estimate from the first gradients.
    Candidate start(std::vector<double> v) {
        Candidate c;
        c.p = evaluate(std::move(v));
        gradient(c.p);
        double fc = 0.0, cc = 0.0;
        for (std::size_t t = 0; t < T_; ++t) {
            fc += c.p.grad_f[t] * c.p.grad_c[t];
            cc += c.p.grad_c[t] * c.p.grad_c[t];
        }
        c.lambda = cc > 0.0 ? std::max(0.0, -fc / cc) : 0.0;
        c.rho = opt_.penalty;
        return c;
    }

    void log(const std::string& line) const {
        if (opt_.log) opt_.log(line);
    }

    long long years() const { return years_; }
    bool out_of_budget() const { return years_ >= opt_.year_budget; }

    std::vector<double> to_policy(const std::vector<double>& v) const {
        std::vector<double> u(v.size());
        for (std::size_t t = 0; t < v.size(); ++t) u[t] = std::clamp(v[t] * opt_.u_max, 0.0, opt_.u_max);
        return u;
    }

    Point evaluate(std::vector<double> v) {
        Point p;
        p.v = std::move(v);
        p.run = forecast(model_, to_policy(p.v));
        years_ += static_cast<long long>(T_);
        fill(p);
        return p;
    }

    void gradient(Point& p) {
        if (p.has_grad) return;
        p.grad_f.assign(T_, 0.0);
        p.grad_c.assign(T_, 0.0);
        const auto u = to_policy(p.v);
        for (std::size_t t = 0; t < T_; ++t) {
            auto w = u;
            double step = opt_.fd_step;
            if (w[t] + step > opt_.u_max) step = -step;
            w[t] += step;
            const auto r = forecast(model_, w, &p.run, t);
            years_ += static_cast<long long>(T_ - t);
            const double dv = step / opt_.u_max;
            p.grad_f[t] = (r.total_cost / cost_scale_ - p.f) / dv;
            p.grad_c[t] = (r.xi_T / cap_ - 1.0 - p.c) / dv;
        }
        p.has_grad = true;
    }

    double merit(const Point& p, double lambda, double rho) const {
        const double s = std::max(0.0, p.c + lambda / rho);
        return p.f + 0.5 * rho * (s * s - (lambda / rho) * (lambda / rho));
    }

    std::vector<double> merit_gradient(const Point& p, double lambda, double rho) const {
        const double s = std::max(0.0, p.c + lambda / rho);
        std::vector<double> g(T_);
        for (std::size_t t = 0; t < T_; ++t) g[t] = p.grad_f[t] + rho * s * p.grad_c[t];
        return g;
    }

    /// Spectral projected gradient on the merit function with a
    /// non-monotone Armijo search.
    void inner(Candidate& cand) {
        auto& p = cand.p;
        gradient(p);
        auto g = merit_gradient(p, cand.lambda, cand.rho);
        double L = merit(p, cand.lambda, cand.rho);
        std::vector<double> history{L};
        double alpha = initial_step(p.v, g);
        for (int it = 0; it < opt_.max_inner && !out_of_budget(); ++it) {
            std::vector<double> d(T_);
            double dnorm = 0.0, slope = 0.0;
            for (std::size_t t = 0; t < T_; ++t) {
                d[t] = std::clamp(p.v[t] - alpha * g[t], 0.0, 1.0) - p.v[t];
                dnorm = std::max(dnorm, std::abs(d[t]));
                slope += g[t] * d[t];
            }
            if (dnorm < 1e-7 || slope >= 0.0) break;
            const double ref = *std::max_element(history.begin(), history.end());
            double lam = 1.0;
            Point trial;
            double L_trial = 0.0;
            bool accepted = false;
            for (int ls = 0; ls < 8 && !out_of_budget(); ++ls) {
                std::vector<double> v(T_);
                for (std::size_t t = 0; t < T_; ++t) v[t] = std::clamp(p.v[t] + lam * d[t], 0.0, 1.0);
                trial = evaluate(std::move(v));
                L_trial = merit(trial, cand.lambda, cand.rho);
                if (L_trial <= ref + 1e-4 * lam * slope) {
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
            ++cand.inner;
            if (!accepted) break;
            gradient(trial);
            const auto g_new = merit_gradient(trial, cand.lambda, cand.rho);
            double ss = 0.0, sy = 0.0;
            for (std::size_t t = 0; t < T_; ++t) {
                const double s = trial.v[t] - p.v[t], y = g_new[t] - g[t];
                ss += s * s;
                sy += s * y;
            }
            alpha = sy > 0.0 ? std::clamp(ss / sy, 1e-4, 1e4) : 1e4;
            const double gain = (L - L_trial) / std::max(std::abs(L), 1e-12);
            p = std::move(trial);
            g = g_new;
            L = L_trial;
            history.push_back(L);
            if (history.size() > 5) history.erase(history.begin());
            if (gain < opt_.improvement_tolerance) break;
        }
    }

    /// Outer multiplier updates until feasible with a stalled cost.
    void outer(Candidate& cand, int rounds) {
        for (int k = 0; k < rounds && !out_of_budget(); ++k) {
            const double f_before = cand.p.f;
            const double c_before = cand.p.c;
            inner(cand);
            ++cand.outer;
            const double c = cand.p.c;
            cand.lambda = std::max(0.0, cand.lambda + cand.rho * c);
            if (c > opt_.cap_tolerance * 0.2 && c > 0.25 * c_before) cand.rho = std::min(cand.rho * 10.0, 1e8);
            const bool feasible = c <= opt_.cap_tolerance * 0.2;
            log("outer " + std::to_string(cand.outer) + ": cost " + text::format_double(cand.p.f) + " xi/cap-1 " +
                text::format_double(c) + " lambda " + text::format_double(cand.lambda) + " rho " +
                text::format_double(cand.rho) + " years " + std::to_string(years_));
            if (feasible && std::abs(f_before - cand.p.f) < opt_.improvement_tolerance * std::abs(f_before)) break;
        }
    }

    /// Feasible first, then cheaper.
    bool better(const Point& a, const Point& b) const {
        const bool fa = a.c <= opt_.cap_tolerance, fb = b.c <= opt_.cap_tolerance;
        if (fa != fb) return fa;
        if (!fa) return a.c < b.c;
        return a.f < b.f;
    }

private:
    void fill(Point& p) const {
        p.f = p.run.total_cost / cost_scale_;
        p.c = p.run.xi_T / cap_ - 1.0;
    }

    double initial_step(const std::vector<double>& v, const std::vector<double>& g) const {
        double m = 0.0;
        for (std::size_t t = 0; t < T_; ++t) m = std::max(m, std::abs(std::clamp(v[t] - g[t], 0.0, 1.0) - v[t]));
        return m > 0.0 ? std::clamp(0.1 / m, 1e-4, 1e4) : 1.0;
    }

    const MobilityModel& model_;
    const BackcastOptions& opt_;
    double cap_;
    double cost_scale_;
    std::size_t T_;
    long long years_ = 0;
};

}  // namespace detail

/// Deterministic start policies: the reference, zero, then uniform draws of
/// 0.5..1.5 times the reference from `seed`.
inline std::vector<std::vector<double>> backcast_starts(const std::vector<double>& reference, int count,
                                                        std::uint64_t seed, double u_max) {
    std::vector<std::vector<double>> starts;
    if (count >= 1) starts.push_back(reference);
    if (count >= 2) starts.emplace_back(reference.size(), 0.0);
    std::mt19937_64 rng(seed);
    for (int s = 2; s < count; ++s) {
        std::vector<double> u(reference.size());
        for (std::size_t t = 0; t < u.size(); ++t) {
            // Own uniform map so the draws do not depend on the library's distributions.
            const double r = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            u[t] = std::clamp(reference[t] * (0.5 + r), 0.0, u_max);
        }
        starts.push_back(std::move(u));
    }
    return starts;
}

inline BackcastSolution solve_backcast(const MobilityModel& model, const BackcastProblem& problem) {
    const auto& opt = problem.options;
    if (!(opt.u_max > 0.0)) throw ModelError("backcast: u_max must be positive");
    if (opt.starts < 1) throw ModelError("backcast: at least one start is needed");
    check_policy(problem.reference, opt.u_max);

    BackcastSolution sol;
    const auto ref = forecast(model, problem.reference);
    sol.reference_cost = ref.total_cost;
    sol.reference_xi = ref.xi_T;
    sol.cap = problem.cap > 0.0 ? problem.cap : ref.xi_T;
    if (ref.xi_T > sol.cap * (1.0 + opt.cap_tolerance))
        throw ModelError("backcast: infeasible cap, the reference policy emits " + text::format_double(ref.xi_T) +
                         " t against a cap of " + text::format_double(sol.cap) + " t");

    detail::Backcaster bc(model, problem, sol.cap, ref.total_cost);
    const auto starts = backcast_starts(problem.reference, opt.starts, opt.seed, opt.u_max);
    std::vector<detail::Backcaster::Candidate> cands;
    for (const auto& u : starts) {
        if (bc.out_of_budget()) break;
        std::vector<double> v(u.size());
        for (std::size_t t = 0; t < u.size(); ++t) v[t] = u[t] / opt.u_max;
        bc.log("start " + std::to_string(cands.size()));
        auto c = bc.start(std::move(v));
        bc.outer(c, opt.max_outer);
        cands.push_back(std::move(c));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < cands.size(); ++i)
        if (bc.better(cands[i].p, cands[best].p)) best = i;
    auto& win = cands[best];
    bc.log("polishing start " + std::to_string(best));
    bc.outer(win, opt.polish_outer);
    if (win.p.c > opt.cap_tolerance)
        throw ModelError("backcast: budget exhausted without a feasible policy (best exceeds the cap by " +
                         text::format_double(100.0 * win.p.c) + "%)");

    sol.policy = bc.to_policy(win.p.v);
    sol.total_cost = win.p.run.total_cost;
    sol.xi_T = win.p.run.xi_T;
    for (const auto& c : cands) {
        sol.outer_iterations += c.outer;
        sol.inner_iterations += c.inner;
    }
    sol.best_start = static_cast<int>(best);

    // Integer vehicles, kept only if still within the cap.
    std::vector<double> rounded(sol.policy.size());
    for (std::size_t t = 0; t < rounded.size(); ++t) rounded[t] = std::clamp(std::round(sol.policy[t]), 0.0, opt.u_max);
    const auto r = forecast(model, rounded);
    if (r.xi_T <= sol.cap * (1.0 + opt.cap_tolerance)) {
        sol.policy = rounded;
        sol.total_cost = r.total_cost;
        sol.xi_T = r.xi_T;
        sol.rounded = true;
    }
    sol.simulated_years = bc.years() + 2 * static_cast<long long>(problem.reference.size());
    sol.violation = std::max(0.0, sol.xi_T / sol.cap - 1.0);
    sol.improvement = 1.0 - sol.total_cost / sol.reference_cost;
    return sol;
}

struct ReferenceComparison {
    double cost_delta = 0.0;     // EUR, solution - reference
    double cost_delta_pct = 0.0;
    double xi_delta = 0.0;       // t
    double xi_delta_pct = 0.0;
    std::vector<double> solution_policy;
    std::vector<double> reference_policy;
};

inline ReferenceComparison compare_to_reference(const BackcastSolution& sol, const std::vector<double>& reference) {
    ReferenceComparison c;
    c.cost_delta = sol.total_cost - sol.reference_cost;
    c.cost_delta_pct = 100.0 * c.cost_delta / sol.reference_cost;
    c.xi_delta = sol.xi_T - sol.reference_xi;
    c.xi_delta_pct = 100.0 * c.xi_delta / sol.reference_xi;
    c.solution_policy = sol.policy;
    c.reference_policy = reference;
    return c;
}

}  // namespace mobility
