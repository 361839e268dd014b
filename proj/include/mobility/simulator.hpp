#pragma once

// Within-year quasi-static equilibrium and the yearly simulation loop.
//
// A MobilityModel freezes everything computed offline: UE path sets, the
// affine road and rail time models, and the base-year state. The yearly
// equilibrium is a damped fixed point on the OD mode split; inside each map
// evaluation the SAV demand / waiting time loop is solved exactly
// as a scalar root on total SAV demand.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "mobility/affine.hpp"
#include "mobility/assignment.hpp"
#include "mobility/error.hpp"
#include "mobility/fleet.hpp"
#include "mobility/impacts.hpp"
#include "mobility/infrastructure.hpp"
#include "mobility/level_of_service.hpp"
#include "mobility/mode_choice.hpp"
#include "mobility/scenario.hpp"

namespace mobility {

struct SystemState {
    int year = 0;  // simulated years so far
    HVStock hv;
    double S_S = 0.0;
    RailState rail;
    SAVServiceState perceived;
    double xi = 0.0;
    ModeSplit last_split;  // warm start for the next equilibrium
};

struct EquilibriumPoint {
    ModeSplit split;
    std::vector<double> road_times;     // min per OD
    std::vector<double> rail_times;     // min per OD, 0 where unserved
    std::vector<double> link_capacity;  // veh/h per road link
    double wait = 0.0;                  // raw SAV wait, min
    double rail_ae = 0.0;               // min
    double utilisation = 0.0;           // 0 without a fleet
    SAVCustomerCosts costs;             // raw SAV customer costs
    SAVServiceState perceived;          // values entering the utilities
    double trip_time = 0.0;             // mean SAV trip, min
    double trip_km = 0.0;               // mean SAV trip, km
    double residual = 0.0;
    int iterations = 0;
};

struct TrajectoryRecord {
    int year = 0;
    double u = 0.0;
    double S_S = 0.0;
    double S_R = 0.0;
    double S_H = 0.0;
    double S_H_thermal = 0.0;
    double S_H_electric = 0.0;
    double G_H = 0.0;
    double G_S = 0.0;
    double G_R = 0.0;
    double t_A = 0.0;   // car-demand-weighted mean road time, min
    double t_R = 0.0;   // rail-demand-weighted mean rail time, min
    double t_S_w = 0.0;
    double t_R_ae = 0.0;
    double F_R = 0.0;
    double K_A = 0.0;   // mean link capacity, veh/h
    double K_R = 0.0;
    double C_S = 0.0;
    double C_R = 0.0;
    double E = 0.0;
    double xi = 0.0;
    double D_S = 0.0;
    double D_R = 0.0;
    double U = 0.0;
};

/// Options for the within-year solve. With `frozen` set, the perceived SAV
/// customer costs and rail times are taken from that point and the wait
/// filter is bypassed.
struct EquilibriumOptions {
    const EquilibriumPoint* frozen = nullptr;
};

class MobilityModel {
public:
    explicit MobilityModel(Scenario scenario) : sc_(std::move(scenario)) { prepare(); }

    const Scenario& scenario() const { return sc_; }
    const ParamSet& params() const { return sc_.params; }
    std::size_t od_count() const { return demand_.size(); }
    const std::vector<double>& demand() const { return demand_; }
    const AffineTTModel& road_model() const { return road_; }
    const AffineTTModel& rail_model() const { return rail_; }
    const std::vector<LinkCost>& road_costs() const { return road_costs_; }
    const UEResult& ue() const { return ue_; }
    const std::vector<double>& base_car_demand() const { return base_car_; }
    const std::vector<bool>& rail_available() const { return rail_available_; }
    double line_count() const { return line_count_; }
    double line_length() const { return line_length_; }
    const SystemState& initial_state() const { return initial_; }
    const EquilibriumPoint& base_equilibrium() const { return base_eq_; }

    // ---- building blocks shared with the linearisation ----

    /// Road link capacities from the link HV/SAV flows of a split.
    std::vector<double> link_capacities(const ModeSplit& x) const {
        const auto flows = link_mode_flows(road_, x.G_H, x.G_S);
        const auto h = HeadwaySet::from(sc_.params);
        std::vector<double> k(road_.link_count());
        for (std::size_t l = 0; l < k.size(); ++l)
            k[l] = mixed_capacity(flows.sav[l], flows.hv[l], road_.ref_capacity[l], h);
        return k;
    }

    std::vector<double> road_times(const ModeSplit& x, const std::vector<double>& capacity) const {
        return affine_od_times(road_, car_demand(x), capacity);
    }

    std::vector<double> rail_times(const ModeSplit& x, double K_R) const {
        const std::vector<double> cap(rail_.link_count(), K_R);
        return affine_od_times(rail_, x.G_R, cap);
    }

    static std::vector<double> car_demand(const ModeSplit& x) {
        std::vector<double> c(x.size());
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = x.G_H[k] + x.G_S[k];
        return c;
    }

    /// Mode split for given times and SAV level of service.
    ModeSplit choose(const std::vector<double>& road_t, const std::vector<double>& rail_t, double rail_ae,
                     const SAVServiceState& sav) const {
        const auto& p = sc_.params;
        UtilitySpec spec{p.time_weight, p.value_of_time, p.nest_lambda, {p.asc_H, p.asc_S, p.asc_R}};
        std::vector<ODUtilities> u(od_count());
        for (std::size_t k = 0; k < u.size(); ++k) {
            const double d = road_.distance[k];
            u[k].U_H = mode_utility(Mode::HV, road_t[k], p.hv_access_time, p.C_H_c_op, p.C_H_c_ae, d, spec);
            u[k].U_S = mode_utility(Mode::SAV, road_t[k], sav.wait, sav.cost_op, sav.cost_ae, d, spec);
            u[k].rail_available = rail_available_[k];
            if (rail_available_[k])
                u[k].U_R = mode_utility(Mode::Rail, rail_t[k], rail_ae, p.C_R_c_op, p.C_R_c_ae, rail_.distance[k], spec);
        }
        return split_demand(demand_, p.x_i, u, p.nest_lambda);
    }

    /// SAV-demand-weighted mean road time and distance; demand-weighted
    /// when there is no SAV demand.
    std::pair<double, double> sav_trip(const std::vector<double>& G_S, const std::vector<double>& road_t) const {
        double w = 0.0, t = 0.0, d = 0.0;
        for (std::size_t k = 0; k < G_S.size(); ++k) {
            w += G_S[k];
            t += G_S[k] * road_t[k];
            d += G_S[k] * road_.distance[k];
        }
        if (w > 0.0) return {t / w, d / w};
        for (std::size_t k = 0; k < G_S.size(); ++k) {
            w += demand_[k];
            t += demand_[k] * road_t[k];
            d += demand_[k] * road_.distance[k];
        }
        return w > 0.0 ? std::pair{t / w, d / w} : std::pair{0.0, 0.0};
    }

    /// Raw SAV wait (min), utilisation and customer costs at total SAV demand g.
    struct SAVLevel {
        double wait = 0.0;
        double utilisation = 0.0;
        SAVCustomerCosts costs;
    };
    SAVLevel sav_level(double g, double S_S, double trip_time, double trip_km) const {
        const auto& p = sc_.params;
        SAVLevel lv;
        lv.wait = S_S > 0.0 ? sav_wait_time(g, S_S, trip_time, QueueParams::from(p)) : p.wait_cap;
        if (S_S > 0.0) {
            lv.utilisation = utilisation(g, S_S, p.benchmark_mileage, trip_km, p.working_hours);
            lv.costs = sav_customer_costs(lv.utilisation, p);
        } else {
            lv.costs = {p.C_S_c_op, p.C_S_c_ae};
        }
        return lv;
    }

    double rail_access(double F_R) const {
        return rail_access_egress(F_R, sc_.params.station_spacing, sc_.params.walk_speed);
    }

    /// Within-year equilibrium at the stocks in `state` (S_S already
    /// includes this year's additions).
    EquilibriumPoint solve_year_equilibrium(const SystemState& state, const EquilibriumOptions& opt = {}) const;

private:
    void prepare();

    Scenario sc_;
    std::vector<double> demand_;
    std::vector<LinkCost> road_costs_;
    UEResult ue_;
    std::vector<double> base_car_;
    AffineTTModel road_;
    AffineTTModel rail_;
    std::vector<bool> rail_available_;
    double line_count_ = 0.0;
    double line_length_ = 0.0;
    SystemState initial_;
    EquilibriumPoint base_eq_;
};

namespace detail {

inline double total(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace detail

inline EquilibriumPoint MobilityModel::solve_year_equilibrium(const SystemState& state,
                                                              const EquilibriumOptions& opt) const {
    const auto& p = sc_.params;
    const std::size_t n = od_count();
    double gamma = p.equilibrium_damping;
    double last_residual = INFINITY;
    const double tol = p.equilibrium_tolerance;
    const int max_iter = static_cast<int>(p.equilibrium_max_iterations);
    const double dt = 1.0;
    const double G_total = detail::total(demand_);
    const double rail_ae = rail_access(state.rail.F_R);

    ModeSplit x = state.last_split.size() == n ? state.last_split : base_eq_.split;
    if (x.size() != n) {
        x = ModeSplit(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double m = rail_available_[k] ? 3.0 : 2.0;
            x.G_H[k] = x.G_S[k] = demand_[k] / m;
            x.G_R[k] = rail_available_[k] ? demand_[k] / m : 0.0;
        }
    }

    EquilibriumPoint eq;
    eq.rail_ae = rail_ae;
    double g_prev = detail::total(x.G_S);
    for (int iter = 1; iter <= max_iter; ++iter) {
        const auto capacity = link_capacities(x);
        const auto road_t = road_times(x, capacity);
        const auto rail_t = opt.frozen ? opt.frozen->rail_times : rail_times(x, state.rail.K_R);
        const auto [trip_time, trip_km] = sav_trip(x.G_S, road_t);

        // SAV level of service as seen by travellers for total SAV demand g.
        // The wait is filtered within the year; costs enter with the
        // perception lag, which keeps the root below unique.
        auto service_at = [&](double g, SAVLevel& lv) {
            lv = sav_level(g, state.S_S, trip_time, trip_km);
            if (opt.frozen) return SAVServiceState{lv.wait, opt.frozen->perceived.cost_op, opt.frozen->perceived.cost_ae};
            return SAVServiceState{perceive(state.perceived.wait, lv.wait, p.filter_tau, dt), state.perceived.cost_op,
                                   state.perceived.cost_ae};
        };
        // Best evaluated point of the root search, by |excess|.
        SAVLevel lv;
        ModeSplit y;
        SAVServiceState seen;
        double best_abs = INFINITY;
        auto excess = [&](double g) {
            SAVLevel l;
            const auto sv = service_at(g, l);
            auto split = choose(road_t, rail_t, rail_ae, sv);
            const double f = detail::total(split.G_S) - g;
            if (std::abs(f) < best_abs) {
                best_abs = std::abs(f);
                lv = l;
                y = std::move(split);
                seen = sv;
            }
            return f;
        };

        // Total SAV demand consistent with its own wait, bracketed around
        // the previous iterate's root. Without a fleet the wait does not
        // depend on it.
        if (state.S_S > 0.0 && G_total > 0.0) {
            double a = 0.0, b = G_total, fa = 0.0, fb = 0.0;
            bool bracketed = false;
            if (g_prev > 0.0 && g_prev < G_total) {
                double w = 1e-3 * g_prev;
                a = g_prev - w;
                b = g_prev + w;
                fa = excess(a);
                fb = excess(b);
                for (int grow = 0; grow < 12 && !(fa > 0.0 && fb < 0.0); ++grow) {
                    w *= 4.0;
                    if (fa <= 0.0) {
                        a = std::max(0.0, g_prev - w);
                        fa = excess(a);
                    }
                    if (fb >= 0.0) {
                        b = std::min(G_total, g_prev + w);
                        fb = excess(b);
                    }
                    if ((a == 0.0 && fa <= 0.0) || (b == G_total && fb >= 0.0)) break;
                }
                bracketed = fa > 0.0 && fb < 0.0;
            }
            if (!bracketed) {
                a = 0.0;
                b = G_total;
                fa = excess(a);
                fb = fa > 0.0 ? excess(b) : 0.0;
                bracketed = fa > 0.0 && fb < 0.0;
            }
            if (bracketed) {
                std::uintmax_t budget = 200;
                const auto close = [&](double lo, double hi) { return std::abs(hi - lo) <= 1e-13 * G_total; };
                boost::math::tools::toms748_solve(excess, a, b, fa, fb, close, budget);
            }
            // Unbracketed: excess(0) <= 0 gives no SAV demand, excess(G) >= 0
            // all of it; both endpoints were evaluated and the better kept.
        } else {
            excess(0.0);
        }
        g_prev = detail::total(y.G_S);

        double residual = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (demand_[k] <= 0.0) continue;
            const double d = std::max({std::abs(y.G_H[k] - x.G_H[k]), std::abs(y.G_S[k] - x.G_S[k]),
                                       std::abs(y.G_R[k] - x.G_R[k])});
            residual = std::max(residual, d / demand_[k]);
        }
        eq.iterations = iter;
        eq.residual = residual;
        // Halve the step whenever the residual grows (oscillation).
        if (residual >= last_residual) gamma = std::max(gamma * 0.5, 1.0 / 1024.0);
        last_residual = residual;
        if (residual <= tol) {
            eq.split = std::move(y);
            eq.road_times = road_t;
            eq.rail_times = rail_t;
            eq.link_capacity = capacity;
            eq.wait = lv.wait;
            eq.utilisation = lv.utilisation;
            eq.costs = lv.costs;
            eq.perceived = seen;
            eq.trip_time = trip_time;
            eq.trip_km = trip_km;
            return eq;
        }
        for (std::size_t k = 0; k < n; ++k) {
            x.G_H[k] = (1.0 - gamma) * x.G_H[k] + gamma * y.G_H[k];
            x.G_S[k] = (1.0 - gamma) * x.G_S[k] + gamma * y.G_S[k];
            x.G_R[k] = demand_[k] - x.G_H[k] - x.G_S[k];
            if (!rail_available_[k]) {
                x.G_S[k] += x.G_R[k];
                x.G_R[k] = 0.0;
            }
        }
    }
    throw ConvergenceError("year " + std::to_string(state.year + 1) + ": equilibrium did not converge in " +
                               std::to_string(max_iter) + " iterations",
                           eq.residual);
}

inline void MobilityModel::prepare() {
    const auto& p = sc_.params;
    const std::size_t n = sc_.od_demand.size();
    demand_.resize(n);
    for (std::size_t k = 0; k < n; ++k) demand_[k] = sc_.od_demand[k].demand;
    road_costs_ = road_link_costs(sc_.road_network);
    line_count_ = sc_.line_count();
    line_length_ = sc_.line_length();

    const UEOptions ue_opt{p.ue_relative_gap, static_cast<int>(p.ue_max_iterations), p.path_share_threshold};
    const auto rail_paths_set = rail_paths(sc_.rail_network, sc_.road_network.node_count(), sc_.od_demand);
    rail_available_.assign(n, false);
    for (std::size_t k = 0; k < n; ++k) rail_available_[k] = !rail_paths_set.od[k].paths.empty();

    // Linearise around the no-SAV base year: alternate between UE on the
    // car demand and the base-year mode split.
    std::vector<double> car(demand_);
    std::vector<double> rail_demand(n, 0.0);
    SystemState base;
    base.perceived = {p.wait_cap, p.C_S_c_op, p.C_S_c_ae};
    for (int round = 0; round < 3; ++round) {
        ODMatrix car_od = sc_.od_demand;
        for (std::size_t k = 0; k < n; ++k) car_od[k].demand = car[k];
        ue_ = solve_user_equilibrium(sc_.road_network, car_od, ue_opt);
        road_ = build_affine_model(road_costs_, ue_.paths, car);

        const auto rs = rail_update(detail::total(rail_demand), line_count_, line_length_, p);
        rail_ = build_affine_model(rail_link_costs(sc_.rail_network, rs.K_R, p.commercial_speed, p.rail_bpr_alpha,
                                                   p.rail_bpr_beta),
                                   rail_paths_set, rail_demand);
        base.rail = rs;
        base_eq_ = solve_year_equilibrium(base);
        base.last_split = base_eq_.split;
        car = car_demand(base_eq_.split);
        rail_demand = base_eq_.split.G_R;
    }
    base_car_ = car;
    ODMatrix car_od = sc_.od_demand;
    for (std::size_t k = 0; k < n; ++k) car_od[k].demand = car[k];
    ue_ = solve_user_equilibrium(sc_.road_network, car_od, ue_opt);
    road_ = build_affine_model(road_costs_, ue_.paths, car);
    base.rail = rail_update(detail::total(rail_demand), line_count_, line_length_, p);
    rail_ = build_affine_model(
        rail_link_costs(sc_.rail_network, base.rail.K_R, p.commercial_speed, p.rail_bpr_alpha, p.rail_bpr_beta),
        rail_paths_set, rail_demand);
    base_eq_ = solve_year_equilibrium(base);
    base.last_split = base_eq_.split;
    base.rail = rail_update(detail::total(base_eq_.split.G_R), line_count_, line_length_, p);
    base.hv = initial_hv_stock(hv_vkm(base_eq_.split.G_H, road_.distance, p.working_hours), p);
    initial_ = base;
}

/// Advances one year with `u` SAVs added.
inline std::pair<SystemState, TrajectoryRecord> step_year(const MobilityModel& model, const SystemState& state,
                                                          double u) {
    const auto& p = model.params();
    SystemState next = state;
    next.S_S = sav_stock_step(state.S_S, u, p.sav_survival);
    const auto eq = model.solve_year_equilibrium(next);
    next.perceived.wait = eq.perceived.wait;
    next.perceived.cost_op = perceive(state.perceived.cost_op, eq.costs.op, p.filter_tau, 1.0);
    next.perceived.cost_ae = perceive(state.perceived.cost_ae, eq.costs.ae, p.filter_tau, 1.0);
    next.last_split = eq.split;
    next.year = state.year + 1;

    const auto& x = eq.split;
    const double G_R = detail::total(x.G_R);
    next.rail = rail_update(G_R, model.line_count(), model.line_length(), p);
    const double vkm_H = hv_vkm(x.G_H, model.road_model().distance, p.working_hours);
    next.hv = hv_stock_step(state.hv, vkm_H, p).stock;

    ImpactRecord imp;
    imp.D_S = hv_vkm(x.G_S, model.road_model().distance, p.working_hours);
    const double U = next.S_S > 0.0 ? imp.D_S / next.S_S / p.benchmark_mileage : 1.0;
    imp.C_S = sav_operator_cost(imp.D_S, u, U, p);
    imp.D_R = hv_vkm(x.G_R, model.rail_model().distance, p.working_hours) / (p.train_capacity * p.occupancy_rate);
    const auto rc = rail_operator_cost(imp.D_R, next.rail.S_R, p);
    imp.C_R = rc.total;
    imp.C_R_dep = rc.dep;
    imp.E = emissions(next.hv, p.epsilon_a, p.M);
    next.xi = accumulate(state.xi, imp.E);
    imp.xi = next.xi;

    TrajectoryRecord r;
    r.year = static_cast<int>(model.scenario().base_year) + state.year;
    r.u = u;
    r.S_S = next.S_S;
    r.S_R = next.rail.S_R;
    r.S_H = next.hv.total();
    r.S_H_thermal = next.hv.thermal();
    r.S_H_electric = next.hv.electric();
    r.G_H = detail::total(x.G_H);
    r.G_S = detail::total(x.G_S);
    r.G_R = G_R;
    double wc = 0.0, wr = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double c = x.G_H[k] + x.G_S[k];
        r.t_A += c * eq.road_times[k];
        wc += c;
        r.t_R += x.G_R[k] * eq.rail_times[k];
        wr += x.G_R[k];
    }
    r.t_A = wc > 0.0 ? r.t_A / wc : 0.0;
    r.t_R = wr > 0.0 ? r.t_R / wr : 0.0;
    r.t_S_w = eq.wait;
    r.t_R_ae = eq.rail_ae;
    r.F_R = next.rail.F_R;
    r.K_A = detail::total(eq.link_capacity) / static_cast<double>(eq.link_capacity.size());
    r.K_R = next.rail.K_R;
    r.C_S = imp.C_S;
    r.C_R = imp.C_R;
    r.E = imp.E;
    r.xi = imp.xi;
    r.D_S = imp.D_S;
    r.D_R = imp.D_R;
    r.U = next.S_S > 0.0 ? U : 0.0;
    return {std::move(next), r};
}

struct ForecastResult {
    std::vector<TrajectoryRecord> records;
    std::vector<SystemState> states;  // states[t] is the state before year t; size T + 1
    double total_cost = 0.0;          // sum of C_S + C_R, EUR
    double xi_T = 0.0;                // t
};

/// Runs `policy` from `start` (default: the model's initial state). When
/// `from_year` > 0, `prefix` must hold the states and records of an earlier
/// run of the same policy prefix; only years from `from_year` on are
/// re-simulated.
inline ForecastResult forecast(const MobilityModel& model, const std::vector<double>& policy,
                               const ForecastResult* prefix = nullptr, std::size_t from_year = 0) {
    ForecastResult out;
    out.states.reserve(policy.size() + 1);
    out.records.reserve(policy.size());
    if (prefix && from_year > 0) {
        out.states.assign(prefix->states.begin(), prefix->states.begin() + static_cast<std::ptrdiff_t>(from_year) + 1);
        out.records.assign(prefix->records.begin(), prefix->records.begin() + static_cast<std::ptrdiff_t>(from_year));
    } else {
        out.states.push_back(model.initial_state());
        from_year = 0;
    }
    for (std::size_t t = from_year; t < policy.size(); ++t) {
        auto [s, r] = step_year(model, out.states.back(), policy[t]);
        out.states.push_back(std::move(s));
        out.records.push_back(r);
    }
    for (const auto& r : out.records) out.total_cost += r.C_S + r.C_R;
    out.xi_T = out.records.empty() ? 0.0 : out.records.back().xi;
    return out;
}

inline std::vector<double> constant_policy(double u, int years) {
    if (u < 0.0) throw ModelError("policy values must be non-negative");
    return std::vector<double>(static_cast<std::size_t>(years), u);
}

}  // namespace mobility
