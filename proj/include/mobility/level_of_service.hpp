#pragma once

// SAV waiting time from a finite-population M/M/s queue, utilisation-driven
// SAV customer costs, first-order perception filters, and rail
// access/egress times.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mobility/error.hpp"
#include "mobility/params.hpp"

namespace mobility {

/// Stationary solution of the machine-repair chain: N customers, each
/// requesting at `request_rate` while not in the system; `servers` parallel
/// servers at `service_rate` each. Rates are per hour.
struct QueueResult {
    int first_state = 0;              // state index of probabilities[0]
    std::vector<double> probabilities;  // states outside the window carry < 1e-20 relative mass
    double L = 0.0;           // mean number in system
    double Lq = 0.0;          // mean number waiting
    double lambda_eff = 0.0;  // effective arrival rate (1/h)
    double Wq = 0.0;          // mean wait (h); infinite without servers

    double probability(int n) const {
        const int i = n - first_state;
        return (i >= 0 && i < static_cast<int>(probabilities.size())) ? probabilities[static_cast<std::size_t>(i)]
                                                                       : 0.0;
    }
};

namespace detail {

/// Mode of the machine-repair chain and its ratio p_{n+1} / p_n.
struct RepairChain {
    int N, s;
    double lambda, mu;

    double ratio(int n) const { return (N - n) * lambda / (std::min(n + 1, s) * mu); }

    /// First n with ratio(n) < 1, or N; the ratio decreases in n.
    int mode() const {
        int lo = 0, hi = N;
        while (lo < hi) {
            const int mid = lo + (hi - lo) / 2;
            if (ratio(mid) < 1.0)
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    }

    /// Visits the unnormalised probabilities outward from the mode (mode
    /// first, then upward, then downward) until they drop below `cutoff`.
    template <class Visit>
    void walk(double cutoff, Visit&& visit) const {
        const int m = mode();
        visit(m, 1.0);
        double cur = 1.0;
        for (int n = m; n < N; ++n) {
            cur *= ratio(n);
            if (cur < cutoff) break;
            visit(n + 1, cur);
        }
        cur = 1.0;
        for (int n = m; n > 0; --n) {
            cur /= ratio(n - 1);
            if (cur < cutoff) break;
            visit(n - 1, cur);
        }
    }
};

constexpr double kQueueCutoff = 1e-20;

}  // namespace detail

inline QueueResult finite_population_queue(int servers, int population, double request_rate, double service_rate) {
    if (servers < 0 || population < 0 || !(request_rate >= 0.0) || !(service_rate > 0.0))
        throw ModelError("finite_population_queue: invalid rates or sizes");
    QueueResult q;
    if (population == 0 || request_rate == 0.0) {
        q.probabilities = {1.0};
        return q;
    }
    if (servers == 0) {
        // Every customer ends up waiting forever.
        q.first_state = population;
        q.probabilities = {1.0};
        q.L = q.Lq = population;
        q.Wq = std::numeric_limits<double>::infinity();
        return q;
    }

    const detail::RepairChain chain{population, servers, request_rate, service_rate};
    int lo = population, hi = 0;
    chain.walk(detail::kQueueCutoff, [&](int n, double) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    });
    q.first_state = lo;
    q.probabilities.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    chain.walk(detail::kQueueCutoff, [&](int n, double p) { q.probabilities[static_cast<std::size_t>(n - lo)] = p; });
    double total = 0.0;
    for (double p : q.probabilities) total += p;
    for (double& p : q.probabilities) p /= total;

    for (std::size_t i = 0; i < q.probabilities.size(); ++i) {
        const int n = q.first_state + static_cast<int>(i);
        q.L += n * q.probabilities[i];
        if (n > servers) q.Lq += (n - servers) * q.probabilities[i];
    }
    q.lambda_eff = request_rate * (population - q.L);
    q.Wq = q.lambda_eff > 0.0 ? q.Lq / q.lambda_eff : 0.0;
    return q;
}

/// Mean wait (h) of the chain without storing the distribution.
inline double finite_population_wait(int servers, int population, double request_rate, double service_rate) {
    if (servers <= 0 || population <= 0 || !(request_rate > 0.0) || !(service_rate > 0.0))
        return finite_population_queue(servers, population, request_rate, service_rate).Wq;
    const detail::RepairChain chain{population, servers, request_rate, service_rate};
    double P = 0.0, L = 0.0, Lq = 0.0;
    chain.walk(detail::kQueueCutoff, [&](int n, double p) {
        P += p;
        L += n * p;
        if (n > servers) Lq += (n - servers) * p;
    });
    L /= P;
    Lq /= P;
    const double lambda_eff = request_rate * (population - L);
    return lambda_eff > 0.0 ? Lq / lambda_eff : 0.0;
}

struct QueueParams {
    double population_factor = 6.0;
    double request_cycle = 1.0;    // h
    double pickup_overhead = 3.0;  // min
    double wait_cap = 60.0;        // min

    static QueueParams from(const ParamSet& p) {
        return {p.queue_population_factor, p.queue_request_cycle, p.pickup_overhead, p.wait_cap};
    }
};

/// Mean SAV waiting time (min) for total SAV demand `G_S_total` (pax/h),
/// fleet `S_S` and mean trip time (min). The customer population is
/// G_S * trip hours * population_factor; service time is the trip plus the
/// pickup overhead. Non-integer populations and fleets interpolate linearly
/// between neighbouring integer chains, so the wait is continuous in both.
/// Without servers the wait is the cap.
inline double sav_wait_time(double G_S_total, double S_S, double mean_trip_time, const QueueParams& qp) {
    if (G_S_total < 0.0 || S_S < 0.0 || mean_trip_time < 0.0) throw ModelError("sav_wait_time: negative input");
    if (G_S_total == 0.0) return 0.0;
    if (S_S == 0.0) return qp.wait_cap;
    const double population = G_S_total * mean_trip_time / 60.0 * qp.population_factor;
    const double service_rate = 60.0 / (mean_trip_time + qp.pickup_overhead);
    const double request_rate = 1.0 / qp.request_cycle;

    auto wait_at = [&](int servers, int customers) {
        if (servers == 0) return customers == 0 ? 0.0 : qp.wait_cap;
        if (servers >= customers) return 0.0;
        return std::min(qp.wait_cap, 60.0 * finite_population_wait(servers, customers, request_rate, service_rate));
    };
    const double s_floor = std::floor(S_S), n_floor = std::floor(population);
    const double fs = S_S - s_floor, fn = population - n_floor;
    const int s0 = static_cast<int>(s_floor), n0 = static_cast<int>(n_floor);
    auto along_n = [&](int s) {
        const double w0 = wait_at(s, n0);
        return fn == 0.0 ? w0 : (1.0 - fn) * w0 + fn * wait_at(s, n0 + 1);
    };
    const double w0 = along_n(s0);
    return fs == 0.0 ? w0 : (1.0 - fs) * w0 + fs * along_n(s0 + 1);
}

/// Annual km demanded per SAV over the benchmark profitable mileage.
inline double utilisation(double G_S_total, double S_S, double benchmark_mileage, double mean_trip_km,
                          double working_hours) {
    if (!(S_S > 0.0)) throw ModelError("utilisation: undefined without a fleet");
    return G_S_total * mean_trip_km * working_hours / S_S / benchmark_mileage;
}

/// Constant-elasticity factor max(U, floor)^-elasticity, clamped to
/// [min_fraction, ceiling].
inline double utilisation_factor(double U, double elasticity, double floor, double min_fraction, double ceiling) {
    const double f = std::pow(std::max(U, floor), -elasticity);
    return std::clamp(f, min_fraction, ceiling);
}

struct SAVCustomerCosts {
    double op = 0.0;  // EUR/km
    double ae = 0.0;  // EUR
};

inline SAVCustomerCosts sav_customer_costs(double U, const ParamSet& p) {
    if (U < 0.0) throw ModelError("sav_customer_costs: negative utilisation");
    const double f =
        utilisation_factor(U, p.elasticity_customer, p.utilisation_floor, p.cost_min_fraction, p.cost_ceiling_factor);
    return {p.C_S_c_op * f, p.C_S_c_ae * f};
}

/// One step of the first-order lag x' = x + (dt/tau)(raw - x).
inline double perceive(double prev, double raw, double tau, double dt) {
    if (!(tau > 0.0)) throw ModelError("perceive: tau must be positive");
    return prev + (dt / tau) * (raw - prev);
}

/// Perceived SAV level of service entering the utilities.
struct SAVServiceState {
    double wait = 0.0;     // min
    double cost_op = 0.0;  // EUR/km
    double cost_ae = 0.0;  // EUR
};

/// Walking (both ends) plus half-headway wait, in minutes.
inline double rail_access_egress(double F_R, double station_spacing, double walk_speed) {
    if (!(F_R > 0.0)) throw ModelError("rail_access_egress: no rail service");
    const double wait = 60.0 / (2.0 * F_R);
    const double walk = 2.0 * 60.0 * (station_spacing / 2.0) / walk_speed;
    return walk + wait;
}

}  // namespace mobility
