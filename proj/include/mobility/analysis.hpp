#pragma once

// Linearisation of the yearly equilibrium and its causal-loop reading.
//
// The simplified model behind the canonical graph holds rail times, F_R and
// SAV customer costs fixed and drops the perception filters. Its nodes are
// aggregates: SAV stock (veh), SAV wait (min), SAV and HV demand
// (pax km/h), mean road capacity (veh/h), car-demand-weighted mean road time
// (min) and HV emissions (t/y).

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <string>
#include <vector>

#include "mobility/error.hpp"
#include "mobility/flowgraph.hpp"
#include "mobility/polynomial.hpp"
#include "mobility/simulator.hpp"

namespace mobility {

/// Non-negative gain magnitudes k1..k12; k10 is not part of the graph.
struct GainSet {
    std::array<double, 13> k{};

    double& operator[](std::size_t i) { return k[i]; }
    double operator[](std::size_t i) const { return k[i]; }

    static constexpr std::array<int, 11> kUsed{1, 2, 3, 4, 5, 6, 7, 8, 9, 11, 12};
};

enum CanonicalNode { kStock = 0, kWait, kSAVDemand, kHVDemand, kCapacity, kTravelTime, kEmissions };

inline const std::array<std::string, 7>& canonical_node_names() {
    static const std::array<std::string, 7> names{"SAV stock", "SAV wait", "SAV demand", "HV demand",
                                                  "road capacity", "road travel time", "emissions"};
    return names;
}

/// Edge table (from, to, gain index, sign) of the canonical graph.
struct CanonicalEdge {
    int from, to, k, sign;
};
inline const std::array<CanonicalEdge, 12>& canonical_edges() {
    static const std::array<CanonicalEdge, 12> edges{{
        {kStock, kWait, 1, -1},
        {kWait, kSAVDemand, 2, -1},
        {kSAVDemand, kWait, 3, +1},
        {kSAVDemand, kTravelTime, 4, +1},
        {kHVDemand, kTravelTime, 4, +1},
        {kTravelTime, kSAVDemand, 5, -1},
        {kSAVDemand, kCapacity, 6, +1},
        {kCapacity, kTravelTime, 7, -1},
        {kTravelTime, kWait, 8, +1},
        {kTravelTime, kHVDemand, 9, -1},
        {kWait, kHVDemand, 11, +1},
        {kHVDemand, kEmissions, 12, +1},
    }};
    return edges;
}

template <class Gain, class GainOf>
SignalFlowGraph<Gain> build_canonical_graph(GainOf gain_of) {
    SignalFlowGraph<Gain> g;
    for (const auto& n : canonical_node_names()) g.add_node(n);
    for (const auto& e : canonical_edges()) {
        Gain v = gain_of(e.k);
        g.add_edge(e.from, e.to, e.sign > 0 ? v : Gain(0.0) - v);
    }
    return g;
}

inline SignalFlowGraph<double> canonical_graph(const GainSet& k) {
    return build_canonical_graph<double>([&](int i) { return k[static_cast<std::size_t>(i)]; });
}

using GainPolynomial = Polynomial<13>;

/// Canonical graph with the gains as symbols k1..k12.
inline SignalFlowGraph<GainPolynomial> canonical_graph_symbolic() {
    return build_canonical_graph<GainPolynomial>(
        [](int i) { return GainPolynomial::variable(static_cast<std::size_t>(i)); });
}

/// Named loop and path gains of the canonical graph.
struct CanonicalTerms {
    std::array<double, 9> L{};  // L[1..8]
    std::array<double, 4> P{};  // P[1..3]
};

inline CanonicalTerms canonical_terms(const GainSet& k) {
    CanonicalTerms t;
    t.L[1] = -k[2] * k[3];
    t.L[2] = -k[2] * k[4] * k[8];
    t.L[3] = k[2] * k[6] * k[7] * k[8];
    t.L[4] = k[11] * k[4] * k[8];
    t.L[5] = -k[11] * k[4] * k[5] * k[3];
    t.L[6] = -k[4] * k[5];
    t.L[7] = k[6] * k[7] * k[5];
    t.L[8] = -k[9] * k[4];
    t.P[1] = -k[1] * k[11] * k[12];
    t.P[2] = -k[1] * k[2] * k[4] * k[9] * k[12];
    t.P[3] = k[1] * k[2] * k[6] * k[7] * k[9] * k[12];
    return t;
}

/// Closed-form transfer from SAV stock to emissions on the canonical graph.
inline double canonical_transfer_closed_form(const GainSet& k) {
    const auto t = canonical_terms(k);
    double sum_L = 0.0;
    for (int i = 1; i <= 8; ++i) sum_L += t.L[static_cast<std::size_t>(i)];
    const double num = t.P[1] - t.P[1] * t.L[6] - t.P[1] * t.L[7] + t.P[2] + t.P[3];
    const double den = 1.0 - sum_L + t.L[1] * t.L[8];
    return num / den;
}

struct UndesiredEffect {
    bool flag = false;       // more SAVs raise emissions
    bool necessary = false;  // k6 k7 > k4
    double margin = 0.0;     // k6 k7 - k4
    double value = 0.0;      // numerator of T
};

inline UndesiredEffect undesired_effect_check(const GainSet& k) {
    UndesiredEffect r;
    r.margin = k[6] * k[7] - k[4];
    r.necessary = r.margin > 0.0;
    r.value = -k[1] * k[12] * (k[11] + (k[4] - k[6] * k[7]) * (k[11] * k[5] + k[2] * k[9]));
    r.flag = r.value > 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Linearisation

/// Passenger-km per hour of an OD flow vector.
inline double pax_km(const std::vector<double>& G, const std::vector<double>& distance) {
    double s = 0.0;
    for (std::size_t k = 0; k < G.size(); ++k) s += G[k] * distance[k];
    return s;
}

/// The state entering year t's equilibrium (fleet already topped up) and the
/// simplified-model equilibrium there.
struct OperatingPoint {
    SystemState state;
    EquilibriumPoint actual;      // with perception filters
    EquilibriumPoint simplified;  // filters removed, costs and rail frozen at `actual`
};

/// Operating point of year `t` (1-based) of a forecast.
inline OperatingPoint operating_point(const MobilityModel& model, const ForecastResult& run, int t) {
    if (t < 1 || static_cast<std::size_t>(t) >= run.states.size())
        throw ModelError("operating_point: year " + std::to_string(t) + " outside the forecast");
    OperatingPoint op;
    op.state = run.states[static_cast<std::size_t>(t) - 1];
    op.state.S_S = run.states[static_cast<std::size_t>(t)].S_S;
    op.actual = model.solve_year_equilibrium(op.state);
    op.simplified = model.solve_year_equilibrium(op.state, {&op.actual});
    op.state.last_split = op.simplified.split;
    return op;
}

/// Quasi-static HV emissions (t/y) of the simplified model: emission factor
/// of the current HV fleet times HV vehicle-km.
struct EmissionRate {
    double per_vkm = 0.0;  // t/vkm
    double hours = 0.0;

    double operator()(const ModeSplit& x, const std::vector<double>& distance) const {
        return per_vkm * hours * pax_km(x.G_H, distance);
    }
};

inline EmissionRate emission_rate(const MobilityModel& model, const HVStock& hv) {
    const auto& p = model.params();
    const double total = hv.total();
    if (!(total > 0.0)) throw ModelError("emission_rate: empty HV fleet");
    return {emissions(hv, p.epsilon_a, p.M) / (total * p.M), p.working_hours};
}

struct Linearization {
    GainSet gains;
    double D_S = 0.0;    // pax km/h
    double D_H = 0.0;    // pax km/h
    double wait = 0.0;   // min
    double T_bar = 0.0;  // min
    double K_bar = 0.0;  // veh/h
    double E = 0.0;      // t/y
};

/// Central finite-difference gains at the simplified equilibrium of `op`.
/// Throws when an estimate has the wrong sign.
inline Linearization linearize(const MobilityModel& model, const OperatingPoint& op, double rel_step = 1e-3) {
    if (!(rel_step > 0.0 && rel_step < 0.5)) throw ModelError("linearize: rel_step must be in (0, 0.5)");
    const auto& eq = op.simplified;
    const auto& st = op.state;
    const auto& dist = model.road_model().distance;
    const double h = rel_step;
    const std::size_t n = model.od_count();
    const auto car = MobilityModel::car_demand(eq.split);

    Linearization lin;
    lin.D_S = pax_km(eq.split.G_S, dist);
    lin.D_H = pax_km(eq.split.G_H, dist);
    lin.wait = eq.wait;

    const double car_total = detail::total(car);
    auto mean_time = [&](const std::vector<double>& t) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += car[k] * t[k];
        return s / car_total;
    };
    auto mean_capacity = [](const std::vector<double>& c) { return detail::total(c) / static_cast<double>(c.size()); };
    lin.T_bar = mean_time(eq.road_times);
    lin.K_bar = mean_capacity(eq.link_capacity);

    auto scaled = [](std::vector<double> v, double f) {
        for (double& x : v) x *= f;
        return v;
    };
    auto& k = lin.gains;
    auto set = [&](int i, double value, double plus, double minus) {
        // Roundoff-sized negatives are zero; anything larger breaks the sign table.
        if (value < 0.0 && std::abs(plus - minus) > 1e-10 * (std::abs(plus) + std::abs(minus)))
            throw ModelError("linearize: k" + std::to_string(i) + " has the wrong sign (" +
                             text::format_double(value) + ")");
        k[static_cast<std::size_t>(i)] = std::max(value, 0.0);
    };

    // Wait: queue at (S_S, total SAV demand, SAV trip time).
    const double G_S = detail::total(eq.split.G_S);
    auto wait = [&](double g, double S, double trip) { return model.sav_level(g, S, trip, eq.trip_km).wait; };
    if (st.S_S > 0.0 && G_S > 0.0) {
        const double wp = wait(G_S, st.S_S * (1 + h), eq.trip_time), wm = wait(G_S, st.S_S * (1 - h), eq.trip_time);
        set(1, -(wp - wm) / (2 * h * st.S_S), wp, wm);
        const double gp = wait(G_S * (1 + h), st.S_S, eq.trip_time), gm = wait(G_S * (1 - h), st.S_S, eq.trip_time);
        set(3, (gp - gm) / (2 * h * lin.D_S), gp, gm);
        const double tp = wait(G_S, st.S_S, eq.trip_time * (1 + h)), tm = wait(G_S, st.S_S, eq.trip_time * (1 - h));
        set(8, (tp - tm) / (2 * h * lin.T_bar), tp, tm);
    }

    // Mode choice against wait and road times.
    auto choose = [&](const std::vector<double>& road_t, double w) {
        return model.choose(road_t, eq.rail_times, eq.rail_ae, {w, eq.perceived.cost_op, eq.perceived.cost_ae});
    };
    {
        const double d = h * std::max(eq.wait, 1.0);
        const auto up = choose(eq.road_times, eq.wait + d), dn = choose(eq.road_times, eq.wait - d);
        const double sp = pax_km(up.G_S, dist), sm = pax_km(dn.G_S, dist);
        const double hp = pax_km(up.G_H, dist), hm = pax_km(dn.G_H, dist);
        set(2, -(sp - sm) / (2 * d), sp, sm);
        set(11, (hp - hm) / (2 * d), hp, hm);
    }
    {
        const auto up = choose(scaled(eq.road_times, 1 + h), eq.wait), dn = choose(scaled(eq.road_times, 1 - h), eq.wait);
        const double sp = pax_km(up.G_S, dist), sm = pax_km(dn.G_S, dist);
        const double hp = pax_km(up.G_H, dist), hm = pax_km(dn.G_H, dist);
        set(5, -(sp - sm) / (2 * h * lin.T_bar), sp, sm);
        set(9, -(hp - hm) / (2 * h * lin.T_bar), hp, hm);
    }

    // Road times against car demand and capacity.
    {
        const double tp = mean_time(affine_od_times(model.road_model(), scaled(car, 1 + h), eq.link_capacity));
        const double tm = mean_time(affine_od_times(model.road_model(), scaled(car, 1 - h), eq.link_capacity));
        set(4, (tp - tm) / (2 * h * (lin.D_S + lin.D_H)), tp, tm);
        const double cp = mean_time(affine_od_times(model.road_model(), car, scaled(eq.link_capacity, 1 + h)));
        const double cm = mean_time(affine_od_times(model.road_model(), car, scaled(eq.link_capacity, 1 - h)));
        set(7, -(cp - cm) / (2 * h * lin.K_bar), cp, cm);
    }

    // Capacity against SAV demand at fixed HV demand.
    if (lin.D_S > 0.0) {
        ModeSplit up = eq.split, dn = eq.split;
        up.G_S = scaled(eq.split.G_S, 1 + h);
        dn.G_S = scaled(eq.split.G_S, 1 - h);
        const double kp = mean_capacity(model.link_capacities(up)), km = mean_capacity(model.link_capacities(dn));
        set(6, (kp - km) / (2 * h * lin.D_S), kp, km);
    }

    const auto rate = emission_rate(model, st.hv);
    k[12] = rate.per_vkm * rate.hours;
    lin.E = rate(eq.split, dist);
    return lin;
}

/// Emission response dE/dS_S (t/y per veh) of the simplified model itself:
/// the equilibrium re-solved with the fleet scaled by (1 + rel_change).
inline double simplified_emission_response(const MobilityModel& model, const OperatingPoint& op, double rel_change) {
    const auto rate = emission_rate(model, op.state.hv);
    const auto& dist = model.road_model().distance;
    SystemState s = op.state;
    s.S_S = op.state.S_S * (1.0 + rel_change);
    const auto eq = model.solve_year_equilibrium(s, {&op.actual});
    return (rate(eq.split, dist) - rate(op.simplified.split, dist)) / (s.S_S - op.state.S_S);
}

struct TransferReport {
    TransferResult<double> mason;
    double T = 0.0;         // t/y per veh
    double T_linear = 0.0;  // direct linear solve, same graph
    UndesiredEffect effect;
};

inline TransferReport analyse_gains(const GainSet& k) {
    TransferReport r;
    const auto g = canonical_graph(k);
    r.mason = mason_transfer(g, kStock, kEmissions);
    r.T = transfer_value(r.mason);
    r.T_linear = linear_transfer(g, kStock, kEmissions);
    r.effect = undesired_effect_check(k);
    return r;
}

/// Canonical name ("L1".."L8", "P1".."P3") of a loop or path of the
/// canonical graph, from its node set; empty when it is not canonical.
inline std::string canonical_label(std::uint64_t mask, bool path) {
    auto m = [](std::initializer_list<int> nodes) {
        std::uint64_t r = 0;
        for (int v : nodes) r |= std::uint64_t{1} << v;
        return r;
    };
    const std::pair<std::uint64_t, const char*> loops[] = {
        {m({kWait, kSAVDemand}), "L1"},
        {m({kWait, kSAVDemand, kTravelTime}), "L2"},
        {m({kWait, kSAVDemand, kCapacity, kTravelTime}), "L3"},
        {m({kWait, kHVDemand, kTravelTime}), "L4"},
        {m({kWait, kHVDemand, kTravelTime, kSAVDemand}), "L5"},
        {m({kSAVDemand, kTravelTime}), "L6"},
        {m({kSAVDemand, kCapacity, kTravelTime}), "L7"},
        {m({kHVDemand, kTravelTime}), "L8"},
    };
    const std::pair<std::uint64_t, const char*> paths[] = {
        {m({kStock, kWait, kHVDemand, kEmissions}), "P1"},
        {m({kStock, kWait, kSAVDemand, kTravelTime, kHVDemand, kEmissions}), "P2"},
        {m({kStock, kWait, kSAVDemand, kCapacity, kTravelTime, kHVDemand, kEmissions}), "P3"},
    };
    if (path) {
        for (const auto& [mm, name] : paths)
            if (mm == mask) return name;
    } else {
        for (const auto& [mm, name] : loops)
            if (mm == mask) return name;
    }
    return {};
}

/// Structural sign (+1 / -1) of a chain of the canonical graph: the product
/// of its edge signs, independent of the gain magnitudes.
inline int canonical_sign(const std::vector<int>& nodes, bool closed) {
    auto edge_sign = [](int a, int b) {
        for (const auto& e : canonical_edges())
            if (e.from == a && e.to == b) return e.sign;
        throw ModelError("canonical_sign: not an edge of the canonical graph");
    };
    int s = 1;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) s *= edge_sign(nodes[i], nodes[i + 1]);
    if (closed) s *= edge_sign(nodes.back(), nodes.front());
    return s;
}

/// Everything the analysis reports for one simulated year.
struct YearAnalysis {
    int year = 0;  // calendar year
    OperatingPoint point;
    Linearization lin;
    TransferReport transfer;
};

inline YearAnalysis analyse_year(const MobilityModel& model, const ForecastResult& run, int t,
                                 double rel_step = 1e-3) {
    YearAnalysis a;
    a.year = model.scenario().base_year + t - 1;
    a.point = operating_point(model, run, t);
    a.lin = linearize(model, a.point, rel_step);
    a.transfer = analyse_gains(a.lin.gains);
    return a;
}

}  // namespace mobility
