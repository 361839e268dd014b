#pragma once

// Affine OD travel-time model over fixed path sets.
//
// Each link's BPR congestion term is linearised around the base flow:
//   t_l(v; K) = t0_l + (K_ref/K)^beta * max(0, c_l + s_l v)
// and OD times are share-weighted sums of link times. At reference
// capacities this is t_OD = t_base + S g, with S = A diag(s) A^T where A is
// the OD-link incidence of the path set. The clamp at zero keeps times at
// or above free flow for demand far below the linearisation point.

#include <cmath>
#include <vector>

#include "mobility/assignment.hpp"
#include "mobility/error.hpp"
#include "mobility/network.hpp"

namespace mobility {

/// Volume-delay inputs of one link.
struct LinkCost {
    double free_flow = 0.0;  // min
    double capacity = 0.0;   // reference capacity
    double alpha = 0.0;
    double beta = 1.0;
    double length = 0.0;  // km
};

struct AffineTTModel {
    std::vector<double> free_flow;     // per link, min
    std::vector<double> intercept;     // per link, min
    std::vector<double> slope;         // per link, min per flow unit
    std::vector<double> ref_capacity;  // per link
    std::vector<double> beta;          // per link
    /// Per OD: (link, share of OD flow using it).
    std::vector<std::vector<std::pair<int, double>>> incidence;
    std::vector<double> distance;    // per OD, share-weighted path length (km)
    std::vector<double> base_times;  // per OD, intercept of t = base_times + S g
    std::vector<double> S;           // row-major n_od x n_od, min per flow unit
    std::vector<bool> served;        // OD has at least one path

    std::size_t od_count() const { return incidence.size(); }
    std::size_t link_count() const { return free_flow.size(); }
    double sensitivity(std::size_t row, std::size_t col) const { return S[row * od_count() + col]; }
};

inline std::vector<LinkCost> road_link_costs(const RoadNetwork& net) {
    std::vector<LinkCost> out;
    out.reserve(net.links.size());
    for (const auto& l : net.links) out.push_back({l.free_flow, l.capacity, l.alpha, l.beta, l.length});
    return out;
}

/// Rail links at a uniform capacity `capacity` (pax/h).
inline std::vector<LinkCost> rail_link_costs(const RailNetwork& rail, double capacity, double speed_kmh,
                                             double alpha, double beta) {
    std::vector<LinkCost> out;
    out.reserve(rail.links.size());
    for (const auto& l : rail.links) out.push_back({60.0 * l.length / speed_kmh, capacity, alpha, beta, l.length});
    return out;
}

/// Linearises the link costs around the flows that `base_demand` induces
/// on `paths`.
inline AffineTTModel build_affine_model(const std::vector<LinkCost>& links, const PathSet& paths,
                                        const std::vector<double>& base_demand) {
    const std::size_t nl = links.size();
    const std::size_t nod = paths.size();
    if (base_demand.size() != nod) throw ModelError("build_affine_model: demand size mismatch");
    AffineTTModel m;
    m.free_flow.resize(nl);
    m.intercept.resize(nl);
    m.slope.resize(nl);
    m.ref_capacity.resize(nl);
    m.beta.resize(nl);

    const auto base_flow = load_paths(paths, base_demand, static_cast<int>(nl));
    for (std::size_t l = 0; l < nl; ++l) {
        const auto& c = links[l];
        if (!(c.capacity > 0.0)) throw ModelError("build_affine_model: capacity must be positive");
        const double v = base_flow[l];
        const double congestion = bpr_time(v, c.capacity, c.free_flow, c.alpha, c.beta) - c.free_flow;
        const double s = bpr_slope(v, c.capacity, c.free_flow, c.alpha, c.beta);
        m.free_flow[l] = c.free_flow;
        m.slope[l] = s;
        m.intercept[l] = congestion - s * v;
        m.ref_capacity[l] = c.capacity;
        m.beta[l] = c.beta;
    }

    m.incidence.resize(nod);
    m.distance.assign(nod, 0.0);
    m.served.assign(nod, false);
    for (std::size_t k = 0; k < nod; ++k) {
        std::vector<double> dense(nl, 0.0);
        const auto& od = paths.od[k];
        for (std::size_t p = 0; p < od.paths.size(); ++p)
            for (int l : od.paths[p]) dense[static_cast<std::size_t>(l)] += od.shares[p];
        for (std::size_t l = 0; l < nl; ++l)
            if (dense[l] != 0.0) {
                m.incidence[k].emplace_back(static_cast<int>(l), dense[l]);
                m.distance[k] += dense[l] * links[l].length;
            }
        m.served[k] = !od.paths.empty();
    }

    m.S.assign(nod * nod, 0.0);
    m.base_times.assign(nod, 0.0);
    for (std::size_t r = 0; r < nod; ++r) {
        std::vector<double> weighted(nl, 0.0);
        double t = 0.0;
        for (const auto& [l, a] : m.incidence[r]) {
            weighted[static_cast<std::size_t>(l)] = a * m.slope[static_cast<std::size_t>(l)];
            t += a * (m.free_flow[static_cast<std::size_t>(l)] + m.intercept[static_cast<std::size_t>(l)]);
        }
        m.base_times[r] = t;
        for (std::size_t c = 0; c < nod; ++c) {
            double s = 0.0;
            for (const auto& [l, a] : m.incidence[c]) s += weighted[static_cast<std::size_t>(l)] * a;
            m.S[r * nod + c] = s;
        }
    }
    return m;
}

/// Link flows implied by per-OD demand under the model's path shares.
inline std::vector<double> model_link_flows(const AffineTTModel& m, const std::vector<double>& demand) {
    std::vector<double> flow(m.link_count(), 0.0);
    for (std::size_t k = 0; k < m.od_count(); ++k) {
        if (demand[k] == 0.0) continue;
        for (const auto& [l, a] : m.incidence[k]) flow[static_cast<std::size_t>(l)] += a * demand[k];
    }
    return flow;
}

/// Link times of the linearised model at the given flows and capacities.
inline std::vector<double> model_link_times(const AffineTTModel& m, const std::vector<double>& flow,
                                            const std::vector<double>& capacity) {
    std::vector<double> t(m.link_count());
    for (std::size_t l = 0; l < t.size(); ++l) {
        if (!(capacity[l] > 0.0)) throw ModelError("od_travel_times: capacity must be positive");
        const double rescale = std::pow(m.ref_capacity[l] / capacity[l], m.beta[l]);
        t[l] = m.free_flow[l] + rescale * std::max(0.0, m.intercept[l] + m.slope[l] * flow[l]);
    }
    return t;
}

/// OD times (min) of the linearised model. Unserved ODs get 0.
inline std::vector<double> affine_od_times(const AffineTTModel& m, const std::vector<double>& demand,
                                           const std::vector<double>& capacity) {
    const auto flow = model_link_flows(m, demand);
    const auto lt = model_link_times(m, flow, capacity);
    std::vector<double> t(m.od_count(), 0.0);
    for (std::size_t k = 0; k < t.size(); ++k)
        for (const auto& [l, a] : m.incidence[k]) t[k] += a * lt[static_cast<std::size_t>(l)];
    return t;
}

/// Dense evaluation t_base + S g, valid at reference capacities while no
/// link clamp is active.
inline std::vector<double> affine_od_times_dense(const AffineTTModel& m, const std::vector<double>& demand) {
    const std::size_t n = m.od_count();
    std::vector<double> t(m.base_times);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) t[r] += m.S[r * n + c] * demand[c];
    return t;
}

/// OD times from full BPR link costs under fixed path shares.
inline std::vector<double> bpr_od_times(const std::vector<LinkCost>& links, const PathSet& paths,
                                        const std::vector<double>& demand, const std::vector<double>& capacity) {
    const auto flow = load_paths(paths, demand, static_cast<int>(links.size()));
    std::vector<double> t(paths.size(), 0.0);
    for (std::size_t k = 0; k < paths.size(); ++k) {
        const auto& od = paths.od[k];
        for (std::size_t p = 0; p < od.paths.size(); ++p) {
            double c = 0.0;
            for (int l : od.paths[p]) {
                const auto& lc = links[static_cast<std::size_t>(l)];
                c += bpr_time(flow[static_cast<std::size_t>(l)], capacity[static_cast<std::size_t>(l)], lc.free_flow,
                              lc.alpha, lc.beta);
            }
            t[k] += od.shares[p] * c;
        }
    }
    return t;
}

/// Per-link HV and SAV vehicle flows (veh/h), one passenger per vehicle.
struct LinkModeFlows {
    std::vector<double> hv;
    std::vector<double> sav;
};

inline LinkModeFlows link_mode_flows(const AffineTTModel& road, const std::vector<double>& G_H,
                                     const std::vector<double>& G_S) {
    for (std::size_t k = 0; k < G_H.size(); ++k)
        if (G_H[k] < 0.0 || G_S[k] < 0.0) throw ModelError("link_mode_flows: negative demand");
    return {model_link_flows(road, G_H), model_link_flows(road, G_S)};
}

}  // namespace mobility
