#pragma once

// Offline route choice: user-equilibrium path sets on the road network and
// line-constrained shortest paths on rail.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mobility/error.hpp"
#include "mobility/network.hpp"

namespace mobility {

/// Paths of one OD pair with their flow shares (summing to 1).
struct ODPaths {
    std::vector<std::vector<int>> paths;  // link index sequences
    std::vector<double> shares;
};

/// Path sets indexed like the OD matrix they were built for.
struct PathSet {
    std::vector<ODPaths> od;

    std::size_t size() const { return od.size(); }
};

struct UEOptions {
    double relative_gap = 1e-7;
    int max_iterations = 2000;
    double share_threshold = 0.01;  // paths below this OD share are dropped
};

struct UEResult {
    PathSet paths;                   // filtered and renormalised
    std::vector<double> link_flows;  // veh/h, loaded from `paths`
    double relative_gap = 0.0;       // of the equilibrium before filtering
    int iterations = 0;
};

namespace detail {

inline std::vector<double> road_costs(const RoadNetwork& net, const std::vector<double>& flow) {
    std::vector<double> c(net.links.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& l = net.links[i];
        c[i] = bpr_time(flow[i], l.capacity, l.free_flow, l.alpha, l.beta);
    }
    return c;
}

inline double path_cost(const std::vector<int>& path, const std::vector<double>& cost) {
    double c = 0.0;
    for (int l : path) c += cost[static_cast<std::size_t>(l)];
    return c;
}

}  // namespace detail

/// Link flows produced by routing `demand` (one value per OD) over `paths`.
inline std::vector<double> load_paths(const PathSet& paths, const std::vector<double>& demand, int link_count) {
    std::vector<double> flow(static_cast<std::size_t>(link_count), 0.0);
    for (std::size_t k = 0; k < paths.size(); ++k) {
        const auto& od = paths.od[k];
        for (std::size_t p = 0; p < od.paths.size(); ++p) {
            const double f = demand[k] * od.shares[p];
            if (f == 0.0) continue;
            for (int l : od.paths[p]) flow[static_cast<std::size_t>(l)] += f;
        }
    }
    return flow;
}

/// Relative gap (TSTT - SPTT) / TSTT of the given path flows.
inline double relative_gap(const RoadNetwork& net, const ODMatrix& od, const PathSet& paths) {
    std::vector<double> demand(od.size());
    for (std::size_t k = 0; k < od.size(); ++k) demand[k] = od[k].demand;
    const auto flow = load_paths(paths, demand, net.link_count());
    const auto cost = detail::road_costs(net, flow);
    const auto arcs = arcs_of(net);
    const Digraph g(net.node_count(), arcs);
    double tstt = 0.0;
    for (std::size_t i = 0; i < flow.size(); ++i) tstt += flow[i] * cost[i];
    double sptt = 0.0;
    std::map<int, Digraph::Tree> trees;
    for (const auto& p : od) {
        if (p.demand <= 0.0) continue;
        auto it = trees.find(p.origin);
        if (it == trees.end()) it = trees.emplace(p.origin, g.shortest_tree(p.origin, cost)).first;
        sptt += p.demand * it->second.distance[static_cast<std::size_t>(p.destination)];
    }
    return tstt > 0.0 ? (tstt - sptt) / tstt : 0.0;
}

/// Path-based user equilibrium (gradient projection with Gauss-Seidel
/// sweeps over OD pairs). Paths carrying less than `share_threshold` of
/// their OD flow are dropped afterwards.
inline UEResult solve_user_equilibrium(const RoadNetwork& net, const ODMatrix& od, const UEOptions& opt = {}) {
    const auto arcs = arcs_of(net);
    const Digraph g(net.node_count(), arcs);
    const std::size_t nlinks = net.links.size();

    for (const auto& p : od)
        if (p.demand < 0.0) throw ModelError("solve_user_equilibrium: negative demand");

    std::vector<int> origins;
    for (const auto& p : od) origins.push_back(p.origin);
    std::sort(origins.begin(), origins.end());
    origins.erase(std::unique(origins.begin(), origins.end()), origins.end());

    std::vector<double> flow(nlinks, 0.0);
    std::vector<double> cost = detail::road_costs(net, flow);

    struct Working {
        std::vector<std::vector<int>> paths;
        std::vector<double> flows;
    };
    std::vector<Working> work(od.size());

    // All-or-nothing start at free-flow costs.
    for (int o : origins) {
        const auto tree = g.shortest_tree(o, cost);
        for (std::size_t k = 0; k < od.size(); ++k) {
            if (od[k].origin != o) continue;
            auto path = trace_path(tree, od[k].destination, arcs);
            if (path.empty() && od[k].origin != od[k].destination)
                throw ModelError("solve_user_equilibrium: OD pair " + std::to_string(net.nodes.id(od[k].origin)) +
                                 "->" + std::to_string(net.nodes.id(od[k].destination)) + " is disconnected");
            work[k].paths.push_back(path);
            work[k].flows.push_back(od[k].demand);
            for (int l : path) flow[static_cast<std::size_t>(l)] += od[k].demand;
        }
    }
    cost = detail::road_costs(net, flow);

    auto update_link = [&](int l) {
        const auto& link = net.links[static_cast<std::size_t>(l)];
        cost[static_cast<std::size_t>(l)] =
            bpr_time(flow[static_cast<std::size_t>(l)], link.capacity, link.free_flow, link.alpha, link.beta);
    };
    auto slope = [&](int l) {
        const auto& link = net.links[static_cast<std::size_t>(l)];
        return bpr_slope(flow[static_cast<std::size_t>(l)], link.capacity, link.free_flow, link.alpha, link.beta);
    };

    auto measure_gap = [&] {
        double tstt = 0.0;
        for (std::size_t i = 0; i < nlinks; ++i) tstt += flow[i] * cost[i];
        double sptt = 0.0;
        for (int o : origins) {
            const auto tree = g.shortest_tree(o, cost);
            for (std::size_t k = 0; k < od.size(); ++k)
                if (od[k].origin == o) sptt += od[k].demand * tree.distance[static_cast<std::size_t>(od[k].destination)];
        }
        return tstt > 0.0 ? (tstt - sptt) / tstt : 0.0;
    };

    UEResult result;
    double gap = measure_gap();
    int iter = 0;
    std::vector<char> on_best(nlinks, 0);
    while (gap > opt.relative_gap && iter < opt.max_iterations) {
        ++iter;
        for (int o : origins) {
            const auto tree = g.shortest_tree(o, cost);
            for (std::size_t k = 0; k < od.size(); ++k) {
                if (od[k].origin != o || od[k].demand <= 0.0) continue;
                auto& w = work[k];
                auto best = trace_path(tree, od[k].destination, arcs);
                std::size_t bi = 0;
                while (bi < w.paths.size() && w.paths[bi] != best) ++bi;
                if (bi == w.paths.size()) {
                    w.paths.push_back(best);
                    w.flows.push_back(0.0);
                }
                for (int l : w.paths[bi]) on_best[static_cast<std::size_t>(l)] = 1;
                for (std::size_t p = 0; p < w.paths.size(); ++p) {
                    if (p == bi || w.flows[p] <= 0.0) continue;
                    const double dc = detail::path_cost(w.paths[p], cost) - detail::path_cost(w.paths[bi], cost);
                    if (dc <= 0.0) continue;
                    double curvature = 0.0;
                    for (int l : w.paths[p])
                        if (!on_best[static_cast<std::size_t>(l)]) curvature += slope(l);
                    for (int l : w.paths[bi]) {
                        bool shared = false;
                        for (int m : w.paths[p]) shared = shared || (m == l);
                        if (!shared) curvature += slope(l);
                    }
                    const double shift = curvature > 0.0 ? std::min(w.flows[p], dc / curvature) : w.flows[p];
                    w.flows[p] -= shift;
                    w.flows[bi] += shift;
                    for (int l : w.paths[p]) {
                        flow[static_cast<std::size_t>(l)] -= shift;
                        update_link(l);
                    }
                    for (int l : w.paths[bi]) {
                        flow[static_cast<std::size_t>(l)] += shift;
                        update_link(l);
                    }
                }
                for (int l : w.paths[bi]) on_best[static_cast<std::size_t>(l)] = 0;
                // Drop emptied paths so the working set stays small.
                for (std::size_t p = w.paths.size(); p-- > 0;) {
                    if (w.flows[p] <= 1e-12 * od[k].demand && w.paths.size() > 1) {
                        for (int l : w.paths[p]) flow[static_cast<std::size_t>(l)] -= w.flows[p];
                        w.paths.erase(w.paths.begin() + static_cast<std::ptrdiff_t>(p));
                        w.flows.erase(w.flows.begin() + static_cast<std::ptrdiff_t>(p));
                    }
                }
            }
        }
        // Rebuild from path flows to keep round-off from accumulating.
        std::fill(flow.begin(), flow.end(), 0.0);
        for (std::size_t k = 0; k < od.size(); ++k)
            for (std::size_t p = 0; p < work[k].paths.size(); ++p)
                for (int l : work[k].paths[p]) flow[static_cast<std::size_t>(l)] += work[k].flows[p];
        cost = detail::road_costs(net, flow);
        gap = measure_gap();
    }
    if (gap > opt.relative_gap)
        throw ConvergenceError("solve_user_equilibrium: no convergence in " + std::to_string(opt.max_iterations) +
                                   " iterations",
                               gap);

    result.relative_gap = gap;
    result.iterations = iter;
    result.paths.od.resize(od.size());
    for (std::size_t k = 0; k < od.size(); ++k) {
        auto& w = work[k];
        auto& out = result.paths.od[k];
        const double total = od[k].demand;
        if (total <= 0.0) {
            out.paths = {w.paths.front()};
            out.shares = {1.0};
            continue;
        }
        double kept = 0.0;
        for (std::size_t p = 0; p < w.paths.size(); ++p) {
            if (w.flows[p] / total >= opt.share_threshold) {
                out.paths.push_back(w.paths[p]);
                out.shares.push_back(w.flows[p]);
                kept += w.flows[p];
            }
        }
        for (double& s : out.shares) s /= kept;
    }
    std::vector<double> demand(od.size());
    for (std::size_t k = 0; k < od.size(); ++k) demand[k] = od[k].demand;
    result.link_flows = load_paths(result.paths, demand, net.link_count());
    return result;
}

/// Shortest rail path (by length) for every OD whose endpoints are both
/// stations; other ODs get an empty entry.
inline PathSet rail_paths(const RailNetwork& rail, int node_count, const ODMatrix& od) {
    const auto arcs = arcs_of(rail);
    const Digraph g(node_count, arcs);
    std::vector<double> length(rail.links.size());
    for (std::size_t i = 0; i < length.size(); ++i) length[i] = rail.links[i].length;
    PathSet out;
    out.od.resize(od.size());
    std::map<int, Digraph::Tree> trees;
    for (std::size_t k = 0; k < od.size(); ++k) {
        const auto o = od[k].origin, d = od[k].destination;
        if (!rail.served[static_cast<std::size_t>(o)] || !rail.served[static_cast<std::size_t>(d)] || o == d) continue;
        auto it = trees.find(o);
        if (it == trees.end()) it = trees.emplace(o, g.shortest_tree(o, length)).first;
        auto path = trace_path(it->second, d, arcs);
        if (path.empty()) continue;
        out.od[k].paths.push_back(std::move(path));
        out.od[k].shares.push_back(1.0);
    }
    return out;
}

}  // namespace mobility
