#pragma once

// Road and rail network types, the BPR volume-delay function and shortest
// paths.

#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "mobility/error.hpp"

namespace mobility {

struct RoadLink {
    int from = 0;  // internal node index
    int to = 0;
    double capacity = 0.0;   // veh/h, K_A^0
    double length = 0.0;     // km
    double free_flow = 0.0;  // min, t^0
    double alpha = 0.15;
    double beta = 4.0;
};

struct RailLink {
    int from = 0;
    int to = 0;
    int line = 0;  // index into RailNetwork::lines
    double length = 0.0;  // km
};

struct RailLine {
    long long id = 0;
    std::vector<int> links;
};

/// Maps external node ids (as found in the files) to dense indices.
class NodeIndex {
public:
    int add(long long id) {
        auto [it, inserted] = index_.try_emplace(id, static_cast<int>(ids_.size()));
        if (inserted) ids_.push_back(id);
        return it->second;
    }
    bool contains(long long id) const { return index_.count(id) != 0; }
    int at(long long id) const { return index_.at(id); }
    long long id(int index) const { return ids_[static_cast<std::size_t>(index)]; }
    int size() const { return static_cast<int>(ids_.size()); }

private:
    std::unordered_map<long long, int> index_;
    std::vector<long long> ids_;
};

struct RoadNetwork {
    NodeIndex nodes;
    std::vector<RoadLink> links;

    int node_count() const { return nodes.size(); }
    int link_count() const { return static_cast<int>(links.size()); }
};

struct RailNetwork {
    std::vector<RailLink> links;  // node indices refer to the road NodeIndex
    std::vector<RailLine> lines;
    std::vector<bool> served;  // per road node: is it a rail station

    int link_count() const { return static_cast<int>(links.size()); }
    int station_count() const {
        int n = 0;
        for (bool s : served) n += s ? 1 : 0;
        return n;
    }
    /// Mean over lines of the one-way line length (each line is stored in
    /// both directions).
    double mean_line_length() const {
        if (lines.empty()) return 0.0;
        double total = 0.0;
        for (const auto& l : lines)
            for (int i : l.links) total += links[static_cast<std::size_t>(i)].length;
        return 0.5 * total / static_cast<double>(lines.size());
    }
};

struct ODPair {
    int origin = 0;
    int destination = 0;
    double demand = 0.0;  // pax/h
};

using ODMatrix = std::vector<ODPair>;

/// BPR link time t0 * (1 + alpha * (flow/capacity)^beta), in the units of t0.
inline double bpr_time(double flow, double capacity, double t0, double alpha, double beta) {
    if (!(capacity > 0.0)) throw ModelError("bpr_time: capacity must be positive");
    if (flow <= 0.0) return t0;
    return t0 * (1.0 + alpha * std::pow(flow / capacity, beta));
}

/// Derivative of bpr_time with respect to flow.
inline double bpr_slope(double flow, double capacity, double t0, double alpha, double beta) {
    if (flow <= 0.0) return beta == 1.0 ? t0 * alpha / capacity : 0.0;
    return t0 * alpha * beta * std::pow(flow / capacity, beta - 1.0) / capacity;
}

/// Directed graph over dense node indices with per-link costs supplied at
/// query time.
class Digraph {
public:
    struct Arc {
        int to;
        int link;
    };

    Digraph(int nodes, const std::vector<std::pair<int, int>>& arcs) : out_(static_cast<std::size_t>(nodes)) {
        for (std::size_t i = 0; i < arcs.size(); ++i)
            out_[static_cast<std::size_t>(arcs[i].first)].push_back({arcs[i].second, static_cast<int>(i)});
    }

    int node_count() const { return static_cast<int>(out_.size()); }
    const std::vector<Arc>& out(int node) const { return out_[static_cast<std::size_t>(node)]; }

    struct Tree {
        std::vector<double> distance;
        std::vector<int> pred_link;  // -1 at the root and unreachable nodes
    };

    /// Dijkstra from `root`. Ties are broken by the lowest link index so the
    /// result does not depend on heap ordering.
    Tree shortest_tree(int root, const std::vector<double>& cost) const {
        const double inf = std::numeric_limits<double>::infinity();
        Tree t{std::vector<double>(out_.size(), inf), std::vector<int>(out_.size(), -1)};
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        t.distance[static_cast<std::size_t>(root)] = 0.0;
        heap.push({0.0, root});
        while (!heap.empty()) {
            const auto [d, u] = heap.top();
            heap.pop();
            if (d > t.distance[static_cast<std::size_t>(u)]) continue;
            for (const auto& a : out_[static_cast<std::size_t>(u)]) {
                const double nd = d + cost[static_cast<std::size_t>(a.link)];
                auto& best = t.distance[static_cast<std::size_t>(a.to)];
                auto& pred = t.pred_link[static_cast<std::size_t>(a.to)];
                if (nd < best || (nd == best && pred >= 0 && a.link < pred)) {
                    const bool improved = nd < best;
                    best = nd;
                    pred = a.link;
                    if (improved) heap.push({nd, a.to});
                }
            }
        }
        return t;
    }

private:
    std::vector<std::vector<Arc>> out_;
};

/// Link sequence from the tree root to `dest`, or empty when unreachable.
inline std::vector<int> trace_path(const Digraph::Tree& tree, int dest, const std::vector<std::pair<int, int>>& arcs) {
    std::vector<int> rev;
    int node = dest;
    while (tree.pred_link[static_cast<std::size_t>(node)] >= 0) {
        const int l = tree.pred_link[static_cast<std::size_t>(node)];
        rev.push_back(l);
        node = arcs[static_cast<std::size_t>(l)].first;
    }
    return {rev.rbegin(), rev.rend()};
}

inline std::vector<std::pair<int, int>> arcs_of(const RoadNetwork& net) {
    std::vector<std::pair<int, int>> a;
    a.reserve(net.links.size());
    for (const auto& l : net.links) a.emplace_back(l.from, l.to);
    return a;
}

inline std::vector<std::pair<int, int>> arcs_of(const RailNetwork& net) {
    std::vector<std::pair<int, int>> a;
    a.reserve(net.links.size());
    for (const auto& l : net.links) a.emplace_back(l.from, l.to);
    return a;
}

}  // namespace mobility
