#pragma once

// Signal-flow graphs: simple cycle and path enumeration, Mason's gain
// formula, and a direct linear solve for numeric gains. The gain type only
// needs construction from double, +, - and *.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mobility/error.hpp"

namespace mobility {

/// A loop or a forward path: node sequence (a loop does not repeat its
/// first node), product of edge gains, and node bit mask.
template <class Gain>
struct Chain {
    std::vector<int> nodes;
    Gain gain;
    std::uint64_t mask = 0;

    bool touches(std::uint64_t other) const { return (mask & other) != 0; }
};

template <class Gain>
class SignalFlowGraph {
public:
    static constexpr int kMaxNodes = 64;

    int add_node(std::string name) {
        if (static_cast<int>(names_.size()) == kMaxNodes) throw ModelError("SignalFlowGraph: too many nodes");
        names_.push_back(std::move(name));
        for (auto& row : edges_) row.emplace_back();
        edges_.emplace_back(names_.size());
        return static_cast<int>(names_.size()) - 1;
    }

    /// Adds an edge; a second edge between the same nodes adds its gain.
    void add_edge(int from, int to, Gain g) {
        check(from);
        check(to);
        auto& e = edges_[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
        if (e)
            *e = *e + g;
        else
            e = std::move(g);
    }

    void remove_edge(int from, int to) { edges_[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)].reset(); }

    int node_count() const { return static_cast<int>(names_.size()); }
    const std::string& name(int i) const { return names_[static_cast<std::size_t>(i)]; }
    int find(const std::string& n) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == n) return static_cast<int>(i);
        throw ModelError("SignalFlowGraph: no node '" + n + "'");
    }
    bool has_edge(int from, int to) const {
        return edges_[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)].has_value();
    }
    const Gain& gain(int from, int to) const {
        const auto& e = edges_[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
        if (!e) throw ModelError("SignalFlowGraph: no edge " + name(from) + " -> " + name(to));
        return *e;
    }

    /// All simple directed cycles, each listed once starting from its
    /// lowest-index node.
    std::vector<Chain<Gain>> simple_cycles() const {
        std::vector<Chain<Gain>> out;
        std::vector<int> stack;
        for (int s = 0; s < node_count(); ++s) {
            stack = {s};
            cycles_from(s, s, std::uint64_t{1} << s, stack, out);
        }
        return out;
    }

    /// All simple paths from `source` to `sink`.
    std::vector<Chain<Gain>> simple_paths(int source, int sink) const {
        check(source);
        check(sink);
        std::vector<Chain<Gain>> out;
        std::vector<int> stack{source};
        paths_from(source, sink, std::uint64_t{1} << source, stack, out);
        return out;
    }

    Gain chain_gain(const std::vector<int>& nodes, bool closed) const {
        Gain g(1.0);
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) g = g * gain(nodes[i], nodes[i + 1]);
        if (closed) g = g * gain(nodes.back(), nodes.front());
        return g;
    }

private:
    void check(int i) const {
        if (i < 0 || i >= node_count()) throw ModelError("SignalFlowGraph: node index out of range");
    }

    static std::uint64_t mask_of(const std::vector<int>& nodes) {
        std::uint64_t m = 0;
        for (int v : nodes) m |= std::uint64_t{1} << v;
        return m;
    }

    void cycles_from(int start, int v, std::uint64_t used, std::vector<int>& stack,
                     std::vector<Chain<Gain>>& out) const {
        for (int w = 0; w < node_count(); ++w) {
            if (!has_edge(v, w)) continue;
            if (w == start) {
                out.push_back({stack, chain_gain(stack, true), mask_of(stack)});
            } else if (w > start && !(used & (std::uint64_t{1} << w))) {
                stack.push_back(w);
                cycles_from(start, w, used | (std::uint64_t{1} << w), stack, out);
                stack.pop_back();
            }
        }
    }

    void paths_from(int v, int sink, std::uint64_t used, std::vector<int>& stack,
                    std::vector<Chain<Gain>>& out) const {
        if (v == sink) {
            out.push_back({stack, chain_gain(stack, false), mask_of(stack)});
            return;
        }
        for (int w = 0; w < node_count(); ++w) {
            if (!has_edge(v, w) || (used & (std::uint64_t{1} << w))) continue;
            stack.push_back(w);
            paths_from(w, sink, used | (std::uint64_t{1} << w), stack, out);
            stack.pop_back();
        }
    }

    std::vector<std::string> names_;
    std::vector<std::vector<std::optional<Gain>>> edges_;
};

template <class Gain>
struct TransferResult {
    std::vector<Chain<Gain>> loops;
    std::vector<Chain<Gain>> paths;
    std::vector<Gain> cofactors;  // Delta_k per path
    Gain numerator;               // sum_k P_k Delta_k
    Gain denominator;             // Delta
};

/// Sum over all families of pairwise non-touching loops that avoid `used`,
/// each family contributing (-1)^size times its gain product; the empty
/// family contributes 1.
template <class Gain>
Gain loop_family_sum(const std::vector<Chain<Gain>>& loops, std::size_t first, std::uint64_t used) {
    Gain total(1.0);
    for (std::size_t i = first; i < loops.size(); ++i) {
        if (loops[i].touches(used)) continue;
        total = total - loops[i].gain * loop_family_sum(loops, i + 1, used | loops[i].mask);
    }
    return total;
}

template <class Gain>
TransferResult<Gain> mason_transfer(const SignalFlowGraph<Gain>& g, int source, int sink) {
    TransferResult<Gain> r;
    r.loops = g.simple_cycles();
    r.paths = g.simple_paths(source, sink);
    r.denominator = loop_family_sum(r.loops, 0, 0);
    r.numerator = Gain(0.0);
    for (const auto& p : r.paths) {
        r.cofactors.push_back(loop_family_sum(r.loops, 0, p.mask));
        r.numerator = r.numerator + p.gain * r.cofactors.back();
    }
    return r;
}

inline double transfer_value(const TransferResult<double>& r) { return r.numerator / r.denominator; }

/// Response at `sink` to a unit injection at `source`, from the linear
/// system x = G^T x + e_source.
inline double linear_transfer(const SignalFlowGraph<double>& g, int source, int sink) {
    const int n = g.node_count();
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (g.has_edge(i, j)) A(j, i) -= g.gain(i, j);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(source) = 1.0;
    const Eigen::VectorXd x = A.partialPivLu().solve(b);
    return x(sink);
}

}  // namespace mobility
