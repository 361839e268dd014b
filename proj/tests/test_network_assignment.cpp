#include <cmath>
#include <algorithm>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "mobility/affine.hpp"
#include "mobility/assignment.hpp"
#include "mobility/scenario.hpp"

using namespace mobility;

namespace {

RoadLink link(RoadNetwork& net, long long a, long long b, double cap, double len, double t0) {
    RoadLink l;
    l.from = net.nodes.add(a);
    l.to = net.nodes.add(b);
    l.capacity = cap;
    l.length = len;
    l.free_flow = t0;
    return l;
}

/// Direct route 1->2 against the detour 1->3->2.
RoadNetwork two_routes() {
    RoadNetwork net;
    net.links.push_back(link(net, 1, 2, 1000, 10, 10));
    net.links.push_back(link(net, 1, 3, 800, 4, 4));
    net.links.push_back(link(net, 3, 2, 800, 4, 4));
    return net;
}

double bpr(double v, double cap, double t0) { return t0 * (1.0 + 0.15 * std::pow(v / cap, 4.0)); }

}  // namespace

TEST(Bpr, MatchesFormula) {
    EXPECT_DOUBLE_EQ(bpr_time(1000, 1000, 10, 0.15, 4), 11.5);
    EXPECT_DOUBLE_EQ(bpr_time(0, 1000, 10, 0.15, 4), 10.0);
    EXPECT_NEAR(bpr_slope(500, 1000, 10, 0.15, 4), 10 * 0.15 * 4 * 0.125 / 1000, 1e-15);
    EXPECT_THROW(bpr_time(1, 0, 10, 0.15, 4), ModelError);
}

TEST(UserEquilibrium, TwoRoutesEqualiseTimes) {
    const auto net = two_routes();
    const double D = 1500;
    const ODMatrix od{{net.nodes.at(1), net.nodes.at(2), D}};
    // Oracle: bisection on the time difference between the routes.
    double lo = 0, hi = D;
    for (int i = 0; i < 200; ++i) {
        const double x = 0.5 * (lo + hi);
        const double diff = bpr(x, 1000, 10) - 2 * bpr(D - x, 800, 4);
        (diff > 0 ? hi : lo) = x;
    }
    const double x_star = 0.5 * (lo + hi);

    const auto ue = solve_user_equilibrium(net, od, {1e-12, 5000, 0.0});
    EXPECT_LE(ue.relative_gap, 1e-12);
    EXPECT_NEAR(ue.link_flows[0], x_star, 1e-4 * D);
    EXPECT_NEAR(ue.link_flows[1], D - x_star, 1e-4 * D);
    EXPECT_NEAR(ue.link_flows[1], ue.link_flows[2], 1e-9);
    EXPECT_LE(relative_gap(net, od, ue.paths), 1e-8);
}

TEST(UserEquilibrium, LightDemandTakesOnlyTheFasterRoute) {
    // Free flow: 8 min via node 3 against 10 min direct.
    const auto net = two_routes();
    const ODMatrix od{{net.nodes.at(1), net.nodes.at(2), 10.0}};
    const auto ue = solve_user_equilibrium(net, od);
    ASSERT_EQ(ue.paths.od[0].paths.size(), 1u);
    EXPECT_NEAR(ue.link_flows[0], 0.0, 1e-12);
    EXPECT_NEAR(ue.link_flows[1], 10.0, 1e-12);
}

TEST(UserEquilibrium, ConservesDemandOnToy) {
    const auto sc = load_scenario(std::string(MOBILITY_TEST_DATA) + "/toy");
    const auto ue = solve_user_equilibrium(sc.road_network, sc.od_demand);
    EXPECT_LE(ue.relative_gap, 1e-7);
    for (std::size_t k = 0; k < sc.od_count(); ++k) {
        double s = 0.0;
        for (double x : ue.paths.od[k].shares) s += x;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(UserEquilibrium, DisconnectedOdIsAnError) {
    RoadNetwork net;
    net.links.push_back(link(net, 1, 2, 1000, 1, 1));
    net.nodes.add(3);
    const ODMatrix od{{net.nodes.at(1), net.nodes.at(3), 5.0}};
    EXPECT_THROW(solve_user_equilibrium(net, od), ModelError);
}

TEST(Affine, ReproducesBprAtLinearisationPoint) {
    const auto sc = load_scenario(std::string(MOBILITY_TEST_DATA) + "/toy");
    const auto ue = solve_user_equilibrium(sc.road_network, sc.od_demand);
    std::vector<double> demand;
    for (const auto& p : sc.od_demand) demand.push_back(p.demand);
    const auto costs = road_link_costs(sc.road_network);
    const auto m = build_affine_model(costs, ue.paths, demand);
    std::vector<double> cap;
    for (const auto& l : sc.road_network.links) cap.push_back(l.capacity);

    const auto exact = bpr_od_times(costs, ue.paths, demand, cap);
    const auto approx = affine_od_times(m, demand, cap);
    const auto dense = affine_od_times_dense(m, demand);
    for (std::size_t k = 0; k < demand.size(); ++k) {
        EXPECT_NEAR(approx[k], exact[k], 1e-9 * exact[k]);
        EXPECT_NEAR(dense[k], exact[k], 1e-9 * exact[k]);
    }
    // Tangent: first-order accurate for small changes.
    for (double f : {0.99, 1.01}) {
        auto d = demand;
        for (double& x : d) x *= f;
        const auto e = bpr_od_times(costs, ue.paths, d, cap);
        const auto a = affine_od_times(m, d, cap);
        for (std::size_t k = 0; k < d.size(); ++k) EXPECT_NEAR(a[k], e[k], 1e-3 * e[k]);
    }
}

TEST(Affine, CapacityRescalesCongestion) {
    // One link: t = t0 + (K0/K)^beta * congestion(v).
    RoadNetwork net;
    net.links.push_back(link(net, 1, 2, 1000, 5, 10));
    const ODMatrix od{{0, 1, 800.0}};
    const auto ue = solve_user_equilibrium(net, od);
    const auto m = build_affine_model(road_link_costs(net), ue.paths, {800.0});
    const double congestion = bpr(800, 1000, 10) - 10;
    const auto t = affine_od_times(m, {800.0}, {2000.0});
    EXPECT_NEAR(t[0], 10 + congestion / 16.0, 1e-12);
    EXPECT_DOUBLE_EQ(m.distance[0], 5.0);
}

TEST(RailPaths, LineConstrainedShortestPath) {
    const auto sc = load_scenario(std::string(MOBILITY_TEST_DATA) + "/toy");
    const auto rp = rail_paths(sc.rail_network, sc.road_network.node_count(), sc.od_demand);
    // od.csv order: 1-3, 3-1, 2-4, 4-2, 1-2, 5-4
    ASSERT_EQ(rp.od[0].paths.size(), 1u);
    EXPECT_EQ(rp.od[0].paths[0].size(), 2u);
    EXPECT_TRUE(rp.od[2].paths.empty());
    EXPECT_EQ(rp.od[4].paths[0].size(), 1u);
    EXPECT_TRUE(rp.od[5].paths.empty());
}

TEST(Bpr, MoreCapacityNeverSlower) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 3000.0), c(100.0, 3000.0);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng), k = c(rng);
        EXPECT_LE(bpr_time(v, 2 * k, 7, 0.15, 4), bpr_time(v, k, 7, 0.15, 4));
    }
}

TEST(UserEquilibrium, ParallelIdenticalLinksSplitEvenly) {
    RoadNetwork net;
    net.links.push_back(link(net, 1, 2, 500, 5, 5));
    net.links.push_back(link(net, 1, 3, 500, 1, 1));
    net.links.push_back(link(net, 3, 2, 500, 4, 4));
    net.links.push_back(link(net, 1, 4, 500, 1, 1));
    net.links.push_back(link(net, 4, 2, 500, 4, 4));
    // Three identical 5-minute routes.
    const ODMatrix od{{net.nodes.at(1), net.nodes.at(2), 900.0}};
    const auto ue = solve_user_equilibrium(net, od, {1e-12, 5000, 0.0});
    EXPECT_NEAR(ue.link_flows[0], 300, 1e-3);
    EXPECT_NEAR(ue.link_flows[1], 300, 1e-3);
    EXPECT_NEAR(ue.link_flows[3], 300, 1e-3);
}

TEST(UserEquilibrium, SinglePathTakesAllDemand) {
    RoadNetwork net;
    net.links.push_back(link(net, 1, 2, 500, 5, 5));
    net.links.push_back(link(net, 2, 3, 500, 5, 5));
    const ODMatrix od{{net.nodes.at(1), net.nodes.at(3), 700.0}};
    const auto ue = solve_user_equilibrium(net, od);
    EXPECT_DOUBLE_EQ(ue.link_flows[0], 700.0);
    EXPECT_DOUBLE_EQ(ue.link_flows[1], 700.0);
}

TEST(UserEquilibrium, BraessMatchesGridSearch) {
    // Classic Braess layout: two congestible links, two fixed ones, a free bridge.
    RoadNetwork net;
    net.links.push_back(link(net, 1, 2, 100, 1, 10));  // 0: congestible
    net.links.push_back(link(net, 2, 4, 1e9, 1, 45));  // 1: fixed
    net.links.push_back(link(net, 1, 3, 1e9, 1, 45));  // 2: fixed
    net.links.push_back(link(net, 3, 4, 100, 1, 10));  // 3: congestible
    net.links.push_back(link(net, 2, 3, 1e9, 1, 1));   // 4: bridge
    const double D = 300;
    const ODMatrix od{{net.nodes.at(1), net.nodes.at(4), D}};
    const auto ue = solve_user_equilibrium(net, od, {1e-10, 5000, 0.0});

    // Grid oracle over (top, bottom, bridge) splits: minimise the gap between
    // the slowest used route and the fastest route.
    auto t_cong = [](double v) { return bpr(v, 100, 10); };
    const double step = 1e-3 * D;
    double best = INFINITY, best_bridge = 0;
    for (double a = 0; a <= D + 1e-9; a += step)
        for (double b = 0; a + b <= D + 1e-9; b += step) {
            const double z = D - a - b;  // bridge route 1-2-3-4
            const double r1 = t_cong(a + z) + 45, r2 = 45 + t_cong(b + z), r3 = t_cong(a + z) + 1 + t_cong(b + z);
            const double lo = std::min({r1, r2, r3});
            double hi = 0;
            if (a > 0) hi = std::max(hi, r1);
            if (b > 0) hi = std::max(hi, r2);
            if (z > 0) hi = std::max(hi, r3);
            if (hi - lo < best) {
                best = hi - lo;
                best_bridge = z;
            }
        }
    EXPECT_NEAR(ue.link_flows[4], best_bridge, 2 * step);
}

TEST(Affine, OneOdPerturbationMatchesBpr) {
    const auto sc = load_scenario(std::string(MOBILITY_TEST_DATA) + "/toy");
    const auto ue = solve_user_equilibrium(sc.road_network, sc.od_demand);
    std::vector<double> demand, cap;
    for (const auto& p : sc.od_demand) demand.push_back(p.demand);
    for (const auto& l : sc.road_network.links) cap.push_back(l.capacity);
    const auto costs = road_link_costs(sc.road_network);
    const auto m = build_affine_model(costs, ue.paths, demand);
    for (std::size_t k = 0; k < demand.size(); ++k) {
        auto d = demand;
        d[k] *= 1.01;
        const auto e = bpr_od_times(costs, ue.paths, d, cap), a = affine_od_times(m, d, cap);
        for (std::size_t j = 0; j < d.size(); ++j) EXPECT_NEAR(a[j], e[j], 5e-3 * e[j]);
    }
}

TEST(Affine, ZeroDemandAndCapacityMonotonicity) {
    const auto sc = load_scenario(std::string(MOBILITY_TEST_DATA) + "/toy");
    const auto ue = solve_user_equilibrium(sc.road_network, sc.od_demand);
    std::vector<double> demand, cap;
    for (const auto& p : sc.od_demand) demand.push_back(p.demand);
    for (const auto& l : sc.road_network.links) cap.push_back(l.capacity);
    const auto m = build_affine_model(road_link_costs(sc.road_network), ue.paths, demand);
    // Zero demand: share-weighted free-flow path times.
    const auto t0 = affine_od_times(m, std::vector<double>(demand.size(), 0.0), cap);
    for (std::size_t k = 0; k < demand.size(); ++k) {
        double ff = 0;
        for (const auto& [l, a] : m.incidence[k]) ff += a * m.free_flow[static_cast<std::size_t>(l)];
        EXPECT_NEAR(t0[k], ff, 1e-12);
    }
    auto doubled = cap;
    for (double& c : doubled) c *= 2;
    const auto base = affine_od_times(m, demand, cap), more = affine_od_times(m, demand, doubled);
    for (std::size_t k = 0; k < demand.size(); ++k) EXPECT_LE(more[k], base[k]);
}

TEST(Affine, UncongestedOdHasZeroSensitivity) {
    RoadNetwork net;
    net.links.push_back(link(net, 1, 2, 1e9, 5, 5));
    net.links.push_back(link(net, 2, 3, 100, 5, 5));
    const ODMatrix od{{net.nodes.at(1), net.nodes.at(2), 1.0}, {net.nodes.at(2), net.nodes.at(3), 90.0}};
    const auto ue = solve_user_equilibrium(net, od);
    const auto m = build_affine_model(road_link_costs(net), ue.paths, {1.0, 90.0});
    EXPECT_NEAR(m.sensitivity(0, 0), 0.0, 1e-20);
    EXPECT_NEAR(m.sensitivity(0, 1), 0.0, 1e-20);
    EXPECT_GT(m.sensitivity(1, 1), 0.0);
}

TEST(LinkFlows, MatchPathAccumulation) {
    const auto sc = load_scenario(std::string(MOBILITY_TEST_DATA) + "/toy");
    std::vector<double> demand;
    for (const auto& p : sc.od_demand) demand.push_back(p.demand);
    const auto ue = solve_user_equilibrium(sc.road_network, sc.od_demand);
    const auto m = build_affine_model(road_link_costs(sc.road_network), ue.paths, demand);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 200);
    std::vector<double> gh(demand.size()), gs(demand.size());
    for (std::size_t k = 0; k < gh.size(); ++k) {
        gh[k] = u(rng);
        gs[k] = u(rng);
    }
    const auto f = link_mode_flows(m, gh, gs);
    std::vector<double> hv(sc.road_network.links.size(), 0.0), sav(hv);
    for (std::size_t k = 0; k < gh.size(); ++k) {
        const auto& od = ue.paths.od[k];
        for (std::size_t p = 0; p < od.paths.size(); ++p)
            for (int l : od.paths[p]) {
                hv[static_cast<std::size_t>(l)] += od.shares[p] * gh[k];
                sav[static_cast<std::size_t>(l)] += od.shares[p] * gs[k];
            }
    }
    for (std::size_t l = 0; l < hv.size(); ++l) {
        EXPECT_NEAR(f.hv[l], hv[l], 1e-9);
        EXPECT_NEAR(f.sav[l], sav[l], 1e-9);
    }
    const auto zero = link_mode_flows(m, gh, std::vector<double>(gh.size(), 0.0));
    for (double x : zero.sav) EXPECT_EQ(x, 0.0);
}
