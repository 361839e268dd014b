#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "mobility/io.hpp"
#include "mobility/simulator.hpp"

using namespace mobility;

namespace {

const MobilityModel& toy() {
    static const MobilityModel m(load_scenario(std::string(MOBILITY_TEST_DATA) + "/toy"));
    return m;
}

const MobilityModel& sioux_falls() {
    static const MobilityModel m(load_scenario(MOBILITY_DEFAULT_SCENARIO));
    return m;
}

// Shortest round-trip formatting, so equal text means equal bits.
bool same_bits(const TrajectoryRecord& a, const TrajectoryRecord& b) {
    return trajectory_csv({a}) == trajectory_csv({b});
}

}  // namespace

TEST(Simulator, BaseEquilibriumConservesDemand) {
    const auto& m = toy();
    const auto& x = m.base_equilibrium().split;
    for (std::size_t k = 0; k < m.od_count(); ++k) {
        EXPECT_NEAR(x.G_H[k] + x.G_S[k] + x.G_R[k], m.demand()[k], 1e-9 * m.demand()[k]);
        EXPECT_GE(x.G_H[k], 0.0);
        EXPECT_GE(x.G_S[k], 0.0);
        if (!m.rail_available()[k]) {
            EXPECT_EQ(x.G_R[k], 0.0);
        }
    }
}

TEST(Simulator, YearEquilibriumConverges) {
    const auto& m = toy();
    auto s = m.initial_state();
    s.S_S = 300;
    const auto eq = m.solve_year_equilibrium(s);
    EXPECT_LE(eq.residual, m.params().equilibrium_tolerance);
    for (std::size_t k = 0; k < m.od_count(); ++k)
        EXPECT_NEAR(eq.split.G_H[k] + eq.split.G_S[k] + eq.split.G_R[k], m.demand()[k], 1e-9 * m.demand()[k]);
}

TEST(Simulator, ForecastIsDeterministic) {
    const auto& m = toy();
    const auto policy = constant_policy(40, 5);
    const auto a = forecast(m, policy);
    const auto b = forecast(m, policy);
    ASSERT_EQ(a.records.size(), 5u);
    for (std::size_t t = 0; t < a.records.size(); ++t) EXPECT_TRUE(same_bits(a.records[t], b.records[t])) << t;
}

TEST(Simulator, PrefixRestartIsBitIdentical) {
    const auto& m = toy();
    std::vector<double> policy{10, 50, 0, 80, 20};
    const auto full = forecast(m, policy);
    auto changed = policy;
    changed[3] = 5;
    const auto fresh = forecast(m, changed);
    const auto restarted = forecast(m, changed, &full, 3);
    for (std::size_t t = 0; t < 5; ++t) EXPECT_TRUE(same_bits(fresh.records[t], restarted.records[t])) << t;
    EXPECT_EQ(fresh.total_cost, restarted.total_cost);
    EXPECT_EQ(fresh.xi_T, restarted.xi_T);
}

TEST(Simulator, StocksAndAccumulation) {
    const auto& m = toy();
    const auto& p = m.params();
    const std::vector<double> policy{30, 0, 60, 10, 0};
    const auto run = forecast(m, policy);
    double S = m.initial_state().S_S, xi = 0.0, cost = 0.0;
    for (std::size_t t = 0; t < policy.size(); ++t) {
        const auto& r = run.records[t];
        S = p.sav_survival * S + policy[t];
        xi += r.E;
        cost += r.C_S + r.C_R;
        EXPECT_NEAR(r.S_S, S, 1e-12);
        EXPECT_NEAR(r.xi, xi, 1e-9 * xi);
        EXPECT_EQ(r.year, 2025 + static_cast<int>(t));
        EXPECT_NEAR(r.S_H, r.S_H_thermal + r.S_H_electric, 1e-9 * r.S_H);
        EXPECT_GE(r.F_R, p.rail_min_frequency);
        EXPECT_NEAR(r.G_H + r.G_S + r.G_R, detail::total(m.demand()), 1e-9 * detail::total(m.demand()));
    }
    EXPECT_NEAR(run.total_cost, cost, 1e-9 * cost);
    EXPECT_EQ(run.states.size(), policy.size() + 1);
}

TEST(Simulator, ZeroPolicyKeepsNoFleet) {
    const auto run = forecast(toy(), constant_policy(0, 5));
    for (const auto& r : run.records) {
        EXPECT_EQ(r.S_S, 0.0);
        EXPECT_EQ(r.u, 0.0);
        EXPECT_EQ(r.U, 0.0);
    }
}

TEST(Simulator, NegativePolicyRejected) {
    EXPECT_THROW(constant_policy(-1, 3), ModelError);
    EXPECT_THROW(forecast(toy(), {10, -2}), ModelError);
}

TEST(Simulator, SavsCutEmissionsOnSiouxFalls) {
    const auto& m = sioux_falls();
    const auto with = forecast(m, constant_policy(700, 15));
    const auto without = forecast(m, constant_policy(0, 15));
    EXPECT_LT(with.xi_T, without.xi_T);
    EXPECT_GT(with.records.back().G_S, without.records.back().G_S);
    EXPECT_LT(with.records.back().t_S_w, with.records.front().t_S_w);
    EXPECT_LE(m.ue().relative_gap, 1e-4);
}

TEST(Simulator, EquilibriumIndependentOfInitialGuess) {
    const auto& m = sioux_falls();
    const std::size_t n = m.od_count();
    auto s = m.initial_state();
    s.S_S = 400;
    s.last_split = ModeSplit(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double share = m.rail_available()[k] ? 1.0 / 3 : 0.5;
        s.last_split.G_H[k] = s.last_split.G_S[k] = share * m.demand()[k];
        s.last_split.G_R[k] = m.rail_available()[k] ? share * m.demand()[k] : 0.0;
    }
    const auto a = m.solve_year_equilibrium(s);
    s.last_split = ModeSplit(n);
    s.last_split.G_H = m.demand();
    const auto b = m.solve_year_equilibrium(s);
    for (std::size_t k = 0; k < n; ++k) {
        EXPECT_NEAR(a.split.G_H[k], b.split.G_H[k], 1e-6 * m.demand()[k]);
        EXPECT_NEAR(a.split.G_S[k], b.split.G_S[k], 1e-6 * m.demand()[k]);
        EXPECT_NEAR(a.split.G_R[k], b.split.G_R[k], 1e-6 * m.demand()[k]);
    }
}

TEST(Simulator, OneYearFromEmptyFleet) {
    const auto& m = toy();
    ASSERT_EQ(m.initial_state().S_S, 0.0);
    const auto [next, rec] = step_year(m, m.initial_state(), 700);
    EXPECT_EQ(next.S_S, 700.0);
    EXPECT_EQ(rec.S_S, 700.0);
}

TEST(Simulator, StepsComposeIntoForecast) {
    const auto& m = toy();
    const auto [s1, r1] = step_year(m, m.initial_state(), 30);
    const auto [s2, r2] = step_year(m, s1, 50);
    const auto run = forecast(m, {30, 50});
    EXPECT_TRUE(same_bits(r1, run.records[0]));
    EXPECT_TRUE(same_bits(r2, run.records[1]));
    EXPECT_EQ(s2.xi, run.xi_T);
}

TEST(Simulator, PolicyOrderMatters) {
    const auto& m = toy();
    const auto a = forecast(m, {0, 0, 0, 0, 200});
    const auto b = forecast(m, {200, 0, 0, 0, 0});
    EXPECT_NE(a.xi_T, b.xi_T);
    EXPECT_NE(a.total_cost, b.total_cost);
}
