#include <gtest/gtest.h>

#include "mobility/impacts.hpp"

using namespace mobility;

TEST(Emissions, ThermalStockOnly) {
    ParamSet p;
    HVStock s;
    s.counts[kThermal][0] = 1000;
    s.counts[kThermal][10] = 500;
    s.counts[kElectric][0] = 9999;
    // 110 g/km new, 125 g/km at age 10, 12000 km/y
    EXPECT_NEAR(emissions(s, p.epsilon_a, 12000), (1000 * 110 + 500 * 125) * 12000 / 1e6, 1e-9);
}

TEST(Emissions, Accumulate) {
    double xi = 0;
    for (int t = 0; t < 4; ++t) xi = accumulate(xi, 250);
    EXPECT_EQ(xi, 1000);
    EXPECT_THROW(accumulate(0, -1), ModelError);
}

TEST(OperatorCost, Sav) {
    ParamSet p;
    // U = 1: factor 1
    EXPECT_NEAR(sav_operator_cost(1e6, 100, 1.0, p), 0.2 * 1e6 + 100 * 120000.0, 1e-6);
    // U = 4: factor 4^-0.5 = 0.5
    EXPECT_NEAR(sav_operator_cost(1e6, 0, 4.0, p), 0.1 * 1e6, 1e-6);
    EXPECT_THROW(sav_operator_cost(-1, 0, 1, p), ModelError);
}

TEST(OperatorCost, Rail) {
    ParamSet p;
    const auto c = rail_operator_cost(1e6, 66, p);
    const double dep = 66 * 8e6 / (35 * 1e6);
    EXPECT_NEAR(c.dep, dep, 1e-12);
    EXPECT_NEAR(c.total, (10 + dep) * 1e6 + 5.4767e7, 1e-3);
    // Depreciation floor for idle service.
    EXPECT_NEAR(rail_operator_cost(0, 10, p).dep, 10 * 8e6 / (35 * 1e4), 1e-9);
}

TEST(Emissions, Cases) {
    ParamSet p;
    HVStock s;
    EXPECT_EQ(emissions(s, p.epsilon_a, p.M), 0.0);
    std::array<double, kAgeClasses> eps{};
    eps.fill(120);
    s.counts[kThermal][4] = 1000;
    EXPECT_NEAR(emissions(s, eps, 12000), 1440, 1e-9);
    EXPECT_EQ(accumulate(10, 5), 15);
}

TEST(OperatorCost, Cases) {
    ParamSet p;
    EXPECT_EQ(sav_operator_cost(0, 0, 1, p), 0.0);
    EXPECT_NEAR(rail_operator_cost(0, 0, p).total, 5.4767e7, 1e-6);
    const double c1 = rail_operator_cost(1e6, 40, p).total, c2 = rail_operator_cost(2e6, 40, p).total;
    EXPECT_LT(c2, 2 * c1);
}
