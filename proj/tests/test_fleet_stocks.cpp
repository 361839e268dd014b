#include <cmath>

#include <gtest/gtest.h>

#include "mobility/fleet.hpp"

using namespace mobility;

TEST(SavStock, GeometricConvergence) {
    double S = 0;
    for (int t = 0; t < 400; ++t) S = sav_stock_step(S, 700, 0.93);
    EXPECT_NEAR(S, 700 / 0.07, 1e-6);
    EXPECT_DOUBLE_EQ(sav_stock_step(1000, 0, 0.95), 950);
    EXPECT_THROW(sav_stock_step(10, -1, 0.9), ModelError);
}

TEST(Rail, FrequencyAndFleet) {
    ParamSet p;
    p.rail_line_count = 2;
    // 14700 / (700 * 0.7) = 30 trains/h
    const auto r = rail_update(14700, 2, 15, p);
    EXPECT_NEAR(r.F_R, 30, 1e-12);
    EXPECT_NEAR(r.K_R, 30 * 700, 1e-9);
    // 30/h * 1 h round trip * 2 lines * 1.1 = 66
    EXPECT_EQ(r.S_R, 66);
    EXPECT_EQ(rail_update(10, 2, 15, p).F_R, p.rail_min_frequency);
}

TEST(HvStock, InitialProfile) {
    ParamSet p;
    const auto s = initial_hv_stock(12000.0 * 5000, p);
    EXPECT_NEAR(s.total(), 5000, 1e-9);
    EXPECT_NEAR(s.thermal(), 0.95 * 5000, 1e-9);
    EXPECT_NEAR(s.counts[kThermal][1] / s.counts[kThermal][0], 0.92, 1e-12);
}

TEST(HvStock, StepAgesScrapsAndBuys) {
    ParamSet p;
    HVStock s;
    s.counts[kThermal][0] = 1000;
    s.counts[kElectric][3] = 200;
    const auto r = hv_stock_step(s, 12000.0 * 1500, p);
    EXPECT_NEAR(r.stock.counts[kThermal][1], 1000 * p.hv_survival[1], 1e-9);
    EXPECT_NEAR(r.stock.counts[kElectric][4], 200 * p.hv_survival[4], 1e-9);
    EXPECT_NEAR(r.required, 1500, 1e-9);
    EXPECT_NEAR(r.purchases, 1500 - r.surviving, 1e-9);
    EXPECT_NEAR(r.stock.total(), 1500, 1e-9);
    EXPECT_NEAR(r.stock.counts[kElectric][0], r.purchases * r.electric_share_of_purchases, 1e-9);

    // Demand below the survivors: no purchases, nobody is scrapped early.
    const auto q = hv_stock_step(s, 0.0, p);
    EXPECT_EQ(q.purchases, 0.0);
    EXPECT_NEAR(q.stock.total(), q.surviving, 1e-12);
}

TEST(HvStock, ElectricPurchaseShare) {
    ParamSet p;
    const double tt = 25000 + 0.08 * 12000 * 8, te = 32000 + 0.04 * 12000 * 8;
    const double sigma = 1 / (1 + std::exp(-0.3 * (tt - te) / 1000));
    for (double phi : {0.0, 0.05, 0.5}) {
        const double want = phi + (1 - phi) * (0.01 + 0.4 * phi) * 2 * sigma;
        EXPECT_NEAR(electric_purchase_share(phi, p), want, 1e-14);
    }
    EXPECT_LE(electric_purchase_share(1.0, p), 1.0);
}

TEST(HvStock, Vkm) {
    EXPECT_DOUBLE_EQ(hv_vkm({10, 20}, {3, 4}, 2000), (30 + 80) * 2000.0);
}

TEST(HvStock, RequiredFleetAndDropouts) {
    ParamSet p;
    EXPECT_NEAR(hv_stock_step(HVStock{}, 1.2e8, p).required, 10000, 1e-9);
    // No scrappage: only the oldest cohort leaves, and it is replaced.
    p.hv_survival.fill(1.0);
    HVStock s;
    for (auto& c : s.counts[kThermal]) c = 100;
    const auto r = hv_stock_step(s, s.total() * p.M, p);
    EXPECT_NEAR(r.purchases, 100, 1e-9);
}

TEST(HvStock, VkmCases) {
    EXPECT_EQ(hv_vkm({0, 0}, {5, 6}, 2000), 0.0);
    EXPECT_DOUBLE_EQ(hv_vkm({100}, {5}, 2000), 1.0e6);
}

TEST(SavStock, Cases) {
    EXPECT_EQ(sav_stock_step(0, 700, 0.93), 700);
    EXPECT_EQ(sav_stock_step(123, 0, 1.0), 123);
}

TEST(Rail, FloorAndProportionality) {
    ParamSet p;
    const auto z = rail_update(0, 4, 10, p);
    EXPECT_EQ(z.F_R, p.rail_min_frequency);
    EXPECT_EQ(z.K_R, p.rail_min_frequency * p.train_capacity);
    const auto a = rail_update(10000, 4, 10, p), b = rail_update(20000, 4, 10, p);
    EXPECT_NEAR(b.F_R, 2 * a.F_R, 1e-12);
    EXPECT_NEAR(b.K_R, 2 * a.K_R, 1e-9);
}
