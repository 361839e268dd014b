#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "mobility/level_of_service.hpp"

using namespace mobility;

namespace {

struct Moments {
    double L, Lq, Wq;
    Eigen::VectorXd pi;
};

/// Balance equations pi Q = 0, sum pi = 1, solved as a dense linear system.
Moments birth_death(int s, int N, double lambda, double mu) {
    const int n = N + 1;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        if (i < N) Q(i, i + 1) = (N - i) * lambda;
        if (i > 0) Q(i, i - 1) = std::min(i, s) * mu;
        Q(i, i) = -Q.row(i).sum();
    }
    Eigen::MatrixXd A = Q.transpose();
    A.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Moments m;
    m.pi = A.fullPivLu().solve(b);
    m.L = m.Lq = 0;
    for (int i = 0; i < n; ++i) {
        m.L += i * m.pi(i);
        m.Lq += std::max(0, i - s) * m.pi(i);
    }
    m.Wq = m.Lq / (lambda * (N - m.L));
    return m;
}

}  // namespace

TEST(Queue, MatchesBirthDeathSolve) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> pop(2, 80);
    std::uniform_real_distribution<double> rate(0.2, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int N = pop(rng);
        const int s = std::uniform_int_distribution<int>(1, N)(rng);
        const double lam = rate(rng), mu = rate(rng);
        const auto ref = birth_death(s, N, lam, mu);
        const auto q = finite_population_queue(s, N, lam, mu);
        EXPECT_NEAR(q.L, ref.L, 1e-8 * std::max(1.0, ref.L)) << trial;
        EXPECT_NEAR(q.Lq, ref.Lq, 1e-8 * std::max(1.0, ref.Lq)) << trial;
        EXPECT_NEAR(q.Wq, ref.Wq, 1e-8 * std::max(1.0, ref.Wq)) << trial;
        for (int i = 0; i <= N; ++i) EXPECT_NEAR(q.probability(i), ref.pi(i), 1e-10);
        EXPECT_NEAR(finite_population_wait(s, N, lam, mu), ref.Wq, 1e-8 * std::max(1.0, ref.Wq));
    }
}

TEST(Queue, DegenerateInputs) {
    auto q = finite_population_queue(3, 0, 1, 1);
    EXPECT_EQ(q.Wq, 0.0);
    q = finite_population_queue(0, 5, 1, 1);
    EXPECT_TRUE(std::isinf(q.Wq));
    EXPECT_EQ(q.L, 5.0);
    EXPECT_THROW(finite_population_queue(1, 5, 1, 0), ModelError);
    // Servers for everyone: nobody waits.
    EXPECT_EQ(finite_population_queue(10, 10, 2, 1).Lq, 0.0);
}

TEST(SavWait, DecreasesWithFleetAndIsCapped) {
    const QueueParams qp;
    double prev = INFINITY;
    for (double S = 0; S <= 400; S += 25) {
        const double w = sav_wait_time(300, S, 20, qp);
        EXPECT_LE(w, qp.wait_cap);
        EXPECT_LE(w, prev + 1e-12);
        prev = w;
    }
    EXPECT_EQ(sav_wait_time(300, 0, 20, qp), qp.wait_cap);
    EXPECT_EQ(sav_wait_time(0, 10, 20, qp), 0.0);
    EXPECT_THROW(sav_wait_time(-1, 10, 20, qp), ModelError);
}

TEST(SavWait, InterpolatesBetweenIntegerChains) {
    const QueueParams qp;
    // population = G * 20/60 * 6 = 2G; G = 90 gives 180 customers exactly.
    const double a = sav_wait_time(90, 120, 20, qp);
    const double b = sav_wait_time(90, 121, 20, qp);
    EXPECT_NEAR(sav_wait_time(90, 120.25, 20, qp), 0.75 * a + 0.25 * b, 1e-12);
    const double mu = 60.0 / 23.0;
    EXPECT_NEAR(a, 60.0 * birth_death(120, 180, 1.0, mu).Wq, 1e-8);
    // Continuity across an integer fleet size.
    EXPECT_NEAR(sav_wait_time(90, 121 - 1e-9, 20, qp), b, 1e-6);
}

TEST(Utilisation, FactorClampsAndScales) {
    EXPECT_NEAR(utilisation(100, 50, 40000, 10, 3000), 100.0 * 10 * 3000 / 50 / 40000, 1e-12);
    EXPECT_THROW(utilisation(1, 0, 1, 1, 1), ModelError);
    EXPECT_NEAR(utilisation_factor(2.0, 0.5, 0.1, 0.2, 5.0), std::pow(2.0, -0.5), 1e-15);
    EXPECT_EQ(utilisation_factor(0.0, 0.5, 0.01, 0.2, 5.0), 5.0);
    EXPECT_EQ(utilisation_factor(1e9, 0.5, 0.01, 0.2, 5.0), 0.2);
}

TEST(Perception, FirstOrderLagConverges) {
    double x = 0;
    for (int i = 0; i < 200; ++i) x = perceive(x, 10, 4, 1);
    EXPECT_NEAR(x, 10, 1e-12);
    EXPECT_DOUBLE_EQ(perceive(2, 6, 2, 1), 4);
    EXPECT_THROW(perceive(0, 1, 0, 1), ModelError);
}

TEST(Rail, AccessEgress) {
    // 0.8 km spacing, 4.8 km/h: 2 * 5 min walk; 6 trains/h: 5 min wait.
    EXPECT_NEAR(rail_access_egress(6, 0.8, 4.8), 15.0, 1e-12);
    EXPECT_THROW(rail_access_egress(0, 1, 5), ModelError);
}

TEST(Queue, SmallChainByHand) {
    // s = 2, N = 5, lambda 0.5/h, mu 2/h
    const auto q = finite_population_queue(2, 5, 0.5, 2.0);
    EXPECT_NEAR(q.Wq, birth_death(2, 5, 0.5, 2.0).Wq, 1e-12);
}

TEST(Utilisation, Algebra) {
    // 100 pax/h * 10 km * 2000 h / 50 SAVs = 40000 km = 2 * benchmark
    EXPECT_NEAR(utilisation(100, 50, 40000, 10, 2000), 1.0, 1e-15);
    EXPECT_EQ(utilisation(0, 50, 40000, 10, 2000), 0.0);
    EXPECT_NEAR(utilisation(100, 100, 40000, 10, 2000), 0.5, 1e-15);
}

TEST(Utilisation, CustomerCosts) {
    ParamSet p;
    auto c = sav_customer_costs(1.0, p);
    EXPECT_DOUBLE_EQ(c.op, 0.5);
    EXPECT_DOUBLE_EQ(c.ae, 2.0);
    c = sav_customer_costs(2.0, p);
    EXPECT_NEAR(c.op, 0.5 * std::pow(2.0, -0.3), 1e-15);
    EXPECT_EQ(sav_customer_costs(0.0, p).op, sav_customer_costs(p.utilisation_floor, p).op);
}

TEST(Perception, Cases) {
    EXPECT_EQ(perceive(3, 3, 2, 1), 3);
    EXPECT_EQ(perceive(1, 7, 1, 1), 7);
    double x = 0, err = 10;
    for (int i = 0; i < 5; ++i) {
        x = perceive(x, 10, 4, 1);
        EXPECT_NEAR(10 - x, err * 0.75, 1e-12);
        err = 10 - x;
    }
}

TEST(Rail, AccessEgressCases) {
    EXPECT_NEAR(rail_access_egress(30, 0, 4.5), 1.0, 1e-15);
    EXPECT_NEAR(rail_access_egress(15, 0, 4.5), 2.0, 1e-15);
    EXPECT_NEAR(rail_access_egress(1e300, 0.8, 4.5), 2 * 60 * 0.4 / 4.5, 1e-12);
}
