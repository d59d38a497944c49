#include "disagg/errors.hpp"
#include "disagg/metrics.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace disagg;
using namespace disagg::metrics;
using disagg::testing::random_grid;

TEST(Rmse, TrivialCases) {
    Grid t(5, 5, 1.0, Variable::SM, 0.0);
    EXPECT_EQ(rmse(t, t), 0.0);
    EXPECT_NEAR(rmse(Grid(5, 5, 1.0, Variable::SM, 0.02), t), 0.02, 1e-15);
}

TEST(Rmse, MatchesTwoPassOracle) {
    Rng rng = make_rng(51);
    for (int rep = 0; rep < 20; ++rep) {
        Grid a = random_grid(rng, 8, 9, Variable::SM), b = random_grid(rng, 8, 9, Variable::SM);
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        EXPECT_NEAR(rmse(a, b), std::sqrt(s / 72.0), 1e-12);
        EXPECT_NEAR(rmse(a, b), rmse(b, a), 1e-15);
    }
}

TEST(Rmse, PerClassAndEmptyMask) {
    Grid est(1, 4, 1.0, Variable::SM, std::vector<double>{0.1, 0.2, 0.3, 0.4});
    Grid tru(1, 4, 1.0, Variable::SM, std::vector<double>{0.1, 0.1, 0.3, 0.1});
    Grid lc(1, 4, 1.0, Variable::LC, std::vector<double>{0, 1, 0, 1});
    EXPECT_EQ(rmse(est, tru, lc, LandCover::Bare), 0.0);
    EXPECT_NEAR(rmse(est, tru, lc, LandCover::Corn), std::sqrt((0.01 + 0.09) / 2), 1e-15);
    EXPECT_THROW(rmse(est, tru, lc, LandCover::Cotton), DomainError);
}

TEST(Kld, IdenticalSamplesAreZero) {
    Rng rng = make_rng(52);
    Grid a = random_grid(rng, 20, 20, Variable::SM, 0.0, 0.5);
    EXPECT_NEAR(kld(a.values(), a.values(), sm_histogram()), 0.0, 1e-12);
}

TEST(Kld, ShiftedGaussiansMatchClosedForm) {
    Rng rng = make_rng(53);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> p(100000), q(100000);
    for (auto& x : p) x = N(rng);
    for (auto& x : q) x = N(rng) + 0.5;
    HistogramSpec h;
    h.bins = 50;
    const double analytic = 0.5 * 0.5 * 0.5;
    EXPECT_NEAR(kld(q, p, h), analytic, 0.15 * analytic);
}

TEST(Kld, NonNegativeOnRandomSets) {
    Rng rng = make_rng(54);
    std::uniform_int_distribution<int> size(10, 300);
    for (int rep = 0; rep < 100; ++rep) {
        Grid a = random_grid(rng, 1, static_cast<std::size_t>(size(rng)), Variable::SM, 0.0, 0.6);
        Grid b = random_grid(rng, 1, static_cast<std::size_t>(size(rng)), Variable::SM, 0.1, 0.4);
        HistogramSpec h = sm_histogram();
        EXPECT_GE(kld(a.values(), b.values(), h), 0.0);
        h.direction = KlDirection::EstimateToTruth;
        EXPECT_GE(kld(a.values(), b.values(), h), 0.0);
        h.range.reset();
        EXPECT_GE(kld(a.values(), b.values(), h), 0.0);
    }
}

TEST(Kld, DirectionSwapsArguments) {
    std::vector<double> a{0.1, 0.1, 0.2, 0.3, 0.3, 0.3, 0.4, 0.1, 0.2, 0.25};
    std::vector<double> b{0.1, 0.2, 0.2, 0.2, 0.3, 0.35, 0.4, 0.4, 0.2, 0.25};
    HistogramSpec h = sm_histogram();
    const double fwd = kld(a, b, h);
    h.direction = KlDirection::EstimateToTruth;
    EXPECT_NEAR(kld(b, a, h), fwd, 1e-15);
}

TEST(Kld, TooFewSamples) {
    std::vector<double> a(9, 0.1), b(20, 0.1);
    EXPECT_THROW(kld(a, b), DomainError);
}

TEST(ZTest, TrivialDecisions) {
    EXPECT_TRUE(ztest_threshold(std::vector<double>(100, 0.0)).pass);
    EXPECT_FALSE(ztest_threshold(std::vector<double>(100, 0.1)).pass);
    EXPECT_FALSE(ztest_threshold(std::vector<double>(100, -0.1)).pass);
}

TEST(ZTest, SmallSampleUsesT) {
    std::vector<double> e{0.01, 0.02, 0.015, 0.03, 0.005};
    ZTest z = ztest_threshold(e);
    EXPECT_TRUE(z.t_approximation);
    EXPECT_GT(z.critical, 1.6448536269514722);
    EXPECT_FALSE(ztest_threshold(std::vector<double>(30, 0.01)).t_approximation);
}

TEST(ZTest, StatisticMatchesFormula) {
    Rng rng = make_rng(55);
    std::normal_distribution<double> N(0.0, 0.05);
    std::vector<double> e(400);
    for (auto& x : e) x = N(rng);
    double m = 0, s = 0;
    for (double x : e) m += std::abs(x);
    m /= 400;
    for (double x : e) s += (std::abs(x) - m) * (std::abs(x) - m);
    s = std::sqrt(s / 399);
    ZTest z = ztest_threshold(e, 0.04, 0.05);
    EXPECT_NEAR(z.statistic, (m - 0.04) / (s / 20.0), 1e-10);
    EXPECT_NEAR(z.critical, 1.6448536269514722, 1e-12);
    EXPECT_EQ(z.pass, z.statistic < z.critical);
}

TEST(ZTest, SmallErrorsPassMonteCarlo) {
    int passes = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng = make_rng(seed, {56});
        std::normal_distribution<double> N(0.0, 0.01);
        std::vector<double> e(2500);
        for (auto& x : e) x = std::abs(N(rng));
        passes += ztest_threshold(e).pass ? 1 : 0;
    }
    EXPECT_GT(passes / 100.0, 0.99 - 1e-12);
}

TEST(FractionBelow, Cases) {
    Grid t(2, 2, 1.0, Variable::SM, 0.2);
    EXPECT_EQ(error_fraction_below(t, t, 1e-9), 1.0);
    Grid e(2, 2, 1.0, Variable::SM, std::vector<double>{0.25, 0.2, 0.15, 0.2});
    EXPECT_EQ(error_fraction_below(e, t, 0.02), 0.5);
}
