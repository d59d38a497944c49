#include "disagg/errors.hpp"
#include "disagg/itclust.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace disagg;
using namespace disagg::itclust;
using disagg::testing::random_memberships;
using disagg::testing::random_points;

namespace {

// Objective written straight from its definition, one sum at a time.
double jcs_triple_loop(const Eigen::MatrixXd& m, const Eigen::MatrixXd& X, double sigma, double psi) {
    const Eigen::Index n = m.rows(), K = m.cols();
    auto G = [&](Eigen::Index i, Eigen::Index j) {
        double d2 = 0;
        for (Eigen::Index c = 0; c < X.cols(); ++c) d2 += (X(i, c) - X(j, c)) * (X(i, c) - X(j, c));
        return std::exp(-d2 / (2 * sigma * sigma));
    };
    double U = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double dot = 0;
            for (Eigen::Index k = 0; k < K; ++k) dot += m(i, k) * m(j, k);
            U += (1 - dot) * G(i, j);
        }
    }
    U *= 0.5;
    double V = 1;
    for (Eigen::Index k = 0; k < K; ++k) {
        double vk = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) vk += m(i, k) * m(j, k) * G(i, j);
        V *= vk;
    }
    V = std::sqrt(V);
    double ent = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < K; ++k) ent += m(i, k) * std::log(m(i, k));
    return U / V - psi * ent;
}

std::vector<int> two_blobs(Rng& rng, Eigen::MatrixXd& X, int per_blob, double separation) {
    std::normal_distribution<double> N(0.0, 1.0);
    X.resize(2 * per_blob, 2);
    std::vector<int> truth(static_cast<std::size_t>(2 * per_blob));
    for (int i = 0; i < 2 * per_blob; ++i) {
        const int b = i < per_blob ? 0 : 1;
        X(i, 0) = N(rng) + b * separation;
        X(i, 1) = N(rng);
        truth[static_cast<std::size_t>(i)] = b;
    }
    return truth;
}

double agreement(const std::vector<int>& a, const std::vector<int>& b) {
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i] ? 1 : 0;
    const double f = static_cast<double>(same) / static_cast<double>(a.size());
    return std::max(f, 1.0 - f);
}

}  // namespace

TEST(Kernel, ClosedFormValues) {
    const std::vector<double> x{0.3, -1.2}, y{0.3, -1.2};
    EXPECT_EQ(gaussian_kernel(x, y, 0.7), 1.0);
    const double s = 0.8;
    const std::vector<double> z{0.3 + s * std::sqrt(2.0), -1.2};
    EXPECT_NEAR(gaussian_kernel(x, z, s), std::exp(-1.0), 1e-15);
    EXPECT_THROW(gaussian_kernel(x, z, 0.0), DomainError);
}

TEST(Kernel, Symmetric) {
    Rng rng = make_rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::MatrixXd P = random_points(rng, 2, 4);
        std::vector<double> x(4), y(4);
        for (int c = 0; c < 4; ++c) {
            x[c] = P(0, c);
            y[c] = P(1, c);
        }
        EXPECT_EQ(gaussian_kernel(x, y, 1.3), gaussian_kernel(y, x, 1.3));
    }
}

TEST(Objective, SingleClusterIsZero) {
    Rng rng = make_rng(22);
    Eigen::MatrixXd X = random_points(rng, 6, 2);
    EXPECT_NEAR(jcs_estimate(Eigen::MatrixXd::Ones(6, 1), gram_matrix(X, 1.0), 0.3), 0.0, 1e-15);
}

TEST(Objective, SeparatedPairsHardMemberships) {
    Eigen::MatrixXd X(4, 1);
    X << 0.0, 0.1, 1000.0, 1000.1;
    Eigen::MatrixXd m(4, 2);
    m << 1, 0, 1, 0, 0, 1, 0, 1;
    EXPECT_NEAR(jcs_estimate(m, gram_matrix(X, 1.0), 0.5), 0.0, 1e-15);
}

TEST(Objective, MatchesTripleLoopOnFourPoints) {
    Rng rng = make_rng(23);
    Eigen::MatrixXd X = random_points(rng, 4, 3);
    Eigen::MatrixXd m = random_memberships(rng, 4, 2);
    EXPECT_NEAR(jcs_estimate(m, gram_matrix(X, 0.9), 0.1), jcs_triple_loop(m, X, 0.9, 0.1), 1e-10);
}

TEST(Gradient, MatchesCentralDifferences) {
    Rng rng = make_rng(24);
    Eigen::MatrixXd X = random_points(rng, 6, 2);
    Eigen::MatrixXd m = random_memberships(rng, 6, 2);
    const Eigen::MatrixXd G = gram_matrix(X, 1.1);
    const Eigen::MatrixXd g = jcs_gradient(m, G, 0.05);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < 6; ++i) {
        for (Eigen::Index k = 0; k < 2; ++k) {
            Eigen::MatrixXd a = m, b = m;
            a(i, k) += h;
            b(i, k) -= h;
            const double fd = (jcs_estimate(a, G, 0.05) - jcs_estimate(b, G, 0.05)) / (2 * h);
            EXPECT_LT(std::abs(fd - g(i, k)), 1e-4 * std::max(1.0, std::abs(fd))) << i << "," << k;
        }
    }
}

TEST(Gradient, SymmetricPointsGetEqualRows) {
    Eigen::MatrixXd X(4, 1);
    // mirror-symmetric, so points 0 and 1 are exchangeable
    X << -1.0, 1.0, -2.5, 2.5;
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(4, 2, 0.5);
    Eigen::MatrixXd g = jcs_gradient(m, gram_matrix(X, 1.0), 0.0);
    EXPECT_NEAR((g.row(0) - g.row(1)).norm(), 0.0, 1e-14);
}

TEST(Gradient, EntropyTermAtOne) {
    Eigen::MatrixXd X(2, 1);
    X << 0.0, 0.5;
    Eigen::MatrixXd m(2, 1);
    m << 1.0, 1.0;
    const Eigen::MatrixXd G = gram_matrix(X, 1.0);
    const Eigen::MatrixXd g0 = jcs_gradient(m, G, 0.0), g1 = jcs_gradient(m, G, 0.7);
    EXPECT_NEAR(g1(0, 0) - g0(0, 0), -0.7, 1e-15);
}

TEST(RowUpdate, WorkedExample) {
    Eigen::VectorXd v(2), g(2);
    v << 1.0, 0.0;
    g << 0.3, 0.4;
    RowUpdate u = update_membership_row(v, g);
    EXPECT_NEAR(u.v(0), -0.6, 1e-15);
    EXPECT_NEAR(u.v(1), -0.8, 1e-15);
    EXPECT_NEAR(u.v(0) * u.v(0), 0.36, 1e-15);
    EXPECT_NEAR(u.v(1) * u.v(1), 0.64, 1e-15);
    EXPECT_FALSE(u.stalled);
}

TEST(RowUpdate, UnitNormAndScaleInvariance) {
    Rng rng = make_rng(25);
    std::uniform_real_distribution<double> U(0.01, 100.0);
    for (int rep = 0; rep < 200; ++rep) {
        const Eigen::Index k = 1 + rep % 5;
        Eigen::VectorXd v = Eigen::VectorXd::Constant(k, 1.0 / std::sqrt(double(k)));
        Eigen::VectorXd g = random_points(rng, k, 1);
        const RowUpdate a = update_membership_row(v, g);
        EXPECT_NEAR(a.v.norm(), 1.0, 1e-14);
        EXPECT_NEAR(a.v.array().square().sum(), 1.0, 1e-14);
        const RowUpdate b = update_membership_row(v, U(rng) * g);
        EXPECT_LT((a.v - b.v).norm(), 1e-14);
    }
}

TEST(RowUpdate, ZeroGradientKeepsRow) {
    Eigen::VectorXd v(2);
    v << 0.6, 0.8;
    RowUpdate u = update_membership_row(v, Eigen::VectorXd::Zero(2));
    EXPECT_TRUE(u.stalled);
    EXPECT_EQ(u.v, v);
}

namespace {

// N alternating +-a values with unit sample variance (N even).
Eigen::MatrixXd unit_variance_column(int n) {
    Eigen::MatrixXd X(n, 1);
    for (int i = 0; i < n; ++i) X(i, 0) = (i % 2 ? 1.0 : -1.0) * std::sqrt((n - 1.0) / n);
    return X;
}

}  // namespace

TEST(Silverman, DirectFormula) {
    EXPECT_NEAR(silverman_sigma(unit_variance_column(100)), std::pow(4.0 / (100.0 * 3.0), 1.0 / 5.0), 1e-12);
    Rng rng = make_rng(33);
    Eigen::MatrixXd X = random_points(rng, 40, 3);
    const Eigen::RowVectorXd mu = X.colwise().mean();
    double var = 0;
    for (int i = 0; i < 40; ++i)
        for (int c = 0; c < 3; ++c) var += (X(i, c) - mu(c)) * (X(i, c) - mu(c));
    var /= 39.0 * 3.0;
    EXPECT_NEAR(silverman_sigma(X), std::sqrt(var) * std::pow(4.0 / (40.0 * 7.0), 1.0 / 7.0), 1e-12);
}

TEST(Silverman, HomogeneousAndDecreasingInN) {
    Rng rng = make_rng(26);
    Eigen::MatrixXd X = random_points(rng, 50, 3);
    EXPECT_NEAR(silverman_sigma(3.7 * X), 3.7 * silverman_sigma(X), 1e-12);
    double prev = std::numeric_limits<double>::infinity();
    for (int n = 10; n <= 200; n += 10) {
        const double s = silverman_sigma(unit_variance_column(n));
        EXPECT_LT(s, prev);
        prev = s;
    }
    EXPECT_THROW(silverman_sigma(Eigen::MatrixXd::Ones(5, 2)), DegenerateError);
}

TEST(Anneal, EndpointsAndLength) {
    for (int n : {1, 2, 30, 97}) {
        auto s = anneal_schedule(2.4, n);
        ASSERT_EQ(static_cast<int>(s.size()), n);
        EXPECT_NEAR(s.front(), 2.4, 1e-12);
        if (n > 1) EXPECT_NEAR(s.back(), 0.6, 1e-12);
        for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(s[i], s[i - 1]);
    }
}

TEST(Cluster, TwoBlobsRecovered) {
    Rng rng = make_rng(27);
    Eigen::MatrixXd X;
    auto truth = two_blobs(rng, X, 100, 10.0);
    ClusterParams p;
    p.k = 2;
    p.seed = 1;
    EXPECT_GE(agreement(cluster(X, p).hard_labels(), truth), 0.95);
}

TEST(Cluster, SingleClusterIsAllOnes) {
    Rng rng = make_rng(28);
    Eigen::MatrixXd X = random_points(rng, 30, 2);
    ClusterParams p;
    p.k = 1;
    p.iterations = 1;
    MembershipMatrix M = cluster(X, p);
    EXPECT_TRUE((M.m().array() == 1.0).all());
}

TEST(Cluster, SimplexAfterEveryIteration) {
    Rng rng = make_rng(29);
    for (auto mode : {Subsample::Columns, Subsample::Rows}) {
        for (int k : {2, 3, 5}) {
            Eigen::MatrixXd X = random_points(rng, 80, 3);
            ClusterParams p;
            p.k = k;
            p.psi = 0.01;
            p.subsample = mode;
            p.seed = static_cast<std::uint64_t>(k);
            int calls = 0;
            cluster(X, p, [&](int, const MembershipMatrix& M) {
                ++calls;
                EXPECT_LT(M.max_simplex_error(), 1e-9);
                EXPECT_TRUE((M.m().array() >= 0.0).all());
            });
            EXPECT_EQ(calls, p.iterations);
        }
    }
}

TEST(Cluster, ObjectiveNonIncreasingWithFullSums) {
    Rng rng = make_rng(30);
    Eigen::MatrixXd X;
    two_blobs(rng, X, 40, 10.0);
    ClusterParams p;
    p.k = 2;
    p.psi = 0.0;
    p.sample_fraction = 1.0;
    p.sigma_override = silverman_sigma(X);
    p.seed = 3;
    const Eigen::MatrixXd G = gram_matrix(X, *p.sigma_override);
    double prev = std::numeric_limits<double>::infinity();
    cluster(X, p, [&](int, const MembershipMatrix& M) {
        const double j = jcs_estimate(M, G, 0.0);
        EXPECT_LE(j, prev + 1e-6);
        prev = j;
    });
}

TEST(Cluster, Reproducible) {
    Rng rng = make_rng(31);
    Eigen::MatrixXd X = random_points(rng, 60, 2);
    ClusterParams p;
    p.k = 3;
    p.seed = 42;
    EXPECT_EQ(cluster(X, p).v(), cluster(X, p).v());
    p.seed = 43;
    EXPECT_NE(cluster(X, p).v(), cluster(X, ClusterParams{.k = 3, .seed = 42}).v());
}

TEST(Cluster, BatchMatchesSingleRuns) {
    Rng rng = make_rng(32);
    Eigen::MatrixXd X = random_points(rng, 120, 3);
    std::vector<ClusterParams> ps;
    for (int k : {2, 4})
        for (double psi : {1e-3, 1e-1}) ps.push_back(ClusterParams{.k = k, .psi = psi, .seed = 9});
    auto batch = cluster_batch(X, ps);
    ASSERT_EQ(batch.size(), ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        EXPECT_LT((batch[i].m() - cluster(X, ps[i]).m()).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Cluster, RejectsBadParams) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 2);
    EXPECT_THROW(cluster(X, ClusterParams{.k = 0}), Error);
    EXPECT_THROW(cluster(X, ClusterParams{.k = 11}), Error);
    EXPECT_THROW(cluster(X, ClusterParams{.k = 2, .iterations = 0}), Error);
}
