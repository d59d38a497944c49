#include "disagg/errors.hpp"
#include "disagg/kridge.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace disagg;
using namespace disagg::kridge;
using disagg::testing::random_points;

namespace {

Eigen::VectorXd smooth_target(const Eigen::MatrixXd& X) {
    Eigen::VectorXd y(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = std::sin(X(i, 0)) + 0.5 * X(i, 1) * X(i, 1);
    return y;
}

}  // namespace

TEST(Kridge, SinglePointInterpolates) {
    Eigen::MatrixXd X(1, 3);
    X << 0.2, -4.0, 7.0;
    Eigen::VectorXd y(1);
    y << 3.25;
    KernelModel m = fit(X, y, 0.0);
    EXPECT_NEAR(predict(m, std::vector<double>{0.2, -4.0, 7.0}), 3.25, 1e-12);
}

TEST(Kridge, InterpolatesWithTinyRidge) {
    // residual at the training points is mu * w, so it needs a well-conditioned Gram
    Rng rng = make_rng(41);
    std::uniform_real_distribution<double> U(0.0, 0.5);
    for (int d : {3, 7}) {
        for (int n : {5, 50, 200}) {
            Eigen::MatrixXd X = random_points(rng, n, d);
            Eigen::VectorXd y(n);
            for (auto& v : y) v = U(rng);
            KernelModel m = fit(X, y, 1e-10);
            EXPECT_LT((predict(m, X) - y).cwiseAbs().maxCoeff(), 1e-6) << d << " " << n;
        }
    }
    Eigen::MatrixXd X = random_points(rng, 100, 2);
    Eigen::VectorXd y = smooth_target(X);
    EXPECT_LT((predict(fit(X, y, 1e-10), X) - y).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Kridge, WeightsShrinkWithRidge) {
    Rng rng = make_rng(42);
    Eigen::MatrixXd X = random_points(rng, 60, 3);
    Eigen::VectorXd y = smooth_target(X) + random_points(rng, 60, 1, 0.1);
    const std::vector<double> mus{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    auto path = fit_path(X, y, mus);
    for (std::size_t i = 1; i < path.size(); ++i) EXPECT_GE(path[i - 1].weights.norm(), path[i].weights.norm());
    for (std::size_t i = 0; i < path.size(); ++i) {
        EXPECT_LT((path[i].weights - fit(X, y, mus[i]).weights).norm(), 1e-9);
    }
}

TEST(Kridge, LinearInTargets) {
    Rng rng = make_rng(43);
    Eigen::MatrixXd X = random_points(rng, 40, 2);
    Eigen::VectorXd y = smooth_target(X);
    Eigen::MatrixXd Q = random_points(rng, 25, 2, 2.0);
    const double sigma = default_sigma(X);
    const Eigen::VectorXd a = predict(fit(X, y, 0.1, sigma), Q);
    const Eigen::VectorXd b = predict(fit(X, Eigen::VectorXd(2.0 * y), 0.1, sigma), Q);
    EXPECT_LT((b - 2.0 * a).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Kridge, FarPointBounded) {
    Rng rng = make_rng(44);
    Eigen::MatrixXd X = random_points(rng, 30, 2);
    KernelModel m = fit(X, smooth_target(X), 1e-2);
    const double bound = m.weights.cwiseAbs().sum();
    for (double far : {1e3, 1e6, 1e12}) {
        EXPECT_LE(std::abs(kernel_response(m, std::vector<double>{far, -far})), bound);
    }
}

TEST(Kridge, RowPermutationInvariant) {
    Rng rng = make_rng(45);
    Eigen::MatrixXd X = random_points(rng, 50, 3);
    Eigen::VectorXd y = smooth_target(X);
    std::vector<int> perm(50);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd Xp(50, 3);
    Eigen::VectorXd yp(50);
    for (int i = 0; i < 50; ++i) {
        Xp.row(i) = X.row(perm[i]);
        yp(i) = y(perm[i]);
    }
    Eigen::MatrixXd Q = random_points(rng, 20, 3);
    EXPECT_LT((predict(fit(X, y, 0.01), Q) - predict(fit(Xp, yp, 0.01), Q)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kridge, DefaultSigmaFallsBackForConstantInputs) {
    EXPECT_EQ(default_sigma(Eigen::MatrixXd::Ones(10, 2)), 1.0);
    EXPECT_EQ(default_sigma(Eigen::MatrixXd::Ones(1, 2)), 1.0);
}

TEST(Kridge, SerializationRoundTrip) {
    Rng rng = make_rng(46);
    Eigen::MatrixXd X = random_points(rng, 20, 2);
    KernelModel m = fit(X, smooth_target(X), 0.05);
    std::stringstream ss;
    write_model(ss, m);
    KernelModel back = read_model(ss);
    Eigen::MatrixXd Q = random_points(rng, 10, 2);
    EXPECT_EQ(predict(m, Q), predict(back, Q));
}

TEST(Kridge, RejectsBadInput) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 2);
    EXPECT_THROW(fit(X, Eigen::VectorXd::Zero(4), 0.1), DimensionError);
    EXPECT_THROW(fit(X, Eigen::VectorXd::Zero(5), -1.0), DomainError);
    KernelModel m = fit(X, Eigen::VectorXd::Random(5), 0.1);
    EXPECT_THROW(predict(m, std::vector<double>{1.0}), DimensionError);
}
