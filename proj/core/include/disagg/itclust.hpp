#pragma once

// Regularized Cauchy-Schwarz clustering with soft memberships.
//
// Memberships are parameterized as m_ik = v_ik^2 with unit-norm rows v_i, so
// each m_i lies on the probability simplex. The objective
//
//     J(m) = U / V - psi * sum_ik m_ik log m_ik
//     U    = 1/2 sum_ij (1 - m_i.m_j) G_ij
//     V    = sqrt(prod_k v_k),  v_k = sum_ij m_ik m_jk G_ij
//
// is minimized with a Lagrange-multiplier fixed-point update on v, a linearly
// annealed kernel width, and kernel sums estimated from a random subsample.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace disagg::itclust {

/// n x d samples; rows are points.
using FeatureMatrix = Eigen::MatrixXd;

class MembershipMatrix {
public:
    MembershipMatrix() = default;
    /// Takes the square-root parameterization; every row must have unit norm.
    explicit MembershipMatrix(Eigen::MatrixXd v);
    /// Builds from memberships on the simplex (v = sqrt(m)).
    static MembershipMatrix from_memberships(const Eigen::MatrixXd& m);

    Eigen::Index n() const noexcept { return v_.rows(); }
    Eigen::Index k() const noexcept { return v_.cols(); }

    const Eigen::MatrixXd& v() const noexcept { return v_; }
    Eigen::MatrixXd m() const { return v_.array().square().matrix(); }
    double m(Eigen::Index i, Eigen::Index k) const { return v_(i, k) * v_(i, k); }

    void set_row(Eigen::Index i, const Eigen::VectorXd& v_row);

    /// argmax per row, ties to the lowest cluster index.
    std::vector<int> hard_labels() const;

    /// max_i |sum_k m_ik - 1|.
    double max_simplex_error() const;

private:
    Eigen::MatrixXd v_;
};

double gaussian_kernel(std::span<const double> x, std::span<const double> y, double sigma);

/// Gram matrix of gaussian_kernel over the rows of X.
Eigen::MatrixXd gram_matrix(const FeatureMatrix& X, double sigma);

/// U, the per-cluster masses v_k and V for a given membership/Gram pair.
struct CsTerms {
    double u = 0.0;
    Eigen::VectorXd vk;
    double v = 0.0;
};
CsTerms cs_terms(const Eigen::MatrixXd& m, const Eigen::MatrixXd& G);

/// Regularized objective. Throws DegenerateError when some cluster has zero kernel mass.
double jcs_estimate(const Eigen::MatrixXd& m, const Eigen::MatrixXd& G, double psi);
double jcs_estimate(const MembershipMatrix& M, const Eigen::MatrixXd& G, double psi);

/// dJ/dm, n x K, with log m floored at kLogFloor for zero memberships.
Eigen::MatrixXd jcs_gradient(const Eigen::MatrixXd& m, const Eigen::MatrixXd& G, double psi);
Eigen::MatrixXd jcs_gradient(const MembershipMatrix& M, const Eigen::MatrixXd& G, double psi);

inline constexpr double kLogFloor = 1e-12;

struct RowUpdate {
    Eigen::VectorXd v;
    bool stalled = false;  // zero gradient: previous row kept
};

/// Lagrange step on one row: lambda = |g|/2, v+ = -g/(2 lambda). `grad_v` is dJ/dv_i.
RowUpdate update_membership_row(const Eigen::VectorXd& v, const Eigen::VectorXd& grad_v);

/// sigma_X * (4 / (N (2d+1)))^(1/(d+4)), sigma_X^2 the mean diagonal of the sample covariance.
double silverman_sigma(const FeatureMatrix& X);

/// Linear descent from sigma_sil to sigma_sil/4 over n_iters entries.
std::vector<double> anneal_schedule(double sigma_sil, int n_iters);

/// How the stochastic gradient uses the M sampled points each iteration.
enum class Subsample {
    /// Kernel sums for every row are estimated from the M sampled columns; all rows move.
    Columns,
    /// Only the M sampled rows move, using exact kernel sums; the rest keep their memberships.
    Rows,
};

struct ClusterParams {
    int k = 2;
    double psi = 0.0;
    int iterations = 30;
    double sample_fraction = 0.33;
    double alpha = 0.05;
    double gamma = 1e-3;
    std::uint64_t seed = 0;
    /// Fixed kernel width instead of the annealed Silverman schedule.
    std::optional<double> sigma_override;
    int max_restarts = 3;
    Subsample subsample = Subsample::Columns;

    void validate(Eigen::Index n) const;
};

/// Called after every iteration with the zero-based iteration index.
using IterationObserver = std::function<void(int, const MembershipMatrix&)>;

MembershipMatrix cluster(const FeatureMatrix& X, const ClusterParams& params, const IterationObserver& observe = {});

/// Runs several parameter sets that share seed, iteration count, sample
/// fraction and kernel schedule in lockstep, so kernel rows are evaluated once
/// per iteration. Results equal running cluster() on each set separately.
std::vector<MembershipMatrix> cluster_batch(const FeatureMatrix& X, std::span<const ClusterParams> params);

}  // namespace disagg::itclust
