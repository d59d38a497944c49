#pragma once

// Kernel ridge regression in dual form: (mu I + K) w = y, y_hat(x) = sum_j w_j k(x_j, x).
// Inputs are standardized on the training set and augmented with a constant
// feature; targets are standardized and mapped back on prediction.

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace disagg::kridge {

struct KernelModel {
    Eigen::MatrixXd x_train;  // standardized, with a trailing constant-1 column
    Eigen::VectorXd weights;
    double sigma = 1.0;
    double mu = 0.0;
    Eigen::RowVectorXd feature_mean;
    Eigen::RowVectorXd feature_scale;
    double target_mean = 0.0;
    double target_scale = 1.0;

    /// Feature count expected by predict (before augmentation).
    Eigen::Index input_dim() const noexcept { return feature_mean.size(); }
    Eigen::Index size() const noexcept { return weights.size(); }
};

/// `sigma` defaults to the Silverman width of the standardized training inputs
/// (1.0 when that is undefined: a single row or constant inputs).
KernelModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double mu, std::optional<double> sigma = {});

/// One model per ridge constant; the Gram matrix is built once.
std::vector<KernelModel> fit_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const double> mus,
                                  std::optional<double> sigma = {});

/// Kernel width fit() would choose for these inputs.
double default_sigma(const Eigen::MatrixXd& X);

double predict(const KernelModel& model, std::span<const double> x);
Eigen::VectorXd predict(const KernelModel& model, const Eigen::MatrixXd& X);

/// sum_j w_j k(x_j, x) in standardized target units.
double kernel_response(const KernelModel& model, std::span<const double> x);

void write_model(std::ostream& os, const KernelModel& model);
KernelModel read_model(std::istream& is);

}  // namespace disagg::kridge
