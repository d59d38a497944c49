#pragma once

// PRI baseline: a discrete naive-Bayes estimate of fine SM from the fine
// features, followed by gradient ascent on a Parzen-window objective that trades
// the entropy of the estimate against its divergence from that initial density.

#include "disagg/grid.hpp"
#include "disagg/synth.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace disagg::pri {

/// Equal-width bins; a constant column gets a single bin.
struct Binning {
    double lo = 0.0;
    double width = 0.0;
    int bins = 1;

    int index(double x) const;  // clamped to [0, bins)
    double center(int i) const { return lo + (i + 0.5) * width; }
};

struct DiscretePosterior {
    Binning target;
    std::vector<Binning> features;
    /// conditional[j](b, c) = p(x_j in bin b | y in class c); columns sum to 1.
    std::vector<Eigen::MatrixXd> conditional;
    std::vector<double> prior;

    int classes() const noexcept { return target.bins; }
    std::size_t feature_count() const noexcept { return features.size(); }
    /// log p(y = c) + sum_j log p(x_j | y = c).
    double log_score(int c, std::span<const double> x) const;
    /// argmax class, ties to the lower bin.
    int classify(std::span<const double> x) const;
};

/// Counts with add-one smoothing on the conditionals; maximum-likelihood prior.
DiscretePosterior fit_bayes(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k = 20, int k_j = 20);

/// Bin center of the most probable class for each row of X.
Eigen::VectorXd bayes_initial(const DiscretePosterior& model, const Eigen::MatrixXd& X);
/// Same, shaped like `like` (rows of X in row-major pixel order).
Grid bayes_initial(const DiscretePosterior& model, const Eigen::MatrixXd& X, const Grid& like);

struct PriParams {
    double beta = 2.0;
    int iterations = 100;
    /// Largest per-iteration move; 0.05 * SD(initial) when unset.
    std::optional<double> step;
    /// Parzen width; Silverman width of the initial estimate when unset.
    std::optional<double> sigma;
    int max_halvings = 10;

    void validate() const;
};

struct PriResult {
    Grid sm;
    std::vector<double> objective;  // J after iteration 0 (start) and every accepted step
    double sigma = 0.0;
    double step = 0.0;
};

/// Plug-in estimates with a normalized Gaussian Parzen window of width sigma.
double parzen_entropy(std::span<const double> samples, double sigma);
/// KL(p_samples || p_anchor).
double parzen_kl(std::span<const double> samples, std::span<const double> anchor, double sigma);

/// J(m) = H(m) - beta * KL(p_m || p_initial).
double pri_objective(std::span<const double> m, std::span<const double> initial, double beta, double sigma);

/// Gradient ascent on pri_objective starting from the replicated coarse field.
PriResult pri_optimize(const Grid& initial, const Grid& coarse, const PriParams& params = {});

struct PriConfig {
    int k = 20;
    int k_j = 20;
    PriParams optimize;
};

/// [LST, PPT, LAI, LC id, replicated coarse SM] per fine pixel.
Eigen::MatrixXd pri_features(const synth::Scene& scene);

/// Full baseline for one scene: Bayes on the in-situ pixels, then PRI.
Grid pri_day(const synth::Scene& scene, const PriConfig& config = {});

}  // namespace disagg::pri
