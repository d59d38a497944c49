#pragma once

// Self-regularized regressive models: cluster the fine pixels on their
// features, fit one kernel regression per cluster on the in-situ pixels it
// owns, and blend the cluster models with each pixel's soft membership.

#include "disagg/grid.hpp"
#include "disagg/itclust.hpp"
#include "disagg/kridge.hpp"
#include "disagg/synth.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace disagg::srrm {

/// Clustering features per fine pixel: LST, PPT, LAI z-scored, LC one-hot,
/// then x and y min-max scaled to [0,1].
itclust::FeatureMatrix build_features(const synth::Scene& scene);

/// Regression inputs per fine pixel: LST, PPT, LAI, LC one-hot and the
/// replicated coarse SM. Scaling is left to kridge.
Eigen::MatrixXd regression_features(const synth::Scene& scene);

struct TrainingSet {
    std::vector<std::size_t> pixels;
    std::vector<double> targets;
};

/// The first round(train_frac * pixel count) in-situ observations, in the
/// scene's order; DomainError if the scene has fewer.
TrainingSet training_set(const synth::Scene& scene, double train_frac);

struct ClusterModels {
    std::vector<kridge::KernelModel> models;
    /// Model used for each cluster; differs from k when a cluster got no training pixel.
    std::vector<int> owner;
};

/// Hard assignment of training pixels (argmax membership) and one fit per
/// nonempty cluster. Empty clusters borrow the model of the nearest nonempty
/// cluster by membership centroid.
ClusterModels train_cluster_models(const Eigen::MatrixXd& features, const itclust::MembershipMatrix& M,
                                   const TrainingSet& train, double mu, std::optional<double> sigma = {});

ClusterModels train_cluster_models(const synth::Scene& scene, const itclust::MembershipMatrix& M, double train_frac,
                                   double mu);

/// Per-pixel prediction of every cluster's model: n x K.
Eigen::MatrixXd cluster_predictions(const ClusterModels& models, const Eigen::MatrixXd& features);

/// sum_k m_ik f_k(x_i) for the given rows; not clamped.
Eigen::VectorXd blend(const Eigen::MatrixXd& memberships, const Eigen::MatrixXd& predictions);

struct SrrmParams {
    int k = 2;
    double psi = 1e-3;
    double mu = 1e-2;
    int iterations = 30;
    double sample_fraction = 0.33;
    double train_fraction = 0.33;
    std::uint64_t seed = 0;
    itclust::Subsample subsample = itclust::Subsample::Columns;

    void validate() const;
    itclust::ClusterParams cluster_params() const;
};

struct DayFit {
    Grid sm;
    itclust::MembershipMatrix memberships;
    ClusterModels models;
};

/// Clusters, trains and blends one scene; output clamped to [0,1].
DayFit disaggregate_day(const synth::Scene& scene, const SrrmParams& params,
                        const itclust::IterationObserver& observe = {});

struct SearchGrid {
    std::vector<int> k_values{2, 3, 4, 5, 6, 7, 8};
    std::vector<double> psi_values{1e-3, 1e-2, 1e-1};
    std::vector<double> mu_values{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    int folds = 10;

    void validate() const;
};

struct CvEntry {
    int k;
    double psi;
    double mu;
    double mae;
};

struct CvResult {
    SrrmParams best;
    double mae = 0.0;
    std::vector<CvEntry> table;  // every evaluated triple, in grid order
};

/// k-fold cross-validation of (K, psi, mu) on the in-situ pixels by mean
/// absolute error. Ties go to the smaller K, then larger mu, then smaller psi.
CvResult cross_validate(const synth::Scene& scene, const SearchGrid& grid, const SrrmParams& base);

struct DayOutcome {
    int day = 0;
    bool ok = false;
    std::string error;
    Grid sm;
    SrrmParams params;
    double cv_mae = 0.0;
};

/// Cross-validates and disaggregates one scene; the winning clustering is reused.
DayOutcome run_day(const synth::Scene& scene, const SearchGrid& grid, const SrrmParams& base);

/// Independent per-day runs; failures are recorded and the season continues.
/// `seed` is combined with each day to seed clustering and fold assignment.
std::vector<DayOutcome> run_season(std::span<const synth::Scene> scenes, const SearchGrid& grid,
                                   const SrrmParams& base, int jobs = 1);

/// RMSE against the true SM after every clustering iteration, with the models
/// retrained on the current memberships.
std::vector<double> iteration_trace(const synth::Scene& scene, const SrrmParams& params);

/// Clustering seed for a day; shared by run_day and iteration_trace.
std::uint64_t day_seed(std::uint64_t seed, int day);

}  // namespace disagg::srrm
