#pragma once

// Error statistics for disaggregated SM against the fine-scale truth.

#include "disagg/grid.hpp"

#include <optional>
#include <span>
#include <utility>

namespace disagg::metrics {

double rmse(const Grid& est, const Grid& truth);
/// RMSE over pixels whose `lc` class equals `cls`; DomainError when none do.
double rmse(const Grid& est, const Grid& truth, const Grid& lc, LandCover cls);

/// Population SD of est - truth.
double error_sd(const Grid& est, const Grid& truth);
double mean_absolute_error(const Grid& est, const Grid& truth);

enum class KlDirection {
    TruthToEstimate,  // KL(p_truth || p_est)
    EstimateToTruth,
};

struct HistogramSpec {
    int bins = 50;
    /// Shared bin range; pooled min/max of both sample sets when unset.
    std::optional<std::pair<double, double>> range;
    double epsilon = 1e-12;
    KlDirection direction = KlDirection::TruthToEstimate;
};

/// KL divergence between histogram densities of two sample sets (natural log).
/// Samples outside an explicit range fall into the edge bins.
double kld(std::span<const double> est, std::span<const double> truth, const HistogramSpec& spec = {});

/// 50 bins over [0, 0.5] m3/m3.
HistogramSpec sm_histogram();

struct ZTest {
    double statistic = 0.0;
    double critical = 0.0;
    bool pass = false;
    bool t_approximation = false;  // n < 30
};

/// One-sided test of mean |error| against `threshold` at level `alpha`:
/// statistic (mean - threshold) / (sd / sqrt(n)); passes unless the mean
/// absolute error is significantly above the threshold.
ZTest ztest_threshold(std::span<const double> errors, double threshold = 0.04, double alpha = 0.05);

/// Fraction of pixels with |est - truth| < level.
double error_fraction_below(const Grid& est, const Grid& truth, double level);

}  // namespace disagg::metrics
