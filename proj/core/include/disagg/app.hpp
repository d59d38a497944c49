#pragma once

// The three commands behind the CLI, as library calls.

#include "disagg/config.hpp"
#include "disagg/grid.hpp"
#include "disagg/synth.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace disagg::app {

namespace fs = std::filesystem;

/// Nearest available day for each request (sorted, unique); all when empty.
std::vector<int> select_days(const std::vector<int>& requested, const std::vector<int>& available);

/// Writes the season (or config.days) under `out` with a manifest.
std::vector<int> generate_dataset(const RunConfig& config, const fs::path& out);

enum class FailureKind { None, Data, Numeric };

/// One line of metrics.csv. Per-class values are indexed by LandCover id and
/// are NaN when the class is absent (KLD needs at least 10 pixels).
struct MetricsRow {
    int day = 0;
    std::string method;
    bool ok = false;
    FailureKind failure = FailureKind::None;
    std::string error;
    double rmse = 0.0;
    double sd = 0.0;
    std::array<double, kLandCoverCount> kld{};
    bool ztest_pass = false;
    std::array<double, kLandCoverCount> rmse_lc{};
    double mae = 0.0;
    double frac_below = 0.0;
    double ztest_stat = 0.0;
    std::optional<int> k;
    std::optional<double> psi;
    std::optional<double> mu;
};

MetricsRow score_day(int day, const std::string& method, const Grid& est, const synth::Scene& scene,
                     const EvalConfig& eval);

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows, const EvalConfig& eval);
std::vector<MetricsRow> read_metrics_csv(const fs::path& path);

struct RunSummary {
    std::vector<MetricsRow> rows;  // by day, then srrm before pri
    std::size_t days_ok = 0;       // days where every requested method succeeded
    std::size_t days_failed = 0;   // days where every requested method failed
    FailureKind worst = FailureKind::None;
};

/// Disaggregates the selected dataset days and writes per-day grids,
/// metrics.csv and run.ini under `out`.
RunSummary run_dataset(const fs::path& dataset, const fs::path& out, const RunConfig& config);

struct MethodSummary {
    std::string method;
    std::size_t days = 0;
    double mean_rmse = 0.0;
    std::size_t days_better = 0;  // days with lower RMSE than the other method
    double ztest_pass_rate = 0.0;
    double frac_below = 0.0;  // over every pixel of every day
    std::array<double, kLandCoverCount> season_kld{};
};

struct EvalReport {
    std::vector<int> days;
    std::vector<MetricsRow> srrm;  // aligned with days; ok=false when missing
    std::vector<MetricsRow> pri;
    std::optional<MethodSummary> srrm_summary;
    std::optional<MethodSummary> pri_summary;
    int trace_day = 0;
    std::vector<double> trace;  // SRRM RMSE per clustering iteration on trace_day
};

/// Recomputes every metric from the result grids and the dataset, and writes
/// comparison.csv, kld_table.csv, summary.csv and iteration_trace.csv to `out`.
EvalReport evaluate(const fs::path& results, const fs::path& dataset, const RunConfig& config, const fs::path& out);

void print_report(std::ostream& os, const EvalReport& report);

}  // namespace disagg::app
