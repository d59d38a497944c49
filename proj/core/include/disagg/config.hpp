#pragma once

// Run configuration: a flat key=value file with [sections]. Every key has a
// default; write_config prints the full effective configuration.

#include "disagg/metrics.hpp"
#include "disagg/pri.hpp"
#include "disagg/srrm.hpp"
#include "disagg/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace disagg {

enum class Method { Srrm, Pri, Both };

Method parse_method(const std::string& s);
std::string to_string(Method m);

struct EvalConfig {
    metrics::HistogramSpec histogram = metrics::sm_histogram();
    double ztest_threshold = 0.04;
    double ztest_alpha = 0.05;
    double below_level = 0.02;
    int trace_day = 222;
};

struct RunConfig {
    std::uint64_t seed = 2024;
    std::vector<int> days;  // empty: every season day
    Method method = Method::Both;
    int jobs = 0;  // 0: available cores

    synth::SceneSpec scene;
    synth::CropCalendar calendar = synth::CropCalendar::standard();
    srrm::SearchGrid search;
    srrm::SrrmParams srrm;
    pri::PriConfig pri;
    EvalConfig eval;

    /// Throws UsageError naming the offending setting.
    void validate() const;
};

/// Parses INI text over the defaults; errors are UsageError with the source
/// name and line number.
RunConfig parse_config(std::istream& is, const std::string& source = "<config>",
                       const std::vector<std::string>& foreign_sections = {});
RunConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& os, const RunConfig& config);
/// Only the named sections, in the usual order.
void write_config(std::ostream& os, const RunConfig& config, const std::vector<std::string>& sections);

/// "39,135" or "all" (empty); sorted and unique.
std::vector<int> parse_day_list(const std::string& s);

}  // namespace disagg
