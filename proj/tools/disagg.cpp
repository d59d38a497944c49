#include "disagg/app.hpp"
#include "disagg/config.hpp"
#include "disagg/errors.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> days;
    std::optional<std::string> method;
    std::optional<int> jobs;
    std::string out;
    std::string dataset;
    std::string results;
    bool print_config = false;
    bool quiet = false;
};

disagg::RunConfig resolve(const Options& o) {
    disagg::RunConfig c = o.config.empty() ? disagg::RunConfig{} : disagg::load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (o.days) c.days = disagg::parse_day_list(*o.days);
    if (o.method) c.method = disagg::parse_method(*o.method);
    if (o.jobs) c.jobs = *o.jobs;
    c.validate();
    return c;
}

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--days", o.days, "comma-separated days of year, or 'all'");
    cmd->add_option("--jobs", o.jobs, "days processed in parallel (0 = all cores)");
    cmd->add_flag("-q,--quiet", o.quiet, "only log errors");
}

int run_cli(int argc, char** argv) {
    CLI::App cli{"Disaggregate coarse soil moisture to fine resolution"};
    cli.require_subcommand(1);
    Options o;
    cli.add_flag("--print-config", o.print_config, "print the effective configuration and exit");

    auto* gen = cli.add_subcommand("generate", "write a synthetic season");
    add_common(gen, o);
    gen->add_option("--out", o.out, "dataset directory")->required();

    auto* run = cli.add_subcommand("run", "disaggregate every day of a dataset");
    add_common(run, o);
    run->add_option("dataset", o.dataset, "dataset directory")->required();
    run->add_option("--method", o.method, "srrm, pri or both");
    run->add_option("--out", o.out, "results directory")->required();

    auto* ev = cli.add_subcommand("eval", "score results against the dataset truth");
    add_common(ev, o);
    ev->add_option("results", o.results, "results directory")->required();
    ev->add_option("dataset", o.dataset, "dataset directory")->required();
    ev->add_option("--out", o.out, "report directory (default: results directory)");

    // --print-config works without the subcommand's required arguments.
    for (auto* sub : {gen, run, ev}) {
        sub->add_flag("--print-config", o.print_config, "print the effective configuration and exit");
    }
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--print-config") o.print_config = true;
    }

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (!o.print_config || e.get_exit_code() == 0) {
            const int code = cli.exit(e);
            return code == 0 ? kOk : kUsage;
        }
    }
    spdlog::set_level(o.quiet ? spdlog::level::err : spdlog::level::info);

    const disagg::RunConfig config = resolve(o);
    if (o.print_config) {
        disagg::write_config(std::cout, config);
        return kOk;
    }

    if (gen->parsed()) {
        const auto days = disagg::app::generate_dataset(config, o.out);
        spdlog::info("wrote {} scenes to {}", days.size(), o.out);
        return kOk;
    }
    if (run->parsed()) {
        const auto summary = disagg::app::run_dataset(o.dataset, o.out, config);
        spdlog::info("{} days complete, {} failed", summary.days_ok, summary.days_failed);
        const bool any_ok = std::any_of(summary.rows.begin(), summary.rows.end(), [](const auto& r) { return r.ok; });
        if (!summary.rows.empty() && !any_ok) {
            return summary.worst == disagg::app::FailureKind::Numeric ? kNumeric : kData;
        }
        return kOk;
    }
    const std::string out = o.out.empty() ? o.results : o.out;
    const auto report = disagg::app::evaluate(o.results, o.dataset, config, out);
    disagg::app::print_report(std::cout, report);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("disagg"));
    try {
        return run_cli(argc, argv);
    } catch (const disagg::UsageError& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    } catch (const disagg::NumericError& e) {
        spdlog::error("{}", e.what());
        return kNumeric;
    } catch (const disagg::DegenerateError& e) {
        spdlog::error("{}", e.what());
        return kNumeric;
    } catch (const disagg::DomainError& e) {
        spdlog::error("{}", e.what());
        return kNumeric;
    } catch (const disagg::Error& e) {
        spdlog::error("{}", e.what());
        return kData;
    } catch (const std::filesystem::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return kData;
    }
}
