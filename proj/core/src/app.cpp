#include "disagg/app.hpp"

#include "disagg/dataset.hpp"
#include "disagg/errors.hpp"
#include "disagg/metrics.hpp"
#include "disagg/parallel.hpp"
#include "disagg/pri.hpp"
#include "disagg/srrm.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace disagg::app {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kResultsFormat = 1;
// CSV column order for per-class values.
constexpr LandCover kCsvClasses[] = {LandCover::Corn, LandCover::Cotton, LandCover::Bare};

std::string num(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

double parse_num(const std::string& s) {
    if (s.empty()) return kNaN;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw DataError("metrics.csv: bad number '" + s + "'");
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string level_tag(double level) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", level);
    return buf;
}

FailureKind classify(const Error& e) {
    if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const DegenerateError*>(&e)) return FailureKind::Numeric;
    return FailureKind::Data;
}

MetricsRow failed_row(int day, const std::string& method, const Error& e) {
    MetricsRow r;
    r.day = day;
    r.method = method;
    r.ok = false;
    r.failure = classify(e);
    r.error = e.what();
    return r;
}

fs::path result_path(const fs::path& out, int day, const std::string& method) {
    return out / (dataset::day_tag(day) + "_sm_" + method + ".grid");
}

std::vector<std::string> methods_of(Method m) {
    switch (m) {
        case Method::Srrm: return {"srrm"};
        case Method::Pri: return {"pri"};
        case Method::Both: return {"srrm", "pri"};
    }
    return {};
}

int jobs_of(const RunConfig& config) { return config.jobs > 0 ? config.jobs : default_jobs(); }

}  // namespace

std::vector<int> select_days(const std::vector<int>& requested, const std::vector<int>& available) {
    std::vector<int> avail = available;
    std::sort(avail.begin(), avail.end());
    if (requested.empty()) return avail;
    if (avail.empty()) throw DataError("no days available");
    std::vector<int> out;
    for (int d : requested) {
        int best = avail.front();
        for (int a : avail) {
            if (std::abs(a - d) < std::abs(best - d)) best = a;
        }
        if (std::abs(best - d) > 1) throw DataError("day " + std::to_string(d) + " is not in the dataset");
        if (best != d) spdlog::debug("day {} maps to scene day {}", d, best);
        out.push_back(best);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<int> generate_dataset(const RunConfig& config, const fs::path& out) {
    config.validate();
    const std::vector<int> days = select_days(config.days, synth::season_days());
    fs::create_directories(out);
    parallel_for(days.size(), jobs_of(config), [&](std::size_t i) {
        dataset::write_scene(out, synth::generate_scene(config.scene, config.calendar, days[i], config.seed));
    });
    dataset::write_manifest(out, {config.seed, days, config.scene, config.calendar});
    return days;
}

MetricsRow score_day(int day, const std::string& method, const Grid& est, const synth::Scene& scene,
                     const EvalConfig& eval) {
    MetricsRow r;
    r.day = day;
    r.method = method;
    r.ok = true;
    r.rmse = metrics::rmse(est, scene.true_sm);
    r.sd = metrics::error_sd(est, scene.true_sm);
    r.mae = metrics::mean_absolute_error(est, scene.true_sm);
    r.frac_below = metrics::error_fraction_below(est, scene.true_sm, eval.below_level);

    std::vector<double> errors(est.size());
    for (std::size_t i = 0; i < est.size(); ++i) errors[i] = est[i] - scene.true_sm[i];
    const metrics::ZTest z = metrics::ztest_threshold(errors, eval.ztest_threshold, eval.ztest_alpha);
    r.ztest_pass = z.pass;
    r.ztest_stat = z.statistic;

    for (int c = 0; c < kLandCoverCount; ++c) {
        std::vector<double> e, t;
        for (std::size_t i = 0; i < est.size(); ++i) {
            if (static_cast<int>(scene.lc[i]) != c) continue;
            e.push_back(est[i]);
            t.push_back(scene.true_sm[i]);
        }
        const auto idx = static_cast<std::size_t>(c);
        r.rmse_lc[idx] = e.empty() ? kNaN : metrics::rmse(est, scene.true_sm, scene.lc, static_cast<LandCover>(c));
        r.kld[idx] = e.size() >= 10 ? metrics::kld(e, t, eval.histogram) : kNaN;
    }
    return r;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows, const EvalConfig& eval) {
    os << "day,method,rmse,sd,kld_corn,kld_cotton,kld_bare,ztest_pass,rmse_corn,rmse_cotton,rmse_bare,mae,frac_below_"
       << level_tag(eval.below_level) << ",ztest_stat,K,psi,mu,status\n";
    for (const auto& r : rows) {
        os << r.day << ',' << r.method << ',';
        if (!r.ok) {
            std::string msg = r.error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            os << ",,,,,,,,,,,,,,," << "error: " << msg << '\n';
            continue;
        }
        os << num(r.rmse) << ',' << num(r.sd) << ',';
        for (LandCover c : kCsvClasses) os << num(r.kld[static_cast<std::size_t>(c)]) << ',';
        os << (r.ztest_pass ? 1 : 0) << ',';
        for (LandCover c : kCsvClasses) os << num(r.rmse_lc[static_cast<std::size_t>(c)]) << ',';
        os << num(r.mae) << ',' << num(r.frac_below) << ',' << num(r.ztest_stat) << ',';
        os << (r.k ? std::to_string(*r.k) : "") << ',' << (r.psi ? num(*r.psi) : "") << ',' << (r.mu ? num(*r.mu) : "")
           << ",ok\n";
    }
}

std::vector<MetricsRow> read_metrics_csv(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot read " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw DataError(path.string() + ": empty file");
    const auto header = split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i].rfind("frac_below_", 0) == 0 ? "frac_below" : header[i]] = i;
    for (const char* need : {"day", "method", "rmse", "sd", "status"}) {
        if (!col.count(need)) throw DataError(path.string() + ": missing column " + need);
    }
    std::vector<MetricsRow> rows;
    for (int no = 2; std::getline(is, line); ++no) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != header.size()) throw DataError(path.string() + ":" + std::to_string(no) + ": wrong field count");
        auto get = [&](const char* name) { return col.count(name) ? f[col.at(name)] : std::string(); };
        MetricsRow r;
        r.day = std::stoi(get("day"));
        r.method = get("method");
        r.ok = get("status") == "ok";
        if (!r.ok) {
            r.error = get("status");
            rows.push_back(r);
            continue;
        }
        r.rmse = parse_num(get("rmse"));
        r.sd = parse_num(get("sd"));
        r.kld = {parse_num(get("kld_bare")), parse_num(get("kld_corn")), parse_num(get("kld_cotton"))};
        r.rmse_lc = {parse_num(get("rmse_bare")), parse_num(get("rmse_corn")), parse_num(get("rmse_cotton"))};
        r.ztest_pass = get("ztest_pass") == "1";
        r.mae = parse_num(get("mae"));
        r.frac_below = parse_num(get("frac_below"));
        r.ztest_stat = parse_num(get("ztest_stat"));
        if (!get("K").empty()) r.k = std::stoi(get("K"));
        if (!get("psi").empty()) r.psi = parse_num(get("psi"));
        if (!get("mu").empty()) r.mu = parse_num(get("mu"));
        rows.push_back(r);
    }
    return rows;
}

RunSummary run_dataset(const fs::path& dataset_dir, const fs::path& out, const RunConfig& config) {
    config.validate();
    const dataset::Manifest manifest = dataset::read_manifest(dataset_dir);
    const std::vector<int> days = select_days(config.days, manifest.days);
    const std::vector<std::string> methods = methods_of(config.method);

    struct DayResult {
        std::vector<MetricsRow> rows;
        std::vector<std::optional<Grid>> grids;
    };
    std::vector<DayResult> results(days.size());

    parallel_for(days.size(), jobs_of(config), [&](std::size_t i) {
        const int day = days[i];
        DayResult& res = results[i];
        res.grids.resize(methods.size());
        synth::Scene scene;
        try {
            scene = dataset::read_scene(dataset_dir, day);
        } catch (const Error& e) {
            spdlog::error("day {}: {}", day, e.what());
            for (const auto& m : methods) res.rows.push_back(failed_row(day, m, e));
            return;
        }
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            const std::string& m = methods[mi];
            try {
                MetricsRow row;
                if (m == "srrm") {
                    srrm::SrrmParams base = config.srrm;
                    base.seed = srrm::day_seed(config.seed, day);
                    srrm::DayOutcome o = srrm::run_day(scene, config.search, base);
                    row = score_day(day, m, o.sm, scene, config.eval);
                    row.k = o.params.k;
                    row.psi = o.params.psi;
                    row.mu = o.params.mu;
                    res.grids[mi] = std::move(o.sm);
                } else {
                    Grid g = pri::pri_day(scene, config.pri);
                    row = score_day(day, m, g, scene, config.eval);
                    res.grids[mi] = std::move(g);
                }
                res.rows.push_back(std::move(row));
            } catch (const Error& e) {
                spdlog::error("day {} ({}): {}", day, m, e.what());
                res.rows.push_back(failed_row(day, m, e));
            }
        }
    });

    fs::create_directories(out);
    RunSummary summary;
    for (std::size_t i = 0; i < days.size(); ++i) {
        std::size_t ok = 0;
        for (std::size_t mi = 0; mi < results[i].grids.size(); ++mi) {
            if (results[i].grids[mi]) save_grid(result_path(out, days[i], methods[mi]), *results[i].grids[mi]);
        }
        for (auto& r : results[i].rows) {
            if (r.ok) {
                ++ok;
            } else if (r.failure == FailureKind::Numeric || summary.worst == FailureKind::None) {
                summary.worst = r.failure;
            }
            summary.rows.push_back(std::move(r));
        }
        if (ok == methods.size()) ++summary.days_ok;
        if (ok == 0) ++summary.days_failed;
    }

    {
        std::ofstream os(out / "metrics.csv");
        if (!os) throw DataError("cannot write " + (out / "metrics.csv").string());
        write_metrics_csv(os, summary.rows, config.eval);
    }
    {
        std::ofstream os(out / "run.ini");
        if (!os) throw DataError("cannot write " + (out / "run.ini").string());
        os << "[results]\nformat = " << kResultsFormat << "\nmethod = " << to_string(config.method)
           << "\nseed = " << config.seed << "\ndataset_seed = " << manifest.seed << "\ndays = ";
        for (std::size_t i = 0; i < days.size(); ++i) os << (i ? "," : "") << days[i];
        os << "\n\n";
        write_config(os, config, {"srrm", "pri", "eval"});
    }
    return summary;
}

namespace {

struct RunInfo {
    Method method = Method::Both;
    std::uint64_t seed = 0;
    std::uint64_t dataset_seed = 0;
    std::vector<int> days;
};

RunInfo read_run_info(const fs::path& results) {
    namespace pt = boost::property_tree;
    const fs::path path = results / "run.ini";
    std::ifstream is(path);
    if (!is) throw DataError("no run manifest at " + path.string());
    try {
        pt::ptree tree;
        pt::read_ini(is, tree);
        if (tree.get<int>("results.format") != kResultsFormat) throw DataError(path.string() + ": unsupported format");
        RunInfo info;
        info.method = parse_method(tree.get<std::string>("results.method"));
        info.seed = tree.get<std::uint64_t>("results.seed");
        info.dataset_seed = tree.get<std::uint64_t>("results.dataset_seed");
        info.days = parse_day_list(tree.get<std::string>("results.days"));
        return info;
    } catch (const pt::ptree_error& e) {
        throw DataError(path.string() + ": " + e.what());
    } catch (const UsageError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

struct Pool {
    std::array<std::vector<double>, kLandCoverCount> est, truth;
    std::size_t below = 0;
    std::size_t pixels = 0;
};

MethodSummary summarize(const std::string& method, const std::vector<MetricsRow>& rows,
                        const std::vector<MetricsRow>& other, const Pool& pool, const EvalConfig& eval) {
    MethodSummary s;
    s.method = method;
    double rmse_sum = 0.0;
    std::size_t pass = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].ok) continue;
        ++s.days;
        rmse_sum += rows[i].rmse;
        pass += rows[i].ztest_pass ? 1 : 0;
        if (i < other.size() && other[i].ok && rows[i].rmse < other[i].rmse) ++s.days_better;
    }
    s.mean_rmse = s.days ? rmse_sum / static_cast<double>(s.days) : kNaN;
    s.ztest_pass_rate = s.days ? static_cast<double>(pass) / static_cast<double>(s.days) : kNaN;
    s.frac_below = pool.pixels ? static_cast<double>(pool.below) / static_cast<double>(pool.pixels) : kNaN;
    for (std::size_t c = 0; c < kLandCoverCount; ++c) {
        s.season_kld[c] =
            pool.est[c].size() >= 10 ? metrics::kld(pool.est[c], pool.truth[c], eval.histogram) : kNaN;
    }
    return s;
}

void add_to_pool(Pool& pool, const Grid& est, const synth::Scene& scene, double level) {
    for (std::size_t i = 0; i < est.size(); ++i) {
        const auto c = static_cast<std::size_t>(scene.lc[i]);
        pool.est[c].push_back(est[i]);
        pool.truth[c].push_back(scene.true_sm[i]);
        pool.below += std::abs(est[i] - scene.true_sm[i]) < level ? 1 : 0;
        ++pool.pixels;
    }
}

}  // namespace

EvalReport evaluate(const fs::path& results, const fs::path& dataset_dir, const RunConfig& config, const fs::path& out) {
    config.validate();
    const RunInfo info = read_run_info(results);
    const dataset::Manifest manifest = dataset::read_manifest(dataset_dir);
    if (manifest.seed != info.dataset_seed) {
        throw DataError("results were produced from a dataset with seed " + std::to_string(info.dataset_seed) +
                        ", this dataset has seed " + std::to_string(manifest.seed));
    }
    for (int d : info.days) {
        if (std::find(manifest.days.begin(), manifest.days.end(), d) == manifest.days.end()) {
            throw DataError("results day " + std::to_string(d) + " is not in the dataset manifest");
        }
    }
    std::map<std::pair<int, std::string>, MetricsRow> recorded;
    if (fs::exists(results / "metrics.csv")) {
        for (auto& r : read_metrics_csv(results / "metrics.csv")) recorded[{r.day, r.method}] = r;
    }

    EvalReport report;
    report.days = info.days;
    const std::vector<std::string> methods = methods_of(info.method);
    const bool has_srrm = std::find(methods.begin(), methods.end(), "srrm") != methods.end();
    const bool has_pri = std::find(methods.begin(), methods.end(), "pri") != methods.end();

    std::vector<int> table_days;
    for (int e : synth::kEvaluationDays) {
        for (int d : info.days) {
            if (std::abs(d - e) <= 1 && std::find(table_days.begin(), table_days.end(), d) == table_days.end()) {
                table_days.push_back(d);
                break;
            }
        }
    }

    fs::create_directories(out);
    std::ofstream kld_csv(out / "kld_table.csv");
    if (!kld_csv) throw DataError("cannot write " + (out / "kld_table.csv").string());
    kld_csv << "scope,landcover,method,pixels,rmse,sd,kld\n";

    Pool srrm_pool, pri_pool;
    for (int day : info.days) {
        const synth::Scene scene = dataset::read_scene(dataset_dir, day);
        const bool in_table = std::find(table_days.begin(), table_days.end(), day) != table_days.end();
        for (const std::string& m : {std::string("srrm"), std::string("pri")}) {
            MetricsRow row;
            row.day = day;
            row.method = m;
            const fs::path p = result_path(results, day, m);
            const bool wanted = m == "srrm" ? has_srrm : has_pri;
            if (wanted && fs::exists(p)) {
                const Grid est = load_grid(p);
                if (!est.same_shape(scene.true_sm)) throw DimensionError(p.string() + ": grid does not match the dataset");
                row = score_day(day, m, est, scene, config.eval);
                if (const auto it = recorded.find({day, m}); it != recorded.end()) {
                    row.k = it->second.k;
                    row.psi = it->second.psi;
                    row.mu = it->second.mu;
                }
                add_to_pool(m == "srrm" ? srrm_pool : pri_pool, est, scene, config.eval.below_level);
                if (in_table) {
                    for (LandCover c : kCsvClasses) {
                        std::vector<double> e, t, d;
                        for (std::size_t i = 0; i < est.size(); ++i) {
                            if (static_cast<int>(scene.lc[i]) != static_cast<int>(c)) continue;
                            e.push_back(est[i]);
                            t.push_back(scene.true_sm[i]);
                            d.push_back(est[i] - scene.true_sm[i]);
                        }
                        if (e.empty()) continue;
                        double s2 = 0.0, mean = 0.0;
                        for (double x : d) mean += x;
                        mean /= static_cast<double>(d.size());
                        for (double x : d) s2 += (x - mean) * (x - mean);
                        kld_csv << dataset::day_tag(day) << ',' << to_string(c) << ',' << m << ',' << e.size() << ','
                                << num(row.rmse_lc[static_cast<std::size_t>(c)]) << ','
                                << num(std::sqrt(s2 / static_cast<double>(d.size()))) << ','
                                << num(e.size() >= 10 ? metrics::kld(e, t, config.eval.histogram) : kNaN) << '\n';
                    }
                }
            } else if (wanted) {
                row.ok = false;
                row.error = "missing result grid";
            }
            (m == "srrm" ? report.srrm : report.pri).push_back(row);
        }
    }

    if (has_srrm) report.srrm_summary = summarize("srrm", report.srrm, report.pri, srrm_pool, config.eval);
    if (has_pri) report.pri_summary = summarize("pri", report.pri, report.srrm, pri_pool, config.eval);
    for (const auto* s : {&report.srrm_summary, &report.pri_summary}) {
        if (!*s) continue;
        const Pool& pool = (*s)->method == "srrm" ? srrm_pool : pri_pool;
        for (LandCover c : kCsvClasses) {
            const auto ci = static_cast<std::size_t>(c);
            if (pool.est[ci].empty()) continue;
            double sq = 0.0, mean = 0.0;
            for (std::size_t i = 0; i < pool.est[ci].size(); ++i) mean += pool.est[ci][i] - pool.truth[ci][i];
            mean /= static_cast<double>(pool.est[ci].size());
            double var = 0.0;
            for (std::size_t i = 0; i < pool.est[ci].size(); ++i) {
                const double d = pool.est[ci][i] - pool.truth[ci][i];
                sq += d * d;
                var += (d - mean) * (d - mean);
            }
            const auto n = static_cast<double>(pool.est[ci].size());
            kld_csv << "season," << to_string(c) << ',' << (*s)->method << ',' << pool.est[ci].size() << ','
                    << num(std::sqrt(sq / n)) << ',' << num(std::sqrt(var / n)) << ',' << num((*s)->season_kld[ci])
                    << '\n';
        }
    }

    {
        std::ofstream os(out / "comparison.csv");
        if (!os) throw DataError("cannot write " + (out / "comparison.csv").string());
        os << "day,srrm_rmse,pri_rmse,srrm_sd,pri_sd,srrm_mae,pri_mae,srrm_frac_below,pri_frac_below,srrm_ztest_pass,"
              "pri_ztest_pass,srrm_K,srrm_psi,srrm_mu\n";
        for (std::size_t i = 0; i < report.days.size(); ++i) {
            const MetricsRow& a = report.srrm[i];
            const MetricsRow& b = report.pri[i];
            auto v = [](const MetricsRow& r, double x) { return r.ok ? num(x) : std::string(); };
            auto flag = [](const MetricsRow& r) { return r.ok ? std::string(r.ztest_pass ? "1" : "0") : std::string(); };
            os << report.days[i] << ',' << v(a, a.rmse) << ',' << v(b, b.rmse) << ',' << v(a, a.sd) << ','
               << v(b, b.sd) << ',' << v(a, a.mae) << ',' << v(b, b.mae) << ',' << v(a, a.frac_below) << ','
               << v(b, b.frac_below) << ',' << flag(a) << ',' << flag(b) << ','
               << (a.k ? std::to_string(*a.k) : "") << ',' << (a.psi ? num(*a.psi) : "") << ','
               << (a.mu ? num(*a.mu) : "") << '\n';
        }
    }
    {
        std::ofstream os(out / "summary.csv");
        if (!os) throw DataError("cannot write " + (out / "summary.csv").string());
        os << "method,days,mean_rmse,days_better,ztest_pass_rate,frac_below,kld_corn,kld_cotton,kld_bare\n";
        for (const auto* s : {&report.srrm_summary, &report.pri_summary}) {
            if (!*s) continue;
            const MethodSummary& m = **s;
            os << m.method << ',' << m.days << ',' << num(m.mean_rmse) << ',' << m.days_better << ','
               << num(m.ztest_pass_rate) << ',' << num(m.frac_below);
            for (LandCover c : kCsvClasses) os << ',' << num(m.season_kld[static_cast<std::size_t>(c)]);
            os << '\n';
        }
    }

    // Convergence trace for one heterogeneous day with the parameters the run chose.
    {
        std::ofstream os(out / "iteration_trace.csv");
        if (!os) throw DataError("cannot write " + (out / "iteration_trace.csv").string());
        os << "iteration,rmse\n";
        int trace_day = 0;
        for (int d : info.days) {
            if (std::abs(d - config.eval.trace_day) <= 1) {
                trace_day = d;
                break;
            }
        }
        if (has_srrm && trace_day > 0) {
            srrm::SrrmParams p = config.srrm;
            p.seed = srrm::day_seed(info.seed, trace_day);
            p.k = config.search.k_values.front();
            p.psi = config.search.psi_values.front();
            p.mu = config.search.mu_values.front();
            if (const auto it = recorded.find({trace_day, "srrm"}); it != recorded.end() && it->second.ok) {
                p.k = it->second.k.value_or(p.k);
                p.psi = it->second.psi.value_or(p.psi);
                p.mu = it->second.mu.value_or(p.mu);
            }
            report.trace_day = trace_day;
            report.trace = srrm::iteration_trace(dataset::read_scene(dataset_dir, trace_day), p);
            for (std::size_t i = 0; i < report.trace.size(); ++i) os << i + 1 << ',' << num(report.trace[i]) << '\n';
        } else if (has_srrm) {
            spdlog::warn("eval: trace day {} was not part of the run; iteration trace left empty", config.eval.trace_day);
        }
    }
    return report;
}

void print_report(std::ostream& os, const EvalReport& report) {
    os << "  day   SRRM RMSE    PRI RMSE\n";
    for (std::size_t i = 0; i < report.days.size(); ++i) {
        auto cell = [](const std::vector<MetricsRow>& rows, std::size_t i) {
            return i < rows.size() && rows[i].ok ? num(rows[i].rmse) : std::string("-");
        };
        os << std::setw(5) << report.days[i] << std::setw(12) << cell(report.srrm, i).substr(0, 10) << std::setw(12)
           << cell(report.pri, i).substr(0, 10) << '\n';
    }
    os << '\n';
    for (const auto* s : {&report.srrm_summary, &report.pri_summary}) {
        if (!*s) continue;
        const MethodSummary& m = **s;
        os << m.method << ": days " << m.days << ", mean RMSE " << num(m.mean_rmse) << ", better on " << m.days_better
           << " days, Z-test pass rate " << num(m.ztest_pass_rate) << ", |error| below level " << num(m.frac_below)
           << "\n  season KLD corn " << num(m.season_kld[1]) << ", cotton " << num(m.season_kld[2]) << ", bare "
           << num(m.season_kld[0]) << '\n';
    }
    if (!report.trace.empty()) {
        os << "iteration trace (day " << report.trace_day << "): first " << num(report.trace.front()) << ", last "
           << num(report.trace.back()) << '\n';
    }
}

}  // namespace disagg::app
