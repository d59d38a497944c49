#include "disagg/config.hpp"

#include "disagg/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace disagg {

Method parse_method(const std::string& s) {
    if (s == "srrm") return Method::Srrm;
    if (s == "pri") return Method::Pri;
    if (s == "both") return Method::Both;
    throw UsageError("unknown method '" + s + "' (expected srrm, pri or both)");
}

std::string to_string(Method m) {
    switch (m) {
        case Method::Srrm: return "srrm";
        case Method::Pri: return "pri";
        case Method::Both: return "both";
    }
    return "both";
}

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(trim(tok));
    return out;
}

template <class T>
T parse_number(const std::string& raw) {
    const std::string s = trim(raw);
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) throw UsageError("not a number: '" + s + "'");
    return v;
}

template <class T>
std::string format_number(T v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <class T>
std::vector<T> parse_list(const std::string& s) {
    std::vector<T> out;
    for (const auto& tok : split(s, ',')) out.push_back(parse_number<T>(tok));
    if (out.empty()) throw UsageError("empty list");
    return out;
}

template <class T>
std::string format_list(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_number(v[i]);
    }
    return out;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw UsageError("not a boolean: '" + s + "'");
}

std::string format_windows(const synth::CropCalendar& cal, LandCover crop) {
    std::string out;
    for (const auto& w : cal.entries()) {
        if (w.crop != crop) continue;
        if (!out.empty()) out += ',';
        out += std::to_string(w.planting) + "-" + std::to_string(w.harvest);
    }
    return out.empty() ? "none" : out;
}

std::vector<synth::CropWindow> parse_windows(const std::string& s, LandCover crop) {
    std::vector<synth::CropWindow> out;
    if (trim(s) == "none") return out;
    for (const auto& tok : split(s, ',')) {
        const auto dash = tok.find('-');
        if (dash == std::string::npos) throw UsageError("growing window must be PLANT-HARVEST, got '" + tok + "'");
        out.push_back({crop, parse_number<int>(tok.substr(0, dash)), parse_number<int>(tok.substr(dash + 1))});
    }
    return out;
}

struct Setting {
    std::string section;
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <class T>
Setting number(std::string section, std::string key, T RunConfig::*outer) {
    return {std::move(section), std::move(key), [outer](const RunConfig& c) { return format_number(c.*outer); },
            [outer](RunConfig& c, const std::string& v) { c.*outer = parse_number<T>(v); }};
}

// Member of a nested struct: c.*outer.*inner.
template <class O, class T>
Setting nested(std::string section, std::string key, O RunConfig::*outer, T O::*inner) {
    return {std::move(section), std::move(key),
            [outer, inner](const RunConfig& c) {
                if constexpr (std::is_same_v<T, bool>) {
                    return std::string((c.*outer).*inner ? "true" : "false");
                } else {
                    return format_number((c.*outer).*inner);
                }
            },
            [outer, inner](RunConfig& c, const std::string& v) {
                if constexpr (std::is_same_v<T, bool>) {
                    (c.*outer).*inner = parse_bool(v);
                } else {
                    (c.*outer).*inner = parse_number<T>(v);
                }
            }};
}

template <class T>
std::string format_optional(const std::optional<T>& v) {
    return v ? format_number(*v) : "auto";
}

template <class T>
std::optional<T> parse_optional(const std::string& s) {
    if (trim(s) == "auto") return std::nullopt;
    return parse_number<T>(s);
}

const std::vector<Setting>& settings() {
    using S = synth::SceneSpec;
    static const std::vector<Setting> table = [] {
        std::vector<Setting> t;
        t.push_back(number("run", "seed", &RunConfig::seed));
        t.push_back({"run", "days",
                     [](const RunConfig& c) { return c.days.empty() ? std::string("all") : format_list(c.days); },
                     [](RunConfig& c, const std::string& v) { c.days = parse_day_list(v); }});
        t.push_back({"run", "method", [](const RunConfig& c) { return to_string(c.method); },
                     [](RunConfig& c, const std::string& v) { c.method = parse_method(trim(v)); }});
        t.push_back(number("run", "jobs", &RunConfig::jobs));

        t.push_back(nested("synth", "region_cells", &RunConfig::scene, &S::region_cells));
        t.push_back(nested("synth", "base_cell_size", &RunConfig::scene, &S::base_cell_size));
        t.push_back(nested("synth", "fine_factor", &RunConfig::scene, &S::fine_factor));
        t.push_back(nested("synth", "coarse_factor", &RunConfig::scene, &S::coarse_factor));
        t.push_back(nested("synth", "patch_count", &RunConfig::scene, &S::patch_count));
        t.push_back(nested("synth", "corn_share", &RunConfig::scene, &S::corn_share));
        t.push_back(nested("synth", "cotton_share", &RunConfig::scene, &S::cotton_share));
        t.push_back(nested("synth", "layout_seed", &RunConfig::scene, &S::layout_seed));
        t.push_back(nested("synth", "peak_lai_corn", &RunConfig::scene, &S::peak_lai_corn));
        t.push_back(nested("synth", "peak_lai_cotton", &RunConfig::scene, &S::peak_lai_cotton));
        t.push_back(nested("synth", "texture_length", &RunConfig::scene, &S::texture_length));
        t.push_back(nested("synth", "texture_amplitude", &RunConfig::scene, &S::texture_amplitude));
        t.push_back(nested("synth", "perturbation_length", &RunConfig::scene, &S::perturbation_length));
        t.push_back(nested("synth", "perturbation_amplitude", &RunConfig::scene, &S::perturbation_amplitude));
        t.push_back(nested("synth", "rain_probability", &RunConfig::scene, &S::rain_probability));
        t.push_back(nested("synth", "storm_mean_depth", &RunConfig::scene, &S::storm_mean_depth));
        t.push_back(nested("synth", "irrigation_depth", &RunConfig::scene, &S::irrigation_depth));
        t.push_back(nested("synth", "irrigation_interval", &RunConfig::scene, &S::irrigation_interval));
        t.push_back(nested("synth", "sm_min", &RunConfig::scene, &S::sm_min));
        t.push_back(nested("synth", "sm_max", &RunConfig::scene, &S::sm_max));
        t.push_back(nested("synth", "lst_noise_sd", &RunConfig::scene, &S::lst_noise_sd));
        t.push_back(nested("synth", "ppt_noise_sd", &RunConfig::scene, &S::ppt_noise_sd));
        t.push_back(nested("synth", "sm_noise_sd", &RunConfig::scene, &S::sm_noise_sd));
        t.push_back(nested("synth", "lai_noise_sd", &RunConfig::scene, &S::lai_noise_sd));
        t.push_back(nested("synth", "insitu_fraction", &RunConfig::scene, &S::insitu_fraction));
        t.push_back(nested("synth", "insitu_noise_sd", &RunConfig::scene, &S::insitu_noise_sd));
        t.push_back(nested("synth", "force_evaluation_days", &RunConfig::scene, &S::force_evaluation_days));

        for (LandCover crop : {LandCover::Corn, LandCover::Cotton}) {
            const std::string key = crop == LandCover::Corn ? "corn" : "cotton";
            t.push_back({"calendar", key, [crop](const RunConfig& c) { return format_windows(c.calendar, crop); },
                         [crop](RunConfig& c, const std::string& v) {
                             std::vector<synth::CropWindow> keep;
                             for (const auto& w : c.calendar.entries())
                                 if (w.crop != crop) keep.push_back(w);
                             for (const auto& w : parse_windows(v, crop)) keep.push_back(w);
                             c.calendar = synth::CropCalendar(std::move(keep));
                         }});
        }

        t.push_back({"srrm", "k_values", [](const RunConfig& c) { return format_list(c.search.k_values); },
                     [](RunConfig& c, const std::string& v) { c.search.k_values = parse_list<int>(v); }});
        t.push_back({"srrm", "psi_values", [](const RunConfig& c) { return format_list(c.search.psi_values); },
                     [](RunConfig& c, const std::string& v) { c.search.psi_values = parse_list<double>(v); }});
        t.push_back({"srrm", "mu_values", [](const RunConfig& c) { return format_list(c.search.mu_values); },
                     [](RunConfig& c, const std::string& v) { c.search.mu_values = parse_list<double>(v); }});
        t.push_back(nested("srrm", "folds", &RunConfig::search, &srrm::SearchGrid::folds));
        t.push_back(nested("srrm", "iterations", &RunConfig::srrm, &srrm::SrrmParams::iterations));
        t.push_back(nested("srrm", "sample_fraction", &RunConfig::srrm, &srrm::SrrmParams::sample_fraction));
        t.push_back(nested("srrm", "train_fraction", &RunConfig::srrm, &srrm::SrrmParams::train_fraction));
        t.push_back({"srrm", "subsample",
                     [](const RunConfig& c) {
                         return std::string(c.srrm.subsample == itclust::Subsample::Columns ? "columns" : "rows");
                     },
                     [](RunConfig& c, const std::string& v) {
                         if (v == "columns") {
                             c.srrm.subsample = itclust::Subsample::Columns;
                         } else if (v == "rows") {
                             c.srrm.subsample = itclust::Subsample::Rows;
                         } else {
                             throw UsageError("subsample must be columns or rows");
                         }
                     }});

        t.push_back(nested("pri", "k", &RunConfig::pri, &pri::PriConfig::k));
        t.push_back(nested("pri", "k_j", &RunConfig::pri, &pri::PriConfig::k_j));
        t.push_back({"pri", "beta", [](const RunConfig& c) { return format_number(c.pri.optimize.beta); },
                     [](RunConfig& c, const std::string& v) { c.pri.optimize.beta = parse_number<double>(v); }});
        t.push_back({"pri", "iterations", [](const RunConfig& c) { return format_number(c.pri.optimize.iterations); },
                     [](RunConfig& c, const std::string& v) { c.pri.optimize.iterations = parse_number<int>(v); }});
        t.push_back({"pri", "step", [](const RunConfig& c) { return format_optional(c.pri.optimize.step); },
                     [](RunConfig& c, const std::string& v) { c.pri.optimize.step = parse_optional<double>(v); }});
        t.push_back({"pri", "sigma", [](const RunConfig& c) { return format_optional(c.pri.optimize.sigma); },
                     [](RunConfig& c, const std::string& v) { c.pri.optimize.sigma = parse_optional<double>(v); }});

        t.push_back({"eval", "kld_bins", [](const RunConfig& c) { return format_number(c.eval.histogram.bins); },
                     [](RunConfig& c, const std::string& v) { c.eval.histogram.bins = parse_number<int>(v); }});
        t.push_back({"eval", "kld_range",
                     [](const RunConfig& c) {
                         const auto& r = c.eval.histogram.range;
                         return r ? format_number(r->first) + "," + format_number(r->second) : std::string("auto");
                     },
                     [](RunConfig& c, const std::string& v) {
                         if (trim(v) == "auto") {
                             c.eval.histogram.range.reset();
                             return;
                         }
                         const auto r = parse_list<double>(v);
                         if (r.size() != 2) throw UsageError("kld_range needs two values");
                         c.eval.histogram.range = std::pair{r[0], r[1]};
                     }});
        t.push_back({"eval", "kld_direction",
                     [](const RunConfig& c) {
                         return std::string(c.eval.histogram.direction == metrics::KlDirection::TruthToEstimate
                                                ? "truth_to_estimate"
                                                : "estimate_to_truth");
                     },
                     [](RunConfig& c, const std::string& v) {
                         if (v == "truth_to_estimate") {
                             c.eval.histogram.direction = metrics::KlDirection::TruthToEstimate;
                         } else if (v == "estimate_to_truth") {
                             c.eval.histogram.direction = metrics::KlDirection::EstimateToTruth;
                         } else {
                             throw UsageError("kld_direction must be truth_to_estimate or estimate_to_truth");
                         }
                     }});
        t.push_back(nested("eval", "ztest_threshold", &RunConfig::eval, &EvalConfig::ztest_threshold));
        t.push_back(nested("eval", "ztest_alpha", &RunConfig::eval, &EvalConfig::ztest_alpha));
        t.push_back(nested("eval", "below_level", &RunConfig::eval, &EvalConfig::below_level));
        t.push_back(nested("eval", "trace_day", &RunConfig::eval, &EvalConfig::trace_day));
        return t;
    }();
    return table;
}

// Line of each "section.key" in the source text, for error messages.
std::map<std::string, int> key_lines(const std::string& text) {
    std::map<std::string, int> lines;
    std::stringstream ss(text);
    std::string line, section;
    for (int no = 1; std::getline(ss, line); ++no) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') continue;
        if (t[0] == '[') {
            section = trim(t.substr(1, t.find(']') - 1));
        } else if (const auto eq = t.find('='); eq != std::string::npos) {
            lines.emplace(section + "." + trim(t.substr(0, eq)), no);
        }
    }
    return lines;
}

}  // namespace

std::vector<int> parse_day_list(const std::string& s) {
    if (trim(s) == "all") return {};
    std::vector<int> days;
    for (const auto& tok : split(s, ',')) {
        if (tok.empty()) continue;
        const int d = parse_number<int>(tok);
        if (d < 1 || d > 365) throw UsageError("day out of range [1,365]: " + tok);
        days.push_back(d);
    }
    if (days.empty()) throw UsageError("empty day list");
    std::sort(days.begin(), days.end());
    days.erase(std::unique(days.begin(), days.end()), days.end());
    return days;
}

void RunConfig::validate() const {
    try {
        scene.validate();
        search.validate();
        srrm::SrrmParams p = srrm;
        p.k = search.k_values.front();
        p.validate();
        if (!(srrm.train_fraction <= scene.insitu_fraction + 1e-12)) {
            throw DomainError("srrm.train_fraction cannot exceed synth.insitu_fraction");
        }
        pri.optimize.validate();
        if (pri.k < 2 || pri.k_j < 2) throw DomainError("pri.k and pri.k_j must be >= 2");
        if (eval.histogram.bins < 1) throw DomainError("eval.kld_bins must be >= 1");
        if (eval.histogram.range && !(eval.histogram.range->second > eval.histogram.range->first)) {
            throw DomainError("eval.kld_range must be increasing");
        }
        if (!(eval.ztest_alpha > 0.0 && eval.ztest_alpha < 1.0)) throw DomainError("eval.ztest_alpha in (0,1)");
        if (jobs < 0) throw DomainError("run.jobs must be >= 0");
    } catch (const UsageError&) {
        throw;
    } catch (const Error& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
}

RunConfig parse_config(std::istream& is, const std::string& source, const std::vector<std::string>& foreign_sections) {
    namespace pt = boost::property_tree;
    const std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw UsageError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    const auto lines = key_lines(text);
    auto where = [&](const std::string& id) {
        const auto it = lines.find(id);
        return source + ":" + (it == lines.end() ? std::string("?") : std::to_string(it->second));
    };

    RunConfig config;
    for (const auto& [section, body] : tree) {
        if (std::find(foreign_sections.begin(), foreign_sections.end(), section) != foreign_sections.end()) continue;
        if (body.empty() && !body.data().empty()) {
            throw UsageError(where("." + section) + ": key '" + section + "' outside any section");
        }
        for (const auto& [key, value] : body) {
            const std::string id = section + "." + key;
            const auto& table = settings();
            const auto it = std::find_if(table.begin(), table.end(),
                                         [&](const Setting& s) { return s.section == section && s.key == key; });
            if (it == table.end()) throw UsageError(where(id) + ": unknown setting [" + section + "] " + key);
            try {
                it->set(config, trim(value.data()));
            } catch (const Error& e) {
                throw UsageError(where(id) + ": [" + section + "] " + key + ": " + e.what());
            }
        }
    }
    try {
        config.validate();
    } catch (const UsageError& e) {
        throw UsageError(source + ": " + e.what());
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config " + path.string());
    return parse_config(in, path.string());
}

void write_config(std::ostream& os, const RunConfig& config) {
    write_config(os, config, {"run", "synth", "calendar", "srrm", "pri", "eval"});
}

void write_config(std::ostream& os, const RunConfig& config, const std::vector<std::string>& sections) {
    std::string section;
    for (const auto& s : settings()) {
        if (std::find(sections.begin(), sections.end(), s.section) == sections.end()) continue;
        if (s.section != section) {
            if (!section.empty()) os << '\n';
            section = s.section;
            os << '[' << section << "]\n";
        }
        os << s.key << " = " << s.get(config) << '\n';
    }
}

}  // namespace disagg
