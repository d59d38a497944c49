#include "disagg/dataset.hpp"

#include "disagg/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace disagg::dataset {

namespace {

constexpr int kFormat = 1;

std::string join_days(const std::vector<int>& days) {
    std::string out;
    for (std::size_t i = 0; i < days.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(days[i]);
    }
    return out;
}

}  // namespace

std::string day_tag(int day) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "doy%03d", day);
    return buf;
}

fs::path grid_path(const fs::path& root, int day, const std::string& var, const std::string& res) {
    const std::string tag = day_tag(day);
    return root / tag / (tag + "_" + var + "_" + res + ".grid");
}

void write_manifest(const fs::path& root, const Manifest& manifest) {
    fs::create_directories(root);
    std::ofstream os(root / "manifest.ini");
    if (!os) throw DataError("cannot write " + (root / "manifest.ini").string());
    os << "[dataset]\n"
       << "format = " << kFormat << '\n'
       << "seed = " << manifest.seed << '\n'
       << "days = " << join_days(manifest.days) << "\n\n";
    RunConfig c;
    c.scene = manifest.scene;
    c.calendar = manifest.calendar;
    write_config(os, c, {"synth", "calendar"});
    if (!os) throw DataError("cannot write " + (root / "manifest.ini").string());
}

Manifest read_manifest(const fs::path& root) {
    const fs::path path = root / "manifest.ini";
    std::ifstream is(path);
    if (!is) throw DataError("no dataset manifest at " + path.string());
    const std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};

    Manifest m;
    try {
        std::istringstream in(text);
        const RunConfig c = parse_config(in, path.string(), {"dataset"});
        m.scene = c.scene;
        m.calendar = c.calendar;

        namespace pt = boost::property_tree;
        pt::ptree tree;
        std::istringstream again(text);
        pt::read_ini(again, tree);
        if (tree.get<int>("dataset.format") != kFormat) throw DataError(path.string() + ": unsupported format");
        m.seed = tree.get<std::uint64_t>("dataset.seed");
        m.days = parse_day_list(tree.get<std::string>("dataset.days"));
    } catch (const UsageError& e) {
        throw DataError(std::string("bad dataset manifest: ") + e.what());
    } catch (const boost::property_tree::ptree_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return m;
}

void write_scene(const fs::path& root, const synth::Scene& scene) {
    scene.validate();
    fs::create_directories(root / day_tag(scene.day));
    const int d = scene.day;
    save_grid(grid_path(root, d, "lai", "1km"), scene.lai);
    save_grid(grid_path(root, d, "lst", "1km"), scene.lst);
    save_grid(grid_path(root, d, "ppt", "1km"), scene.ppt);
    save_grid(grid_path(root, d, "lc", "1km"), scene.lc);
    save_grid(grid_path(root, d, "sm", "1km"), scene.true_sm);
    save_grid(grid_path(root, d, "sm", "10km"), scene.coarse_sm);

    Grid insitu(scene.fine_rows(), scene.fine_cols(), scene.true_sm.cell_size(), Variable::SM,
                std::numeric_limits<double>::quiet_NaN());
    for (const auto& o : scene.insitu) insitu[o.pixel] = o.value;
    save_grid(grid_path(root, d, "insitu", "1km"), insitu);
}

synth::Scene read_scene(const fs::path& root, int day) {
    auto load = [&](const std::string& var, const std::string& res) {
        const fs::path p = grid_path(root, day, var, res);
        if (!fs::exists(p)) throw SchemaError("missing " + var + " at " + res + ": " + p.string());
        return load_grid(p);
    };
    synth::Scene s;
    s.day = day;
    s.lai = load("lai", "1km");
    s.lst = load("lst", "1km");
    s.ppt = load("ppt", "1km");
    s.lc = load("lc", "1km");
    s.true_sm = load("sm", "1km");
    s.coarse_sm = load("sm", "10km");
    const Grid insitu = load("insitu", "1km");
    if (!insitu.same_shape(s.true_sm)) throw DimensionError("in-situ grid misaligned for " + day_tag(day));
    for (std::size_t i = 0; i < insitu.size(); ++i) {
        if (!std::isnan(insitu[i])) s.insitu.push_back({i, insitu[i]});
    }
    s.validate();
    s.coarse_sm_clean = aggregate(s.true_sm, s.coarse_factor());
    return s;
}

}  // namespace disagg::dataset
