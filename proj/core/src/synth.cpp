#include "disagg/synth.hpp"

#include "disagg/errors.hpp"
#include "disagg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace disagg::synth {

CropCalendar::CropCalendar(std::vector<CropWindow> entries) : entries_(std::move(entries)) {
    for (const auto& e : entries_) {
        if (!(e.planting < e.harvest)) throw DomainError("crop calendar: planting must precede harvest");
        if (e.planting < 1 || e.harvest > 366) throw DomainError("crop calendar: day-of-year out of range");
        if (e.crop == LandCover::Bare) throw DomainError("crop calendar: bare soil has no growing window");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i)
        for (std::size_t j = i + 1; j < entries_.size(); ++j) {
            const auto& a = entries_[i];
            const auto& b = entries_[j];
            if (a.crop == b.crop && a.planting <= b.harvest && b.planting <= a.harvest) {
                throw DomainError("crop calendar: overlapping windows for " + std::string(to_string(a.crop)));
            }
        }
}

CropCalendar CropCalendar::standard() {
    return CropCalendar({{LandCover::Corn, 61, 139}, {LandCover::Corn, 183, 261}, {LandCover::Cotton, 153, 332}});
}

std::optional<CropWindow> CropCalendar::window(LandCover crop, int day) const {
    for (const auto& e : entries_) {
        if (e.crop == crop && day >= e.planting && day <= e.harvest) return e;
    }
    return std::nullopt;
}

void SceneSpec::validate() const {
    if (region_cells == 0 || fine_factor == 0 || coarse_factor == 0) throw DomainError("scene spec: zero size");
    if (region_cells % fine_factor != 0 || fine_cells() % coarse_factor != 0) {
        throw DimensionError("scene spec: factors must divide the region");
    }
    if (!(base_cell_size > 0.0)) throw DomainError("scene spec: base_cell_size must be positive");
    if (patch_count < 1) throw DomainError("scene spec: patch_count must be >= 1");
    if (corn_share < 0 || cotton_share < 0 || corn_share + cotton_share > 1.0) {
        throw DomainError("scene spec: crop shares must be non-negative and sum to <= 1");
    }
    if (!(insitu_fraction > 0.0 && insitu_fraction <= 1.0)) throw DomainError("scene spec: insitu_fraction in (0,1]");
    if (!(sm_min >= 0.0 && sm_min < sm_max && sm_max <= 1.0)) throw DomainError("scene spec: bad SM band");
    for (double sd : {lst_noise_sd, ppt_noise_sd, sm_noise_sd, lai_noise_sd, insitu_noise_sd}) {
        if (!(sd >= 0.0)) throw DomainError("scene spec: noise SDs must be >= 0");
    }
    if (irrigation_interval < 1) throw DomainError("scene spec: irrigation_interval must be >= 1");
    if (!(texture_length > 0.0 && perturbation_length > 0.0)) throw DomainError("scene spec: lengths must be > 0");
}

std::size_t Scene::coarse_factor() const {
    if (coarse_sm.rows() == 0) throw SchemaError("scene: missing coarse SM");
    return true_sm.rows() / coarse_sm.rows();
}

void Scene::validate() const {
    const std::pair<const Grid*, const char*> fine[] = {
        {&lai, "LAI"}, {&lst, "LST"}, {&ppt, "PPT"}, {&lc, "LC"}, {&true_sm, "true SM"}};
    for (const auto& [g, name] : fine) {
        if (g->empty()) throw SchemaError(std::string("scene: missing ") + name);
        if (!g->same_shape(true_sm)) throw DimensionError(std::string("scene: ") + name + " grid misaligned");
    }
    if (coarse_sm.empty()) throw SchemaError("scene: missing coarse SM");
    const std::size_t f = coarse_factor();
    if (f == 0 || coarse_sm.rows() * f != true_sm.rows() || coarse_sm.cols() * f != true_sm.cols()) {
        throw DimensionError("scene: coarse grid does not tile the fine grid");
    }
    for (const auto& o : insitu) {
        if (o.pixel >= true_sm.size()) throw DimensionError("scene: in-situ pixel out of range");
    }
}

ForcedWeather forced_weather(int day) {
    switch (day) {
        case 39: return ForcedWeather::Dry;
        case 135: return ForcedWeather::DryIrrigated;
        case 156: return ForcedWeather::Wet;
        case 222: return ForcedWeather::DryIrrigated;
        case 354: return ForcedWeather::Wet;
        default: return ForcedWeather::None;
    }
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t day_tag(int day) { return static_cast<std::uint64_t>(day + 100000); }

// White noise blurred by a separable Gaussian, normalized to zero mean and unit SD.
std::vector<double> random_field(std::size_t n, double sigma_cells, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> a(n * n);
    for (double& v : a) v = normal(rng);

    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_cells)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    for (int t = -radius; t <= radius; ++t) {
        kernel[static_cast<std::size_t>(t + radius)] = std::exp(-0.5 * t * t / (sigma_cells * sigma_cells));
    }
    const auto reflect = [n](long i) {
        const long m = static_cast<long>(n);
        while (i < 0 || i >= m) i = i < 0 ? -i - 1 : 2 * m - i - 1;
        return static_cast<std::size_t>(i);
    };
    std::vector<double> b(n * n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            double s = 0.0;
            for (int t = -radius; t <= radius; ++t)
                s += kernel[static_cast<std::size_t>(t + radius)] * a[r * n + reflect(static_cast<long>(c) + t)];
            b[r * n + c] = s;
        }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            double s = 0.0;
            for (int t = -radius; t <= radius; ++t)
                s += kernel[static_cast<std::size_t>(t + radius)] * b[reflect(static_cast<long>(r) + t) * n + c];
            a[r * n + c] = s;
        }

    const double mu = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    double var = 0.0;
    for (double v : a) var += (v - mu) * (v - mu);
    const double sd = std::sqrt(var / static_cast<double>(a.size()));
    for (double& v : a) v = sd > 0.0 ? (v - mu) / sd : 0.0;
    return a;
}

struct Storm {
    double row, col, radius, depth;  // base-cell units, mm
};

bool near_forced(int t, ForcedWeather kind, int before, int after) {
    for (int e : kEvaluationDays) {
        if (forced_weather(e) == kind && t >= e - before && t <= e + after) return true;
    }
    return false;
}

std::vector<Storm> storms_for(const SceneSpec& spec, int t, std::uint64_t seed) {
    Rng rng = make_rng(seed, {stream::kWeather, day_tag(t)});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double p = spec.rain_probability * (1.0 + 0.5 * std::sin(kTwoPi * (t - 120) / 365.0));
    bool rain = unit(rng) < p;
    bool wet = false;
    if (spec.force_evaluation_days) {
        const bool dry = near_forced(t, ForcedWeather::Dry, 6, 1) || near_forced(t, ForcedWeather::DryIrrigated, 6, 1);
        wet = near_forced(t, ForcedWeather::Wet, 1, 1);
        if (dry) rain = false;
        if (wet) rain = true;
    }
    std::vector<Storm> out;
    if (!rain) return out;
    const double n = static_cast<double>(spec.region_cells);
    const double km = 1000.0 / spec.base_cell_size;
    std::exponential_distribution<double> depth(1.0 / spec.storm_mean_depth);
    const int cells = 1 + static_cast<int>(unit(rng) * 3.0) + (wet ? 1 : 0);
    for (int i = 0; i < cells; ++i) {
        Storm s;
        s.row = (-0.2 + 1.4 * unit(rng)) * n;
        s.col = (-0.2 + 1.4 * unit(rng)) * n;
        s.radius = (6.0 + 14.0 * unit(rng)) * km;
        s.depth = depth(rng) + (wet ? 10.0 : 0.0);
        out.push_back(s);
    }
    return out;
}

// Rain plus irrigation for day t on the base grid.
std::vector<double> water_input(const SceneSpec& spec, const CropCalendar& cal, const FieldLayout& layout, int t,
                                std::uint64_t seed) {
    const std::size_t n = spec.region_cells;
    std::vector<double> w(n * n, 0.0);
    for (const Storm& s : storms_for(spec, t, seed)) {
        const double inv = -0.5 / (s.radius * s.radius);
        for (std::size_t r = 0; r < n; ++r) {
            const double dr = static_cast<double>(r) + 0.5 - s.row;
            for (std::size_t c = 0; c < n; ++c) {
                const double dc = static_cast<double>(c) + 0.5 - s.col;
                w[r * n + c] += s.depth * std::exp((dr * dr + dc * dc) * inv);
            }
        }
    }
    const double rain_max = w.empty() ? 0.0 : *std::max_element(w.begin(), w.end());
    if (rain_max > 5.0) return w;  // no irrigation on rainy days

    const bool forced = spec.force_evaluation_days && near_forced(t, ForcedWeather::DryIrrigated, 0, 1);
    std::vector<double> patch_water(layout.crop.size(), 0.0);
    for (std::size_t p = 0; p < layout.crop.size(); ++p) {
        if (layout.crop[p] == LandCover::Bare || !cal.active(layout.crop[p], t)) continue;
        const bool scheduled = (t + layout.irrigation_phase[p]) % spec.irrigation_interval == 0;
        if (scheduled || (forced && layout.irrigation_phase[p] % 2 == 0)) patch_water[p] = spec.irrigation_depth;
    }
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += patch_water[static_cast<std::size_t>(layout.patch[i])];
    return w;
}

double patch_vigor(const SceneSpec& spec, std::size_t patch) {
    Rng rng = make_rng(spec.layout_seed, {stream::kLayout, 1000 + patch});
    return std::uniform_real_distribution<double>(0.85, 1.15)(rng);
}

std::vector<double> base_lai(const SceneSpec& spec, const CropCalendar& cal, const FieldLayout& layout, int day) {
    std::vector<double> patch_lai(layout.crop.size(), 0.0);
    for (std::size_t p = 0; p < layout.crop.size(); ++p) {
        if (layout.crop[p] == LandCover::Bare) continue;
        const auto w = cal.window(layout.crop[p], day);
        if (!w) continue;
        const double phase = static_cast<double>(day - w->planting) / static_cast<double>(w->harvest - w->planting);
        const double peak = layout.crop[p] == LandCover::Corn ? spec.peak_lai_corn : spec.peak_lai_cotton;
        patch_lai[p] = peak * patch_vigor(spec, p) * std::sin(std::numbers::pi * phase);
    }
    std::vector<double> lai(layout.patch.size());
    for (std::size_t i = 0; i < lai.size(); ++i) lai[i] = patch_lai[static_cast<std::size_t>(layout.patch[i])];
    return lai;
}

Grid base_grid(const SceneSpec& spec, Variable var, std::vector<double> values) {
    return Grid(spec.region_cells, spec.region_cells, spec.base_cell_size, var, std::move(values));
}

std::uint64_t noise_seed(std::uint64_t seed, int day, Variable var) {
    return derive_seed(seed, {stream::kNoise, day_tag(day), static_cast<std::uint64_t>(var)});
}

}  // namespace

FieldLayout make_layout(const SceneSpec& spec) {
    spec.validate();
    Rng rng = make_rng(spec.layout_seed, {stream::kLayout});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n = spec.region_cells;
    const auto count = static_cast<std::size_t>(spec.patch_count);

    std::vector<std::pair<double, double>> centers(count);
    for (auto& c : centers) c = {unit(rng) * static_cast<double>(n), unit(rng) * static_cast<double>(n)};

    FieldLayout layout;
    layout.patch.resize(n * n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (std::size_t p = 0; p < count; ++p) {
                const double dr = static_cast<double>(r) + 0.5 - centers[p].first;
                const double dc = static_cast<double>(c) + 0.5 - centers[p].second;
                const double d = dr * dr + dc * dc;
                if (d < best) {
                    best = d;
                    arg = static_cast<int>(p);
                }
            }
            layout.patch[r * n + c] = arg;
        }

    const auto corn = static_cast<std::size_t>(std::llround(spec.corn_share * static_cast<double>(count)));
    const auto cotton = static_cast<std::size_t>(std::llround(spec.cotton_share * static_cast<double>(count)));
    layout.crop.assign(count, LandCover::Bare);
    for (std::size_t p = 0; p < std::min(count, corn); ++p) layout.crop[p] = LandCover::Corn;
    for (std::size_t p = corn; p < std::min(count, corn + cotton); ++p) layout.crop[p] = LandCover::Cotton;
    std::shuffle(layout.crop.begin(), layout.crop.end(), rng);

    std::uniform_int_distribution<int> phase(0, spec.irrigation_interval - 1);
    layout.irrigation_phase.resize(count);
    for (auto& ph : layout.irrigation_phase) ph = phase(rng);
    return layout;
}

Grid generate_landcover_base(const SceneSpec& spec, const CropCalendar& calendar, int day) {
    if (day < 1 || day > 365) throw DomainError("generate_landcover: day must be in [1,365]");
    const FieldLayout layout = make_layout(spec);
    std::vector<double> lc(layout.patch.size());
    for (std::size_t i = 0; i < lc.size(); ++i) {
        const LandCover crop = layout.crop[static_cast<std::size_t>(layout.patch[i])];
        lc[i] = static_cast<double>(calendar.active(crop, day) ? crop : LandCover::Bare);
    }
    return base_grid(spec, Variable::LC, std::move(lc));
}

Grid generate_landcover(const SceneSpec& spec, const CropCalendar& calendar, int day) {
    return aggregate(generate_landcover_base(spec, calendar, day), spec.fine_factor);
}

Scene generate_scene(const SceneSpec& spec, const CropCalendar& calendar, int day, std::uint64_t seed) {
    if (day < 1 || day > 365) throw DomainError("generate_scene: day must be in [1,365]");
    spec.validate();
    const FieldLayout layout = make_layout(spec);
    const std::size_t n = spec.region_cells;
    const std::size_t cells = n * n;

    // Water history: today's 3-day accumulation and a decaying antecedent index.
    std::vector<double> ppt3(cells, 0.0);
    std::vector<double> antecedent(cells, 0.0);
    constexpr int kHistory = 15;
    for (int lag = 0; lag < kHistory; ++lag) {
        const std::vector<double> w = water_input(spec, calendar, layout, day - lag, seed);
        const double decay = std::exp(-lag / 4.0);
        for (std::size_t i = 0; i < cells; ++i) {
            antecedent[i] += decay * w[i];
            if (lag < 3) ppt3[i] += w[i];
        }
    }

    const std::vector<double> lai = base_lai(spec, calendar, layout, day);
    Rng texture_rng = make_rng(seed, {stream::kTexture});
    const std::vector<double> texture = random_field(n, spec.texture_length / spec.base_cell_size / 2.0, texture_rng);
    Rng pert_rng = make_rng(seed, {stream::kPerturbation, day_tag(day)});
    const double pert_sigma = spec.perturbation_length / spec.base_cell_size / 2.0;
    const std::vector<double> sm_pert = random_field(n, pert_sigma, pert_rng);
    const std::vector<double> lst_pert = random_field(n, pert_sigma, pert_rng);

    const double season = kTwoPi * (day - 20) / 365.0;
    const double sm_base = 0.10 + 0.04 * std::cos(season);
    const double t_air = 293.0 + 9.0 * std::sin(kTwoPi * (day - 110) / 365.0);

    std::vector<double> sm(cells), lst(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        const double wet = 0.24 * (1.0 - std::exp(-antecedent[i] / 30.0));
        const double v = sm_base + wet - 0.012 * lai[i] + spec.texture_amplitude * texture[i] +
                         spec.perturbation_amplitude * sm_pert[i];
        sm[i] = std::clamp(v, spec.sm_min, spec.sm_max);
        lst[i] = t_air + 45.0 * (0.22 - sm[i]) - 1.8 * lai[i] + 0.8 * lst_pert[i];
    }

    const std::size_t ff = spec.fine_factor;
    Scene scene;
    scene.day = day;
    scene.lc = generate_landcover(spec, calendar, day);
    scene.true_sm = aggregate(base_grid(spec, Variable::SM, std::move(sm)), ff);
    scene.coarse_sm_clean = aggregate(scene.true_sm, spec.coarse_factor);
    scene.coarse_sm = add_noise(scene.coarse_sm_clean, spec.sm_noise_sd, noise_seed(seed, day, Variable::SM));

    scene.lai = add_noise(aggregate(base_grid(spec, Variable::LAI, lai), ff), spec.lai_noise_sd,
                          noise_seed(seed, day, Variable::LAI));
    for (double& v : scene.lai.values()) v = std::max(v, 0.0);
    scene.lst = add_noise(aggregate(base_grid(spec, Variable::LST, std::move(lst)), ff), spec.lst_noise_sd,
                          noise_seed(seed, day, Variable::LST));
    scene.ppt = add_noise(aggregate(base_grid(spec, Variable::PPT, std::move(ppt3)), ff), spec.ppt_noise_sd,
                          noise_seed(seed, day, Variable::PPT));

    // In-situ stations sit on the same pixels all season.
    const std::size_t fine = scene.true_sm.size();
    std::vector<std::size_t> pixels(fine);
    std::iota(pixels.begin(), pixels.end(), std::size_t{0});
    Rng site_rng = make_rng(seed, {stream::kInsitu});
    std::shuffle(pixels.begin(), pixels.end(), site_rng);
    const auto take = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(spec.insitu_fraction * static_cast<double>(fine))), 1, fine);
    pixels.resize(take);
    std::sort(pixels.begin(), pixels.end());
    Rng obs_rng = make_rng(seed, {stream::kInsitu, day_tag(day)});
    std::normal_distribution<double> obs_noise(0.0, spec.insitu_noise_sd > 0.0 ? spec.insitu_noise_sd : 1.0);
    scene.insitu.reserve(take);
    for (std::size_t p : pixels) {
        double v = scene.true_sm[p];
        if (spec.insitu_noise_sd > 0.0) v = std::clamp(v + obs_noise(obs_rng), 0.0, 1.0);
        scene.insitu.push_back({p, v});
    }
    return scene;
}

std::vector<int> season_days() {
    std::vector<int> days;
    for (int d = 1; d <= 365; d += 3) days.push_back(d);
    return days;
}

int nearest_season_day(int day) {
    const auto days = season_days();
    int best = days.front();
    for (int d : days) {
        if (std::abs(d - day) < std::abs(best - day)) best = d;
    }
    return best;
}

std::vector<Scene> generate_season(const SceneSpec& spec, const CropCalendar& calendar, std::uint64_t seed) {
    std::vector<Scene> out;
    for (int d : season_days()) out.push_back(generate_scene(spec, calendar, d, seed));
    return out;
}

}  // namespace disagg::synth
