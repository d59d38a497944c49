#pragma once

// Season-long multiscale synthetic scenes: crop-calendar driven LAI, storm and
// irrigation driven PPT, SM as a response to water input and vegetation, and
// LST anti-correlated with both. Fields are built at the base (200 m)
// resolution and block-averaged to the fine (1 km) and coarse (10 km) grids.

#include "disagg/grid.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace disagg::synth {

struct CropWindow {
    LandCover crop;
    int planting;  // first growing day-of-year
    int harvest;   // last growing day-of-year
};

class CropCalendar {
public:
    CropCalendar() = default;
    explicit CropCalendar(std::vector<CropWindow> entries);

    /// Sweet corn 61-139 and 183-261, cotton 153-332.
    static CropCalendar standard();

    const std::vector<CropWindow>& entries() const noexcept { return entries_; }
    /// The growing window of `crop` containing `day`, if any.
    std::optional<CropWindow> window(LandCover crop, int day) const;
    bool active(LandCover crop, int day) const { return window(crop, day).has_value(); }

private:
    std::vector<CropWindow> entries_;
};

/// Weather imposed on specific days so the scene mix covers dry bare soil,
/// irrigated single crops, wet days and the fully heterogeneous case.
enum class ForcedWeather { None, Dry, DryIrrigated, Wet };

struct SceneSpec {
    std::size_t region_cells = 250;  // base cells per side (50 km at 200 m)
    double base_cell_size = 200.0;   // meters
    std::size_t fine_factor = 5;     // 200 m -> 1 km
    std::size_t coarse_factor = 10;  // 1 km -> 10 km

    int patch_count = 40;  // contiguous fields (Voronoi cells)
    double corn_share = 0.3;
    double cotton_share = 0.3;
    std::uint64_t layout_seed = 2007;

    double peak_lai_corn = 3.2;
    double peak_lai_cotton = 2.6;

    double texture_length = 8000.0;       // meters, static soil pattern
    double texture_amplitude = 0.015;     // m3/m3
    double perturbation_length = 4000.0;  // meters, daily pattern
    double perturbation_amplitude = 0.006;
    double rain_probability = 0.3;
    double storm_mean_depth = 14.0;  // mm
    double irrigation_depth = 12.0;  // mm
    int irrigation_interval = 4;     // days

    double sm_min = 0.02;
    double sm_max = 0.45;

    double lst_noise_sd = 5.0;
    double ppt_noise_sd = 1.0;
    double sm_noise_sd = 0.03;
    double lai_noise_sd = 0.1;

    double insitu_fraction = 0.33;
    double insitu_noise_sd = 0.0;

    bool force_evaluation_days = true;

    void validate() const;
    std::size_t fine_cells() const { return region_cells / fine_factor; }
    std::size_t coarse_cells() const { return fine_cells() / coarse_factor; }
    double fine_cell_size() const { return base_cell_size * static_cast<double>(fine_factor); }
};

struct InsituObservation {
    std::size_t pixel;  // row-major index on the fine grid
    double value;
};

struct Scene {
    int day = 0;
    Grid lai;  // fine
    Grid lst;
    Grid ppt;  // 3-day accumulation
    Grid lc;
    Grid coarse_sm;        // noisy observation at the coarse scale
    Grid coarse_sm_clean;  // block mean of true_sm before noise
    Grid true_sm;          // fine
    std::vector<InsituObservation> insitu;

    std::size_t fine_rows() const { return true_sm.rows(); }
    std::size_t fine_cols() const { return true_sm.cols(); }
    std::size_t coarse_factor() const;
    /// Throws SchemaError/DimensionError when grids are missing or misaligned.
    void validate() const;
};

/// Evaluation days and their forced weather: 39, 135, 156, 222, 354.
ForcedWeather forced_weather(int day);
inline constexpr int kEvaluationDays[] = {39, 135, 156, 222, 354};

/// Field patch ids and their crop assignment at the base resolution.
struct FieldLayout {
    std::vector<int> patch;  // base-grid cells, row-major
    std::vector<LandCover> crop;  // per patch
    std::vector<int> irrigation_phase;  // per patch
};
FieldLayout make_layout(const SceneSpec& spec);

Grid generate_landcover_base(const SceneSpec& spec, const CropCalendar& calendar, int day);
/// Land cover at the fine resolution (majority of base cells).
Grid generate_landcover(const SceneSpec& spec, const CropCalendar& calendar, int day);

Scene generate_scene(const SceneSpec& spec, const CropCalendar& calendar, int day, std::uint64_t seed);

/// Scene days of the season: 1, 4, ..., 364.
std::vector<int> season_days();
/// Season day closest to `day` (earlier day on ties).
int nearest_season_day(int day);

std::vector<Scene> generate_season(const SceneSpec& spec, const CropCalendar& calendar, std::uint64_t seed);

}  // namespace disagg::synth
