#pragma once

// On-disk season layout:
//
//   DIR/manifest.ini
//   DIR/doy001/doy001_lai_1km.grid  (also lst, ppt, lc, sm at 1km; sm at 10km;
//                                    insitu at 1km with NaN off-station)
//   DIR/doy004/...

#include "disagg/config.hpp"
#include "disagg/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace disagg::dataset {

namespace fs = std::filesystem;

struct Manifest {
    std::uint64_t seed = 0;
    std::vector<int> days;
    synth::SceneSpec scene;
    synth::CropCalendar calendar;
};

/// "doy039".
std::string day_tag(int day);
/// DIR/doyDDD/doyDDD_{var}_{res}.grid
fs::path grid_path(const fs::path& root, int day, const std::string& var, const std::string& res);

void write_manifest(const fs::path& root, const Manifest& manifest);
/// DataError when missing or malformed.
Manifest read_manifest(const fs::path& root);

void write_scene(const fs::path& root, const synth::Scene& scene);
/// SchemaError when a variable file is missing; DataError when unreadable.
synth::Scene read_scene(const fs::path& root, int day);

}  // namespace disagg::dataset
