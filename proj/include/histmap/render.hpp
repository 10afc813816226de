#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "histmap/metrics.hpp"
#include "histmap/scene_io.hpp"

namespace histmap {

/// Writes the global map renderings into out_dir: global_map.svg (ground
/// truth paths colored per category, merged track paths colored by id hash)
/// plus per-category ground-truth PGM layers and, when tracks are given,
/// per-track global raster PGMs.
void render_scene(const Scene& scene,
                  const std::optional<std::vector<TrackRecord>>& tracks,
                  const EvalConfig& cfg,
                  const std::filesystem::path& out_dir);

/// Deterministic color for a track id (hash of the id -> HSL hue).
std::string track_color(std::int64_t track_id);

}  // namespace histmap
