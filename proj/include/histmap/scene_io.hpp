#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "histmap/simkit.hpp"
#include "histmap/tracker.hpp"

namespace histmap {

/// Parse failure carrying the 1-based line number of the offending record.
class SceneParseError : public std::runtime_error {
 public:
  SceneParseError(int line, const std::string& message)
      : std::runtime_error(std::to_string(line) + ": " + message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Scene JSONL: header record first, then one frame record per line with
/// strictly increasing frame indices. See docs/format.md.
Scene read_scene(const std::filesystem::path& path);
void write_scene(const Scene& scene, const std::filesystem::path& path);

/// Tracks JSONL: header record echoing the tracker config, then one record
/// per track with its full per-frame geometry.
std::vector<TrackRecord> read_tracks(const std::filesystem::path& path,
                                     TrackerConfig* config_out = nullptr);
void write_tracks(std::span<const TrackRecord> tracks,
                  const TrackerConfig& config,
                  const std::filesystem::path& path);

nlohmann::json grid_to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);
nlohmann::json pose_to_json(const Pose2& pose);
Pose2 pose_from_json(const nlohmann::json& j);
nlohmann::json element_to_json(const MapElement& element, bool with_score);
MapElement element_from_json(const nlohmann::json& j, double default_score);

}  // namespace histmap
