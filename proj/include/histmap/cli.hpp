#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histmap/metrics.hpp"
#include "histmap/simkit.hpp"
#include "histmap/tracker.hpp"

namespace histmap {

struct SimulateOptions {
  std::string config_path;  // scenario spec JSON (empty: defaults)
  std::uint64_t seed = 0;
  std::string out;
  PerturbationModel model;
};

struct TrackOptions {
  std::string scene_path;
  std::string config_path;  // tracker config JSON (empty: defaults)
  std::string out;
  std::string log_path;  // empty: <out>.log
};

struct EvalOptions {
  std::string scene_path;
  std::string tracks_path;
  std::string mode = "frame";  // frame | global
  std::string config_path;     // eval config JSON (empty: defaults)
  std::string out;
  std::string dump_matches;  // empty: no trace dump
};

struct RenderOptions {
  std::string scene_path;
  std::string tracks_path;  // optional
  std::string config_path;
  std::string out_dir;
};

/// Each command returns a process exit code (0 on success) and reports
/// failures on `err`. They are plain library calls so tests and bindings can
/// run the identical pipeline in-process.
int run_simulate(const SimulateOptions& options, std::ostream& err);
int run_track(const TrackOptions& options, std::ostream& err);
int run_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int run_render(const RenderOptions& options, std::ostream& err);

/// Feeds a scene's predictions through a fresh tracker, bridging the
/// scene's association ids to tracker ids (an unknown association id births
/// a track; a removed track's id mapping is dropped, so reappearance births
/// a new one). Returns the full track export.
std::vector<TrackRecord> track_scene(const Scene& scene,
                                     const TrackerConfig& base_config,
                                     std::vector<TrackerOutput>* log = nullptr);

/// Evaluation report for mode "frame" or "global"; throws on invalid input
/// (e.g. missing global ids in global mode).
nlohmann::json eval_report(const Scene& scene,
                           const std::vector<TrackRecord>& tracks,
                           const std::string& mode, const EvalConfig& cfg,
                           std::vector<nlohmann::json>* traces = nullptr);

}  // namespace histmap
