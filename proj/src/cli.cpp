#include "histmap/cli.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "histmap/render.hpp"
#include "histmap/scene_io.hpp"

namespace histmap {
namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

// Stable string key for a numeric threshold ("0.5", "1.0", ...).
std::string num_key(double v) { return json(v).dump(); }

TrackerConfig tracker_config_from(const std::string& config_path,
                                  const GridSpec& grid) {
  TrackerConfig config;
  config.spec = grid;
  if (!config_path.empty()) {
    const json j = load_json_file(config_path);
    config.tau_det = j.value("tau_det", config.tau_det);
    config.tau_track = j.value("tau_track", config.tau_track);
    config.lambda = j.value("lambda", config.lambda);
    config.patience = j.value("patience", config.patience);
    config.additive_update = j.value("additive_update", config.additive_update);
  }
  config.validate();
  return config;
}

EvalConfig eval_config_from(const std::string& config_path) {
  if (config_path.empty()) return EvalConfig{};
  return EvalConfig::from_json(load_json_file(config_path));
}

// Per-frame prediction lists reassembled from the track records.
std::map<int, std::vector<MapElement>> predictions_by_frame(
    const std::vector<TrackRecord>& tracks) {
  std::map<int, std::vector<MapElement>> out;
  for (const TrackRecord& track : tracks) {
    for (const TrackSnapshot& snap : track.snapshots) {
      MapElement element = snap.element;
      element.track_id = track.track_id;
      out[snap.frame_index].push_back(std::move(element));
    }
  }
  return out;
}

json frame_report_json(const FrameReport& report) {
  json categories;
  for (const auto& [category, result] : report.categories) {
    json ap;
    for (const auto& [threshold, value] : result.ap_percent) {
      ap[num_key(threshold)] = value;
    }
    categories[to_string(category)] = {{"skipped", result.skipped},
                                       {"ap", std::move(ap)}};
  }
  return {{"frame_index", report.frame_index},
          {"skipped", report.skipped},
          {"map", report.map_percent},
          {"categories", std::move(categories)}};
}

}  // namespace

std::vector<TrackRecord> track_scene(const Scene& scene,
                                     const TrackerConfig& base_config,
                                     std::vector<TrackerOutput>* log) {
  TrackerConfig config = base_config;
  config.spec = scene.grid;
  Tracker tracker(config);

  std::map<std::int64_t, std::int64_t> sim_to_track;
  std::map<std::int64_t, std::int64_t> track_to_sim;
  for (const SceneFrame& frame : scene.frames) {
    FrameObservation obs;
    obs.frame_index = frame.frame_index;
    obs.ego_pose = frame.ego_pose;
    std::vector<std::int64_t> birth_sim_ids;
    if (frame.pred) {
      for (const MapElement& element : *frame.pred) {
        MapElement mapped = element;
        const auto it = element.track_id
                            ? sim_to_track.find(*element.track_id)
                            : sim_to_track.end();
        if (it != sim_to_track.end()) {
          mapped.track_id = it->second;
        } else {
          mapped.track_id.reset();
          if (element.score > config.tau_det) {
            birth_sim_ids.push_back(element.track_id ? *element.track_id : -1);
          }
        }
        obs.elements.push_back(std::move(mapped));
      }
    }
    const TrackerOutput out = tracker.step(obs);
    // Births happen in input order, so they zip with birth_sim_ids.
    for (std::size_t i = 0; i < out.born.size() && i < birth_sim_ids.size();
         ++i) {
      if (birth_sim_ids[i] >= 0) {
        sim_to_track[birth_sim_ids[i]] = out.born[i];
        track_to_sim[out.born[i]] = birth_sim_ids[i];
      }
    }
    for (std::int64_t removed : out.removed) {
      const auto sim = track_to_sim.find(removed);
      if (sim != track_to_sim.end()) {
        sim_to_track.erase(sim->second);
        track_to_sim.erase(sim);
      }
    }
    if (log) log->push_back(out);
  }
  return tracker.export_tracks();
}

nlohmann::json eval_report(const Scene& scene,
                           const std::vector<TrackRecord>& tracks,
                           const std::string& mode, const EvalConfig& cfg,
                           std::vector<nlohmann::json>* traces) {
  cfg.validate();
  json report;
  report["mode"] = mode;
  report["config"] = cfg.to_json();

  if (mode == "frame") {
    const auto preds = predictions_by_frame(tracks);
    json frames = json::array();
    double sum = 0.0;
    int counted = 0;
    static const std::vector<MapElement> kNoPreds;
    for (const SceneFrame& frame : scene.frames) {
      const auto it = preds.find(frame.frame_index);
      const std::vector<MapElement>& frame_preds =
          it == preds.end() ? kNoPreds : it->second;
      const FrameReport fr =
          frame_map(frame_preds, frame.gt, cfg, frame.frame_index, traces);
      frames.push_back(frame_report_json(fr));
      if (!fr.skipped) {
        sum += fr.map_percent;
        counted += 1;
      }
    }
    report["frames"] = std::move(frames);
    report["frames_evaluated"] = counted;
    report["sequence_mean_map"] =
        counted == 0 ? 0.0 : sum / static_cast<double>(counted);
    return report;
  }

  if (mode == "global") {
    std::vector<LocalFrame> frames;
    std::vector<Point2> anchors;
    for (const SceneFrame& frame : scene.frames) {
      anchors.push_back(frame.ego_pose.translation);
      for (const MapElement& e : frame.gt) {
        if (!e.track_id) {
          throw std::invalid_argument(
              "ground truth without global ids in frame " +
              std::to_string(frame.frame_index) +
              "; global mode needs stable instance ids");
        }
        for (Point2 p : e.vertices()) {
          anchors.push_back(frame.ego_pose.apply(p));
        }
      }
      frames.push_back({frame.frame_index, frame.ego_pose, frame.gt});
    }
    for (const TrackRecord& track : tracks) {
      for (const TrackSnapshot& snap : track.snapshots) {
        for (Point2 p : snap.element.vertices()) {
          anchors.push_back(snap.ego_pose.apply(p));
        }
      }
    }
    if (anchors.empty()) {
      throw std::invalid_argument("nothing to evaluate");
    }
    const GridSpec grid = make_global_grid(anchors, cfg);
    const GlobalMap gt_map = raster_global_gt(frames, grid, cfg);
    const GlobalMap pred_map = merge_predictions(tracks, grid, cfg);
    const GlobalReport gr = g_map(pred_map, gt_map, cfg, traces);

    json categories;
    for (const auto& [category, result] : gr.categories) {
      json ap;
      for (const auto& [threshold, value] : result.ap_percent) {
        ap[num_key(threshold)] = value;
      }
      categories[to_string(category)] = {{"skipped", result.skipped},
                                         {"ap", std::move(ap)},
                                         {"mean", result.mean_percent}};
    }
    report["categories"] = std::move(categories);
    report["g_map"] = gr.g_map_percent;
    report["grid"] = grid_to_json(grid);
    return report;
  }

  throw std::invalid_argument("unknown eval mode " + mode);
}

int run_simulate(const SimulateOptions& options, std::ostream& err) {
  try {
    ScenarioSpec spec;
    if (!options.config_path.empty()) {
      spec = ScenarioSpec::from_json(load_json_file(options.config_path));
    }
    options.model.validate();
    const Scene scene = simulate(spec, options.model, options.seed);
    write_scene(scene, options.out);
    return 0;
  } catch (const std::exception& e) {
    err << "simulate: " << e.what() << "\n";
    return 1;
  }
}

int run_track(const TrackOptions& options, std::ostream& err) {
  try {
    Scene scene;
    try {
      scene = read_scene(options.scene_path);
    } catch (const SceneParseError& e) {
      err << "track: " << options.scene_path << ":" << e.what() << "\n";
      return 1;
    }
    bool any_pred = false;
    for (const SceneFrame& frame : scene.frames) {
      any_pred = any_pred || frame.pred.has_value();
    }
    if (!any_pred) {
      err << "track: scene has no prediction records\n";
      return 1;
    }

    const TrackerConfig config =
        tracker_config_from(options.config_path, scene.grid);
    std::vector<TrackerOutput> outputs;
    const std::vector<TrackRecord> tracks =
        track_scene(scene, config, &outputs);

    const std::string log_path =
        options.log_path.empty() ? options.out + ".log" : options.log_path;
    std::ofstream log(log_path);
    if (!log) throw std::runtime_error("cannot open " + log_path);
    log << json{{"type", "header"},
                {"tau_det", config.tau_det},
                {"tau_track", config.tau_track},
                {"lambda", config.lambda},
                {"patience", config.patience},
                {"additive_update", config.additive_update}}
               .dump()
        << "\n";
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      log << json{{"type", "step"},
                  {"frame_index", scene.frames[i].frame_index},
                  {"born", outputs[i].born},
                  {"continued", outputs[i].continued},
                  {"removed", outputs[i].removed},
                  {"live", outputs[i].live_count}}
                 .dump()
          << "\n";
    }

    write_tracks(tracks, config, options.out);
    return 0;
  } catch (const std::exception& e) {
    err << "track: " << e.what() << "\n";
    return 1;
  }
}

int run_eval(const EvalOptions& options, std::ostream& out,
             std::ostream& err) {
  try {
    Scene scene;
    try {
      scene = read_scene(options.scene_path);
    } catch (const SceneParseError& e) {
      err << "eval: " << options.scene_path << ":" << e.what() << "\n";
      return 1;
    }
    std::vector<TrackRecord> tracks;
    try {
      tracks = read_tracks(options.tracks_path);
    } catch (const SceneParseError& e) {
      err << "eval: " << options.tracks_path << ":" << e.what() << "\n";
      return 1;
    }
    const EvalConfig cfg = eval_config_from(options.config_path);
    std::vector<json> traces;
    std::vector<json>* trace_sink =
        options.dump_matches.empty() ? nullptr : &traces;

    const json report =
        eval_report(scene, tracks, options.mode, cfg, trace_sink);

    out << std::fixed << std::setprecision(4);
    if (options.mode == "frame") {
      out << "frame mAP (mean over " << report["frames_evaluated"].get<int>()
          << " frames): " << report["sequence_mean_map"].get<double>() << "\n";
    } else {
      for (const auto& [name, result] : report["categories"].items()) {
        out << std::setw(10) << name << "  ";
        if (result["skipped"].get<bool>()) {
          out << "skipped (no ground truth)\n";
        } else {
          out << "AP " << result["mean"].get<double>() << "\n";
        }
      }
      out << "G-mAP: " << report["g_map"].get<double>() << "\n";
    }

    if (!options.out.empty()) {
      std::ofstream file(options.out);
      if (!file) throw std::runtime_error("cannot open " + options.out);
      file << report.dump(2) << "\n";
    }
    if (trace_sink) {
      std::ofstream dump(options.dump_matches);
      if (!dump) {
        throw std::runtime_error("cannot open " + options.dump_matches);
      }
      for (const json& t : traces) dump << t.dump() << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    err << "eval: " << e.what() << "\n";
    return 1;
  }
}

int run_render(const RenderOptions& options, std::ostream& err) {
  try {
    const Scene scene = read_scene(options.scene_path);
    std::optional<std::vector<TrackRecord>> tracks;
    if (!options.tracks_path.empty()) {
      tracks = read_tracks(options.tracks_path);
    }
    render_scene(scene, tracks, eval_config_from(options.config_path),
                 options.out_dir);
    return 0;
  } catch (const std::exception& e) {
    err << "render: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace histmap
