#include "histmap/scene_io.hpp"

#include <fstream>

namespace histmap {
namespace {

using nlohmann::json;

json points_to_json(const std::vector<Point2>& pts) {
  json out = json::array();
  for (Point2 p : pts) out.push_back({p.x, p.y});
  return out;
}

std::vector<Point2> points_from_json(const json& j) {
  std::vector<Point2> out;
  out.reserve(j.size());
  for (const auto& entry : j) {
    out.push_back({entry.at(0).get<double>(), entry.at(1).get<double>()});
  }
  return out;
}

}  // namespace

json grid_to_json(const GridSpec& grid) {
  return {{"height", grid.height},
          {"width", grid.width},
          {"x_range", {grid.x_min, grid.x_max}},
          {"y_range", {grid.y_min, grid.y_max}}};
}

GridSpec grid_from_json(const json& j) {
  GridSpec grid;
  grid.height = j.at("height").get<int>();
  grid.width = j.at("width").get<int>();
  grid.x_min = j.at("x_range").at(0).get<double>();
  grid.x_max = j.at("x_range").at(1).get<double>();
  grid.y_min = j.at("y_range").at(0).get<double>();
  grid.y_max = j.at("y_range").at(1).get<double>();
  grid.validate();
  return grid;
}

json pose_to_json(const Pose2& pose) {
  return {{"x", pose.translation.x},
          {"y", pose.translation.y},
          {"theta", pose.rotation}};
}

Pose2 pose_from_json(const json& j) {
  return Pose2(j.at("x").get<double>(), j.at("y").get<double>(),
               j.at("theta").get<double>());
}

json element_to_json(const MapElement& element, bool with_score) {
  json out;
  out["category"] = to_string(element.category);
  out["points"] = points_to_json(element.vertices());
  if (element.track_id) out["id"] = *element.track_id;
  if (with_score) out["score"] = element.score;
  return out;
}

MapElement element_from_json(const json& j, double default_score) {
  const Category category = category_from_string(j.at("category"));
  const std::vector<Point2> pts = points_from_json(j.at("points"));
  std::optional<std::int64_t> id;
  if (j.contains("id")) id = j["id"].get<std::int64_t>();
  const double score =
      j.contains("score") ? j["score"].get<double>() : default_score;
  if (category_is_polygon(category)) {
    return MapElement(Polygon(pts), category, score, id);
  }
  return MapElement(Polyline(pts), category, score, id);
}

Scene read_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  Scene scene;
  bool have_header = false;
  int last_frame = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SceneParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    try {
      const std::string type = record.at("type");
      if (!have_header) {
        if (type != "header") {
          throw SceneParseError(line_no, "first record must be the header");
        }
        const int version = record.at("version").get<int>();
        if (version != 1) {
          throw SceneParseError(line_no, "unsupported scene version " +
                                             std::to_string(version));
        }
        scene.version = version;
        scene.grid = grid_from_json(record.at("bev"));
        have_header = true;
        continue;
      }
      if (type != "frame") {
        throw SceneParseError(line_no, "unexpected record type " + type);
      }
      SceneFrame frame;
      frame.frame_index = record.at("frame_index").get<int>();
      if (frame.frame_index <= last_frame) {
        throw SceneParseError(line_no, "frame_index not strictly increasing");
      }
      last_frame = frame.frame_index;
      frame.ego_pose = pose_from_json(record.at("ego_pose"));
      for (const auto& g : record.at("gt")) {
        frame.gt.push_back(element_from_json(g, 1.0));
      }
      if (record.contains("pred")) {
        std::vector<MapElement> preds;
        for (const auto& p : record["pred"]) {
          preds.push_back(element_from_json(p, 1.0));
        }
        frame.pred = std::move(preds);
      }
      scene.frames.push_back(std::move(frame));
    } catch (const SceneParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw SceneParseError(line_no, e.what());
    }
  }
  if (!have_header) throw SceneParseError(1, "missing header record");
  return scene;
}

void write_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  json header = {{"type", "header"},
                 {"version", scene.version},
                 {"bev", grid_to_json(scene.grid)},
                 {"categories", {"pedestrian", "divider", "boundary"}}};
  out << header.dump() << "\n";
  for (const SceneFrame& frame : scene.frames) {
    json record = {{"type", "frame"},
                   {"frame_index", frame.frame_index},
                   {"ego_pose", pose_to_json(frame.ego_pose)}};
    json gt = json::array();
    for (const MapElement& e : frame.gt) gt.push_back(element_to_json(e, false));
    record["gt"] = std::move(gt);
    if (frame.pred) {
      json pred = json::array();
      for (const MapElement& e : *frame.pred) {
        pred.push_back(element_to_json(e, true));
      }
      record["pred"] = std::move(pred);
    }
    out << record.dump() << "\n";
  }
}

std::vector<TrackRecord> read_tracks(const std::filesystem::path& path,
                                     TrackerConfig* config_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::vector<TrackRecord> tracks;
  bool have_header = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SceneParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    try {
      const std::string type = record.at("type");
      if (!have_header) {
        if (type != "header") {
          throw SceneParseError(line_no, "first record must be the header");
        }
        if (record.at("version").get<int>() != 1) {
          throw SceneParseError(line_no, "unsupported tracks version");
        }
        if (config_out && record.contains("config")) {
          const auto& c = record["config"];
          config_out->tau_det = c.value("tau_det", config_out->tau_det);
          config_out->tau_track = c.value("tau_track", config_out->tau_track);
          config_out->lambda = c.value("lambda", config_out->lambda);
          config_out->patience = c.value("patience", config_out->patience);
          config_out->additive_update =
              c.value("additive_update", config_out->additive_update);
          if (c.contains("grid")) config_out->spec = grid_from_json(c["grid"]);
        }
        have_header = true;
        continue;
      }
      if (type != "track") {
        throw SceneParseError(line_no, "unexpected record type " + type);
      }
      TrackRecord track;
      track.track_id = record.at("track_id").get<std::int64_t>();
      track.category = category_from_string(record.at("category"));
      track.birth_frame = record.at("birth_frame").get<int>();
      for (const auto& f : record.at("frames")) {
        TrackSnapshot snap{
            f.at("frame_index").get<int>(), pose_from_json(f.at("ego_pose")),
            element_from_json(
                {{"category", record.at("category")},
                 {"points", f.at("points")},
                 {"score", f.at("score")},
                 {"id", record.at("track_id")}},
                1.0)};
        track.snapshots.push_back(std::move(snap));
      }
      tracks.push_back(std::move(track));
    } catch (const SceneParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw SceneParseError(line_no, e.what());
    }
  }
  if (!have_header) throw SceneParseError(1, "missing header record");
  return tracks;
}

void write_tracks(std::span<const TrackRecord> tracks,
                  const TrackerConfig& config,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  json header = {{"type", "header"},
                 {"version", 1},
                 {"config",
                  {{"tau_det", config.tau_det},
                   {"tau_track", config.tau_track},
                   {"lambda", config.lambda},
                   {"patience", config.patience},
                   {"additive_update", config.additive_update},
                   {"grid", grid_to_json(config.spec)}}}};
  out << header.dump() << "\n";
  for (const TrackRecord& track : tracks) {
    json frames = json::array();
    for (const TrackSnapshot& snap : track.snapshots) {
      frames.push_back({{"frame_index", snap.frame_index},
                        {"ego_pose", pose_to_json(snap.ego_pose)},
                        {"score", snap.element.score},
                        {"points", points_to_json(snap.element.vertices())}});
    }
    json record = {{"type", "track"},
                   {"track_id", track.track_id},
                   {"category", to_string(track.category)},
                   {"birth_frame", track.birth_frame},
                   {"frames", std::move(frames)}};
    out << record.dump() << "\n";
  }
}

}  // namespace histmap
