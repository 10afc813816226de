#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "histmap/cli.hpp"
#include "histmap/metrics.hpp"
#include "histmap/prior.hpp"
#include "histmap/render.hpp"
#include "histmap/scene_io.hpp"

namespace py = pybind11;
using namespace histmap;

namespace {

py::array_t<double> grid_values(const HistoryMap& map) {
  py::array_t<double> out({map.spec.height, map.spec.width});
  std::copy(map.cells.begin(), map.cells.end(), out.mutable_data());
  return out;
}

MapElement make_element(const std::vector<std::pair<double, double>>& points,
                        const std::string& category, double score,
                        std::optional<std::int64_t> track_id) {
  std::vector<Point2> pts;
  pts.reserve(points.size());
  for (auto [x, y] : points) pts.push_back({x, y});
  const Category cat = category_from_string(category);
  if (category_is_polygon(cat)) {
    return MapElement(Polygon(pts), cat, score, track_id);
  }
  return MapElement(Polyline(pts), cat, score, track_id);
}

CostMatrix cost_matrix_from(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  CostMatrix cm(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw std::invalid_argument("ragged cost matrix");
    }
    for (std::size_t j = 0; j < cols; ++j) cm.at(i, j) = rows[i][j];
  }
  return cm;
}

std::string eval_json(const Scene& scene,
                      const std::vector<TrackRecord>& tracks,
                      const std::string& mode) {
  return eval_report(scene, tracks, mode, EvalConfig{}).dump();
}

}  // namespace

PYBIND11_MODULE(_histmap, m) {
  m.doc() = "History-map tracking and global HD-map evaluation";

  py::class_<Point2>(m, "Point2")
      .def(py::init<double, double>(), py::arg("x"), py::arg("y"))
      .def_readwrite("x", &Point2::x)
      .def_readwrite("y", &Point2::y)
      .def("__repr__", [](const Point2& p) {
        return "Point2(" + std::to_string(p.x) + ", " + std::to_string(p.y) +
               ")";
      });

  py::class_<Pose2>(m, "Pose2")
      .def(py::init<>())
      .def(py::init<double, double, double>(), py::arg("x"), py::arg("y"),
           py::arg("theta"))
      .def_readonly("translation", &Pose2::translation)
      .def_readonly("rotation", &Pose2::rotation)
      .def("apply", &Pose2::apply)
      .def("inverse", &Pose2::inverse)
      .def_static("compose", &Pose2::compose);

  py::class_<MapElement>(m, "MapElement")
      .def(py::init(&make_element), py::arg("points"), py::arg("category"),
           py::arg("score") = 1.0, py::arg("track_id") = std::nullopt)
      .def_property_readonly("category",
                             [](const MapElement& e) {
                               return to_string(e.category);
                             })
      .def_readonly("score", &MapElement::score)
      .def_readonly("track_id", &MapElement::track_id)
      .def_property_readonly("is_polygon", &MapElement::is_polygon)
      .def_property_readonly("points", [](const MapElement& e) {
        std::vector<std::pair<double, double>> out;
        for (Point2 p : e.vertices()) out.emplace_back(p.x, p.y);
        return out;
      });

  m.def(
      "transform",
      [](const MapElement& e, const Pose2& pose) { return transform(e, pose); },
      py::arg("element"), py::arg("pose"));
  m.def(
      "resample",
      [](const std::vector<std::pair<double, double>>& points, int n) {
        std::vector<Point2> pts;
        for (auto [x, y] : points) pts.push_back({x, y});
        std::vector<std::pair<double, double>> out;
        for (Point2 p : resample(Polyline(pts), n).points()) {
          out.emplace_back(p.x, p.y);
        }
        return out;
      },
      py::arg("points"), py::arg("n"));
  m.def(
      "chamfer",
      [](const std::vector<std::pair<double, double>>& a,
         const std::vector<std::pair<double, double>>& b, int n_samples) {
        std::vector<Point2> pa, pb;
        for (auto [x, y] : a) pa.push_back({x, y});
        for (auto [x, y] : b) pb.push_back({x, y});
        return chamfer(Polyline(pa), Polyline(pb), n_samples);
      },
      py::arg("a"), py::arg("b"), py::arg("n_samples") = 100);

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<>())
      .def_readwrite("height", &GridSpec::height)
      .def_readwrite("width", &GridSpec::width)
      .def_readwrite("x_min", &GridSpec::x_min)
      .def_readwrite("x_max", &GridSpec::x_max)
      .def_readwrite("y_min", &GridSpec::y_min)
      .def_readwrite("y_max", &GridSpec::y_max)
      .def_static("bev_default", &GridSpec::bev_default)
      .def("cell_center", &GridSpec::cell_center);

  py::class_<HistoryMap>(m, "HistoryMap")
      .def(py::init<const GridSpec&>())
      .def_readonly("spec", &HistoryMap::spec)
      .def_readonly("last_update_frame", &HistoryMap::last_update_frame)
      .def_property_readonly("values", &grid_values);

  py::class_<ValidMask>(m, "ValidMask")
      .def_readonly("cells", &ValidMask::cells);

  m.def("rasterize", &rasterize, py::arg("element"), py::arg("spec"),
        py::arg("value"));
  m.def("decay_update", &decay_update, py::arg("previous"), py::arg("fresh"),
        py::arg("lambda_"));
  m.def("warp", &warp, py::arg("map"), py::arg("pose_prev"),
        py::arg("pose_next"));
  m.def("valid_mask", &valid_mask, py::arg("map"), py::arg("tau_map"));
  m.def("bev_samples", [](const ValidMask& mask, const GridSpec& spec) {
    std::vector<std::pair<double, double>> out;
    for (Point2 p : bev_samples(mask, spec)) out.emplace_back(p.x, p.y);
    return out;
  });

  py::class_<TrackerConfig>(m, "TrackerConfig")
      .def(py::init<>())
      .def_readwrite("tau_det", &TrackerConfig::tau_det)
      .def_readwrite("tau_track", &TrackerConfig::tau_track)
      .def_readwrite("lambda_", &TrackerConfig::lambda)
      .def_readwrite("patience", &TrackerConfig::patience)
      .def_readwrite("additive_update", &TrackerConfig::additive_update)
      .def_readwrite("spec", &TrackerConfig::spec);

  py::class_<TrackerOutput>(m, "TrackerOutput")
      .def_readonly("born", &TrackerOutput::born)
      .def_readonly("continued", &TrackerOutput::continued)
      .def_readonly("removed", &TrackerOutput::removed)
      .def_readonly("live_count", &TrackerOutput::live_count);

  py::class_<Tracker>(m, "Tracker")
      .def(py::init<TrackerConfig>(), py::arg("config") = TrackerConfig{})
      .def(
          "step",
          [](Tracker& tracker, const std::vector<MapElement>& elements,
             const Pose2& ego_pose, int frame_index) {
            return tracker.step({elements, ego_pose, frame_index});
          },
          py::arg("elements"), py::arg("ego_pose"), py::arg("frame_index"))
      .def("live_count", &Tracker::live_count)
      .def("snapshot_json",
           [](const Tracker& t) { return t.snapshot_json().dump(); });

  m.def("global_instance_match",
        [](const std::vector<std::vector<double>>& cm,
           const std::vector<double>& scores, double tau_dis,
           double tau_valid) {
          const MatchResult r =
              global_instance_match(cost_matrix_from(cm), scores, tau_dis,
                                    tau_valid);
          std::vector<bool> covered(r.gt_covered.begin(), r.gt_covered.end());
          return py::make_tuple(r.tp, r.fp, covered);
        },
        py::arg("cost_matrix"), py::arg("scores"), py::arg("tau_dis") = 1.0,
        py::arg("tau_valid") = 2.0);

  py::class_<ScenarioSpec>(m, "ScenarioSpec")
      .def(py::init<>())
      .def_readwrite("trajectory", &ScenarioSpec::trajectory)
      .def_readwrite("frames", &ScenarioSpec::frames)
      .def_readwrite("step", &ScenarioSpec::step)
      .def_readwrite("dividers", &ScenarioSpec::dividers)
      .def_readwrite("boundaries", &ScenarioSpec::boundaries)
      .def_readwrite("pedestrians", &ScenarioSpec::pedestrians)
      .def_readwrite("grid", &ScenarioSpec::grid);

  py::class_<PerturbationModel>(m, "PerturbationModel")
      .def(py::init<>())
      .def_readwrite("jitter_sigma", &PerturbationModel::jitter_sigma)
      .def_readwrite("score_sigma", &PerturbationModel::score_sigma)
      .def_readwrite("dropout", &PerturbationModel::dropout)
      .def_readwrite("fp_rate", &PerturbationModel::fp_rate)
      .def_readwrite("id_switch", &PerturbationModel::id_switch)
      .def_readwrite("n_points", &PerturbationModel::n_points);

  py::class_<SceneFrame>(m, "SceneFrame")
      .def_readonly("frame_index", &SceneFrame::frame_index)
      .def_readonly("ego_pose", &SceneFrame::ego_pose)
      .def_readonly("gt", &SceneFrame::gt)
      .def_readonly("pred", &SceneFrame::pred);

  py::class_<Scene>(m, "Scene")
      .def_readonly("grid", &Scene::grid)
      .def_readonly("frames", &Scene::frames);

  py::class_<TrackSnapshot>(m, "TrackSnapshot")
      .def_readonly("frame_index", &TrackSnapshot::frame_index)
      .def_readonly("ego_pose", &TrackSnapshot::ego_pose)
      .def_readonly("element", &TrackSnapshot::element);

  py::class_<TrackRecord>(m, "TrackRecord")
      .def_readonly("track_id", &TrackRecord::track_id)
      .def_readonly("birth_frame", &TrackRecord::birth_frame)
      .def_readonly("snapshots", &TrackRecord::snapshots)
      .def_property_readonly("category", [](const TrackRecord& t) {
        return to_string(t.category);
      });

  m.def("simulate", &simulate, py::arg("spec"), py::arg("model"),
        py::arg("seed"));
  m.def(
      "run_tracker",
      [](const Scene& scene, const TrackerConfig& config) {
        return track_scene(scene, config);
      },
      py::arg("scene"), py::arg("config") = TrackerConfig{});
  m.def("eval_frame_json", [](const Scene& scene,
                              const std::vector<TrackRecord>& tracks) {
    return eval_json(scene, tracks, "frame");
  });
  m.def("eval_global_json", [](const Scene& scene,
                               const std::vector<TrackRecord>& tracks) {
    return eval_json(scene, tracks, "global");
  });
  m.def("write_scene", &write_scene, py::arg("scene"), py::arg("path"));
  m.def("read_scene", &read_scene, py::arg("path"));

  m.attr("__version__") = "0.1.0";
}
