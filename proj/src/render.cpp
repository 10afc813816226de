#include "histmap/render.hpp"

#include <fstream>

#include "histmap/parallel.hpp"

namespace histmap {
namespace {

const char* category_color(Category c) {
  switch (c) {
    case Category::kPedestrian:
      return "#e69f00";
    case Category::kDivider:
      return "#d62728";
    case Category::kBoundary:
      return "#2ca02c";
  }
  return "#000000";
}

void svg_path(std::ofstream& out, const std::vector<Point2>& pts,
              const GridSpec& grid, double scale, const std::string& color,
              bool closed) {
  out << "  <" << (closed ? "polygon" : "polyline") << " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double px = (pts[i].x - grid.x_min) * scale;
    // SVG y axis points down; the world y axis points up.
    const double py = (grid.y_max - pts[i].y) * scale;
    out << (i ? " " : "") << px << "," << py;
  }
  out << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
}

}  // namespace

std::string track_color(std::int64_t track_id) {
  // SplitMix finalizer over the id; hue from the low bits.
  std::uint64_t z = static_cast<std::uint64_t>(track_id) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  const unsigned hue = static_cast<unsigned>(z % 360);
  return "hsl(" + std::to_string(hue) + ",80%,45%)";
}

void render_scene(const Scene& scene,
                  const std::optional<std::vector<TrackRecord>>& tracks,
                  const EvalConfig& cfg,
                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  // Shared global grid over everything in view.
  std::vector<Point2> anchors;
  std::vector<LocalFrame> frames;
  for (const SceneFrame& frame : scene.frames) {
    anchors.push_back(frame.ego_pose.translation);
    LocalFrame lf{frame.frame_index, frame.ego_pose, frame.gt};
    for (const MapElement& e : frame.gt) {
      for (Point2 p : e.vertices()) anchors.push_back(frame.ego_pose.apply(p));
    }
    frames.push_back(std::move(lf));
  }
  if (tracks) {
    for (const TrackRecord& track : *tracks) {
      for (const TrackSnapshot& snap : track.snapshots) {
        for (Point2 p : snap.element.vertices()) {
          anchors.push_back(snap.ego_pose.apply(p));
        }
      }
    }
  }

  GridSpec grid;
  if (!anchors.empty()) {
    grid = make_global_grid(anchors, cfg);
  } else {
    grid = scene.grid;  // empty scene: blank canvas of the configured size
  }

  const double scale = 2.0;  // svg pixels per meter
  const double width = (grid.x_max - grid.x_min) * scale;
  const double height = (grid.y_max - grid.y_min) * scale;

  std::ofstream svg(out_dir / "global_map.svg");
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  // Ground truth: every local observation drawn in its global place.
  for (const SceneFrame& frame : scene.frames) {
    for (const MapElement& e : frame.gt) {
      std::vector<Point2> global_pts;
      global_pts.reserve(e.vertices().size());
      for (Point2 p : e.vertices()) global_pts.push_back(frame.ego_pose.apply(p));
      svg_path(svg, global_pts, grid, scale, category_color(e.category),
               e.is_polygon());
    }
  }

  // Merged predictions on top, one path per track.
  if (tracks && !tracks->empty()) {
    const GlobalMap merged = merge_predictions(*tracks, grid, cfg);
    for (const GlobalInstance& inst : merged.instances) {
      if (!inst.element) continue;
      svg_path(svg, inst.element->vertices(), grid, scale,
               track_color(inst.source_id), inst.element->is_polygon());
      write_pgm(inst.raster,
                out_dir / ("track_" + std::to_string(inst.source_id) + ".pgm"));
    }
  }
  svg << "</svg>\n";
  svg.close();

  if (!frames.empty()) {
    bool any_gt = false;
    bool ids_ok = true;
    for (const LocalFrame& lf : frames) {
      any_gt = any_gt || !lf.gt.empty();
      for (const MapElement& e : lf.gt) ids_ok = ids_ok && e.track_id.has_value();
    }
    if (any_gt && ids_ok) {
      const GlobalMap gt_map = raster_global_gt(frames, grid, cfg);
      for (Category category : kAllCategories) {
        HistoryMap layer(grid);
        for (const GlobalInstance& inst : gt_map.instances) {
          if (inst.category != category) continue;
          for (std::size_t i = 0; i < layer.cells.size(); ++i) {
            layer.cells[i] = std::max(layer.cells[i], inst.raster.cells[i]);
          }
        }
        write_pgm(layer, out_dir / ("global_gt_" + to_string(category) + ".pgm"));
      }
    }
  }
}

}  // namespace histmap
