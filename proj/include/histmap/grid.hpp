#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "histmap/geometry.hpp"

namespace histmap {

/// Fixed-size BEV grid over an ego-centric extent. Rows index y, columns
/// index x; row 0 sits at y_min. Cell (r, c) covers
/// [x_min + c*cw, x_min + (c+1)*cw) x [y_min + r*ch, y_min + (r+1)*ch).
struct GridSpec {
  int height = 200;
  int width = 100;
  double x_min = -15.0;
  double x_max = 15.0;
  double y_min = -30.0;
  double y_max = 30.0;

  /// 200x100 cells over a 30 m x 60 m extent (0.3 m cells), forward = +y.
  static GridSpec bev_default() { return GridSpec{}; }

  void validate() const;

  double cell_width() const { return (x_max - x_min) / width; }
  double cell_height() const { return (y_max - y_min) / height; }
  Point2 cell_center(int row, int col) const {
    return {x_min + (col + 0.5) * cell_width(),
            y_min + (row + 0.5) * cell_height()};
  }
  bool contains(int row, int col) const {
    return row >= 0 && row < height && col >= 0 && col < width;
  }
  /// Cell containing p, or nullopt when p is outside the extent.
  std::optional<std::pair<int, int>> cell_of(Point2 p) const;

  bool operator==(const GridSpec&) const = default;
};

/// Per-instance confidence grid. All cells stay in [0, 1].
struct HistoryMap {
  GridSpec spec;
  std::vector<double> cells;  // row-major height x width
  int last_update_frame = -1;

  HistoryMap() : cells(static_cast<std::size_t>(spec.height) * spec.width, 0.0) {}
  explicit HistoryMap(const GridSpec& s);

  double& at(int row, int col) {
    return cells[static_cast<std::size_t>(row) * spec.width + col];
  }
  double at(int row, int col) const {
    return cells[static_cast<std::size_t>(row) * spec.width + col];
  }
  std::size_t count_above(double threshold) const;
  double max_value() const;
};

/// Cells whose confidence exceeded the map threshold; row-major order.
struct ValidMask {
  GridSpec spec;
  std::vector<std::pair<int, int>> cells;
};

/// Traces the element geometry onto a fresh grid at a constant confidence.
/// Polylines and polygon rings are drawn one cell wide by sampling every
/// segment at half-cell steps; anything outside the extent is clipped.
HistoryMap rasterize(const MapElement& element, const GridSpec& spec,
                     double value);

/// Scanline interior fill of a polygon (cell centers inside the ring by the
/// even-odd rule). Used by the raster-IoU metric, not by history maps.
HistoryMap rasterize_fill(const Polygon& polygon, const GridSpec& spec,
                          double value);

/// out = max(lambda * previous, fresh) per cell.
HistoryMap decay_update(const HistoryMap& previous, const HistoryMap& fresh,
                        double lambda);

/// out = clamp(lambda * previous + fresh, 0, 1) per cell. Experimental
/// combinator selectable through TrackerConfig.
HistoryMap decay_update_additive(const HistoryMap& previous,
                                 const HistoryMap& fresh, double lambda);

/// Re-expresses a grid in a new ego frame: every output cell center is
/// mapped through pose_next, then inverse pose_prev, and sampled from the
/// source grid with bilinear interpolation (0 outside). Source coordinates
/// within 1e-9 cells of the lattice snap onto it, so whole-cell translations
/// shift the grid exactly.
HistoryMap warp(const HistoryMap& map, const Pose2& pose_prev,
                const Pose2& pose_next);

/// Cells with value strictly greater than tau_map.
ValidMask valid_mask(const HistoryMap& map, double tau_map);

/// Binary PGM (P5, maxval 255, round(255 * confidence)) plus a JSON sidecar
/// (<path>.json) describing the grid.
void write_pgm(const HistoryMap& map, const std::filesystem::path& path);

}  // namespace histmap
