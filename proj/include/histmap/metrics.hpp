#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histmap/grid.hpp"
#include "histmap/tracker.hpp"

namespace histmap {

struct EvalConfig {
  std::vector<double> frame_thresholds{0.5, 1.0, 1.5};   // meters
  std::vector<double> tau_dis_set{0.25, 0.5, 0.75, 1.0};  // meters
  double tau_valid = 2.0;                                  // meters
  std::vector<double> iou_thresholds{0.25, 0.5, 0.75};
  int chamfer_samples = 100;
  int fit_points = 100;          // FPS budget per global instance
  double global_resolution = 0.3;  // meters per global grid cell
  double global_margin = 15.0;     // bounding-box inflation, meters
  double chain_gap_cells = 5.0;    // chain split threshold in cells
  bool one_directional_cm = false;  // CM uses pred->gt only when set

  void validate() const;
  nlohmann::json to_json() const;
  static EvalConfig from_json(const nlohmann::json& j);
};

/// N_pred x N_gt matrix of average point distances per instance pair.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols);

  double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  /// Row minimum; +inf for an empty row (no ground truth).
  double row_min(std::size_t i) const;
};

/// Per-prediction TP counts (a prediction may cover several ground truths),
/// FP flags (1 = valid false positive, 0 = invalid or matched), and the
/// per-ground-truth coverage.
struct MatchResult {
  std::vector<int> tp;
  std::vector<int> fp;
  std::vector<bool> gt_covered;
};

/// Greedy global matcher. Predictions are visited by descending average
/// score; a prediction whose row minimum is within tau_dis covers every
/// still-uncovered ground truth within tau_dis (one TP each); otherwise its
/// row minimum decides between a valid FP (min <= tau_dis + tau_valid) and an
/// invalid FP (min beyond that, flag stays 0 and the prediction is excluded
/// from precision).
MatchResult global_instance_match(const CostMatrix& cm,
                                  std::span<const double> scores,
                                  double tau_dis, double tau_valid);

/// One sorted (tp, fp) sequence -> all-point average precision in [0, 1].
/// Entries with tp == 0 and fp == 0 do not enter the precision denominator.
double average_precision(std::span<const int> tp_counts,
                         std::span<const int> fp_flags, std::size_t n_gt);

struct FrameCategoryResult {
  bool skipped = false;  // no ground truth and no predictions
  std::map<double, double> ap_percent;  // by matching threshold
};

struct FrameReport {
  int frame_index = 0;
  std::map<Category, FrameCategoryResult> categories;
  bool skipped = false;       // every category skipped
  double map_percent = 0.0;   // mean over categories and thresholds
};

/// Per-frame Chamfer mAP: greedy one-to-one matching by descending score
/// against the nearest uncovered ground truth within each threshold.
FrameReport frame_map(std::span<const MapElement> preds,
                      std::span<const MapElement> gts, const EvalConfig& cfg,
                      int frame_index = 0,
                      std::vector<nlohmann::json>* traces = nullptr);

/// One merged global instance: its raster on the shared global grid
/// (boundary trace for polylines, interior fill for polygons) plus the
/// fitted vector geometry. The element is absent only when a polygon's
/// boundary could not be extracted as a simple ring; the fill raster is the
/// authoritative representation for the IoU metric either way.
struct GlobalInstance {
  Category category = Category::kDivider;
  std::optional<MapElement> element;
  HistoryMap raster;
  double mean_score = 1.0;
  std::int64_t source_id = 0;
  bool from_gt = false;
};

struct GlobalMap {
  GridSpec grid;
  std::vector<GlobalInstance> instances;
};

/// Frame input for the global ground-truth path: ego pose plus local
/// elements whose track_id fields carry the stable global instance ids.
struct LocalFrame {
  int frame_index = 0;
  Pose2 ego_pose;
  std::vector<MapElement> gt;
};

/// Global grid covering every supplied point plus the margin, at the
/// configured resolution.
GridSpec make_global_grid(std::span<const Point2> points,
                          const EvalConfig& cfg);

/// Transforms each frame's local ground truth into the global frame, unions
/// the per-instance rasters, and fits one vector element per instance.
GlobalMap raster_global_gt(std::span<const LocalFrame> frames,
                           const GridSpec& grid, const EvalConfig& cfg);

/// Same construction over tracked predictions: per track, every snapshot is
/// rasterized in global coordinates, the union raster is sampled with FPS
/// and chained into one polyline (polygons keep their filled union and an
/// extracted boundary ring). mean_score averages the snapshot scores.
GlobalMap merge_predictions(std::span<const TrackRecord> tracks,
                            const GridSpec& grid, const EvalConfig& cfg);

/// Farthest point sampling over occupied cell centers (seed: lowest
/// row-major cell), then greedy nearest-neighbor chaining from the point
/// farthest from the sample centroid. Chains split at gaps beyond
/// gap_cells * max cell side; the longest chain wins.
Polyline fit_polyline(const HistoryMap& raster, int n_points,
                      double gap_cells = 5.0);

/// Raster IoU of two instance fills on a shared grid.
double raster_iou(const HistoryMap& a, const HistoryMap& b);

struct GlobalCategoryResult {
  bool skipped = false;  // no ground truth of this category
  std::map<double, double> ap_percent;  // by tau_dis or IoU threshold
  double mean_percent = 0.0;
};

/// Chamfer-based AP for one polyline category over the tau_dis set.
GlobalCategoryResult ap_polyline_global(
    const GlobalMap& pred, const GlobalMap& gt, Category category,
    const EvalConfig& cfg, std::vector<nlohmann::json>* traces = nullptr);

/// Raster-IoU AP for pedestrian polygons over the IoU thresholds.
GlobalCategoryResult ap_polygon_global(
    const GlobalMap& pred, const GlobalMap& gt, const EvalConfig& cfg,
    std::vector<nlohmann::json>* traces = nullptr);

struct GlobalReport {
  std::map<Category, GlobalCategoryResult> categories;
  double g_map_percent = 0.0;
};

/// Mean of the polygon AP (pedestrian) and the polyline APs (divider,
/// boundary); categories without ground truth are excluded. Throws when no
/// category has ground truth.
GlobalReport g_map(const GlobalMap& pred, const GlobalMap& gt,
                   const EvalConfig& cfg,
                   std::vector<nlohmann::json>* traces = nullptr);

}  // namespace histmap
