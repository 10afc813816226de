#include "histmap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "histmap/parallel.hpp"

namespace histmap {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> order_by_score_desc(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  return order;
}

double mean_of(const std::map<double, double>& table) {
  if (table.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [key, value] : table) sum += value;
  return sum / static_cast<double>(table.size());
}

// Union of per-frame observations of one instance, rasterized on the global
// grid. Polygons accumulate their interior fill, polylines their traced
// boundary.
HistoryMap union_raster(const std::vector<MapElement>& observations,
                        const GridSpec& grid) {
  HistoryMap acc(grid);
  for (const MapElement& obs : observations) {
    const HistoryMap layer = obs.is_polygon()
                                 ? rasterize_fill(obs.polygon(), grid, 1.0)
                                 : rasterize(obs, grid, 1.0);
    for (std::size_t i = 0; i < acc.cells.size(); ++i) {
      acc.cells[i] = std::max(acc.cells[i], layer.cells[i]);
    }
  }
  return acc;
}

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return {};
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 &&
           (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0.0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower &&
           (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0.0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

void drop_collinear(std::vector<Point2>& ring) {
  if (ring.size() < 4) return;
  std::vector<Point2> out;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 prev = ring[(i + n - 1) % n];
    const Point2 cur = ring[i];
    const Point2 next = ring[(i + 1) % n];
    if (std::abs((cur - prev).cross(next - prev)) > 1e-12) out.push_back(cur);
  }
  if (out.size() >= 3) ring = std::move(out);
}

// Outer boundary of the occupied region via Moore neighbor tracing; falls
// back to the convex hull of occupied cell centers when the traced ring is
// not a simple polygon.
std::optional<Polygon> extract_boundary_ring(const HistoryMap& fill) {
  const GridSpec& spec = fill.spec;
  int sr = -1, sc = -1;
  for (int r = 0; r < spec.height && sr < 0; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (fill.at(r, c) > 0.0) {
        sr = r;
        sc = c;
        break;
      }
    }
  }
  if (sr < 0) return std::nullopt;

  const auto occupied = [&](int r, int c) {
    return spec.contains(r, c) && fill.at(r, c) > 0.0;
  };
  // Clockwise Moore neighborhood, starting west.
  static constexpr int dr[8] = {0, -1, -1, -1, 0, 1, 1, 1};
  static constexpr int dc[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

  std::vector<std::pair<int, int>> boundary;
  int cr = sr, cc = sc;
  int entry = 0;  // direction of the backtrack cell relative to current
  const std::size_t guard =
      4 * static_cast<std::size_t>(spec.height) * spec.width + 16;
  for (std::size_t steps = 0; steps < guard; ++steps) {
    boundary.emplace_back(cr, cc);
    int found = -1;
    for (int k = 1; k <= 8; ++k) {
      const int dir = (entry + k) % 8;
      if (occupied(cr + dr[dir], cc + dc[dir])) {
        found = dir;
        break;
      }
    }
    if (found < 0) break;  // isolated cell
    cr += dr[found];
    cc += dc[found];
    entry = (found + 5) % 8;  // backtrack points at the previous cell
    if (cr == sr && cc == sc) break;
  }

  std::vector<Point2> ring;
  ring.reserve(boundary.size());
  for (auto [r, c] : boundary) {
    const Point2 p = spec.cell_center(r, c);
    if (ring.empty() || !(ring.back() == p)) ring.push_back(p);
  }
  while (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
  drop_collinear(ring);
  if (ring.size() >= 3) {
    try {
      return Polygon(ring);
    } catch (const std::invalid_argument&) {
      // pinched or overlapping trace; fall through to the hull
    }
  }
  std::vector<Point2> centers;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (fill.at(r, c) > 0.0) centers.push_back(spec.cell_center(r, c));
    }
  }
  std::vector<Point2> hull = convex_hull(std::move(centers));
  if (hull.size() < 3) return std::nullopt;
  try {
    return Polygon(hull);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

std::optional<GlobalInstance> build_instance(
    const std::vector<MapElement>& observations, Category category,
    std::int64_t source_id, double mean_score, bool from_gt,
    const GridSpec& grid, const EvalConfig& cfg) {
  GlobalInstance instance;
  instance.category = category;
  instance.raster = union_raster(observations, grid);
  instance.mean_score = mean_score;
  instance.source_id = source_id;
  instance.from_gt = from_gt;
  if (category_is_polygon(category)) {
    if (instance.raster.count_above(0.0) == 0) return std::nullopt;
    if (auto ring = extract_boundary_ring(instance.raster)) {
      instance.element = MapElement(*ring, category, mean_score, source_id);
    }
  } else {
    if (instance.raster.count_above(0.0) < 2) return std::nullopt;
    instance.element =
        MapElement(fit_polyline(instance.raster, cfg.fit_points,
                                cfg.chain_gap_cells),
                   category, mean_score, source_id);
  }
  return instance;
}

}  // namespace

void EvalConfig::validate() const {
  const auto ascending_positive = [](const std::vector<double>& v) {
    if (v.empty()) return false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0)) return false;
      if (i > 0 && !(v[i] > v[i - 1])) return false;
    }
    return true;
  };
  if (!ascending_positive(frame_thresholds) ||
      !ascending_positive(tau_dis_set) || !ascending_positive(iou_thresholds)) {
    throw std::invalid_argument("EvalConfig: malformed threshold set");
  }
  if (tau_valid < 0.0) throw std::invalid_argument("EvalConfig: tau_valid < 0");
  if (chamfer_samples < 2 || fit_points < 2) {
    throw std::invalid_argument("EvalConfig: sampling counts too small");
  }
  if (!(global_resolution > 0.0) || global_margin < 0.0 ||
      !(chain_gap_cells > 0.0)) {
    throw std::invalid_argument("EvalConfig: malformed raster parameters");
  }
}

nlohmann::json EvalConfig::to_json() const {
  return {{"frame_thresholds", frame_thresholds},
          {"tau_dis_set", tau_dis_set},
          {"tau_valid", tau_valid},
          {"iou_thresholds", iou_thresholds},
          {"chamfer_samples", chamfer_samples},
          {"fit_points", fit_points},
          {"global_resolution", global_resolution},
          {"global_margin", global_margin},
          {"chain_gap_cells", chain_gap_cells},
          {"one_directional_cm", one_directional_cm}};
}

EvalConfig EvalConfig::from_json(const nlohmann::json& j) {
  EvalConfig cfg;
  if (j.contains("frame_thresholds")) {
    cfg.frame_thresholds = j["frame_thresholds"].get<std::vector<double>>();
  }
  if (j.contains("tau_dis_set")) {
    cfg.tau_dis_set = j["tau_dis_set"].get<std::vector<double>>();
  }
  if (j.contains("tau_valid")) cfg.tau_valid = j["tau_valid"].get<double>();
  if (j.contains("iou_thresholds")) {
    cfg.iou_thresholds = j["iou_thresholds"].get<std::vector<double>>();
  }
  if (j.contains("chamfer_samples")) {
    cfg.chamfer_samples = j["chamfer_samples"].get<int>();
  }
  if (j.contains("fit_points")) cfg.fit_points = j["fit_points"].get<int>();
  if (j.contains("global_resolution")) {
    cfg.global_resolution = j["global_resolution"].get<double>();
  }
  if (j.contains("global_margin")) {
    cfg.global_margin = j["global_margin"].get<double>();
  }
  if (j.contains("chain_gap_cells")) {
    cfg.chain_gap_cells = j["chain_gap_cells"].get<double>();
  }
  if (j.contains("one_directional_cm")) {
    cfg.one_directional_cm = j["one_directional_cm"].get<bool>();
  }
  cfg.validate();
  return cfg;
}

CostMatrix::CostMatrix(std::size_t r, std::size_t c)
    : rows(r), cols(c), values(r * c, 0.0) {}

double CostMatrix::row_min(std::size_t i) const {
  double best = kInf;
  for (std::size_t j = 0; j < cols; ++j) best = std::min(best, at(i, j));
  return best;
}

MatchResult global_instance_match(const CostMatrix& cm,
                                  std::span<const double> scores,
                                  double tau_dis, double tau_valid) {
  if (scores.size() != cm.rows) {
    throw std::invalid_argument("global_instance_match: score/row mismatch");
  }
  if (!(tau_dis > 0.0) || tau_valid < 0.0) {
    throw std::invalid_argument("global_instance_match: bad thresholds");
  }
  for (double v : cm.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("global_instance_match: bad cost entry");
    }
  }

  MatchResult result;
  result.tp.assign(cm.rows, 0);
  result.fp.assign(cm.rows, 0);
  result.gt_covered.assign(cm.cols, false);

  for (std::size_t i : order_by_score_desc(scores)) {
    const double row_min = cm.row_min(i);
    if (row_min <= tau_dis) {
      for (std::size_t j = 0; j < cm.cols; ++j) {
        if (cm.at(i, j) <= tau_dis && !result.gt_covered[j]) {
          result.gt_covered[j] = true;
          result.tp[i] += 1;  // one prediction may cover several short GTs
        }
      }
    } else if (row_min > tau_dis + tau_valid) {
      result.fp[i] = 0;  // perceived but unannotated region: not penalized
    } else {
      result.fp[i] = 1;
    }
  }
  return result;
}

double average_precision(std::span<const int> tp_counts,
                         std::span<const int> fp_flags, std::size_t n_gt) {
  if (tp_counts.size() != fp_flags.size()) {
    throw std::invalid_argument("average_precision: length mismatch");
  }
  if (n_gt == 0) return 0.0;
  struct PrPoint {
    long cum_tp;
    long cum_fp;
    int tp_step;
  };
  std::vector<PrPoint> points;
  long cum_tp = 0, cum_fp = 0;
  for (std::size_t i = 0; i < tp_counts.size(); ++i) {
    if (tp_counts[i] == 0 && fp_flags[i] == 0) continue;
    cum_tp += tp_counts[i];
    cum_fp += fp_flags[i];
    points.push_back({cum_tp, cum_fp, tp_counts[i]});
  }
  // Monotone precision envelope from the right, then the all-point area:
  // each TP step advances recall by tp/n_gt at the enveloped precision.
  double sum = 0.0;
  double env = 0.0;
  for (std::size_t k = points.size(); k-- > 0;) {
    const double precision =
        static_cast<double>(points[k].cum_tp) /
        static_cast<double>(points[k].cum_tp + points[k].cum_fp);
    env = std::max(env, precision);
    sum += static_cast<double>(points[k].tp_step) * env;
  }
  return sum / static_cast<double>(n_gt);
}

FrameReport frame_map(std::span<const MapElement> preds,
                      std::span<const MapElement> gts, const EvalConfig& cfg,
                      int frame_index, std::vector<nlohmann::json>* traces) {
  cfg.validate();
  FrameReport report;
  report.frame_index = frame_index;

  double category_sum = 0.0;
  int category_count = 0;
  for (Category category : kAllCategories) {
    std::vector<std::size_t> pi, gi;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i].category == category) pi.push_back(i);
    }
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (gts[j].category == category) gi.push_back(j);
    }
    FrameCategoryResult& slot = report.categories[category];
    if (pi.empty() && gi.empty()) {
      slot.skipped = true;
      continue;
    }

    std::vector<double> dist(pi.size() * gi.size(), 0.0);
    parallel_for(pi.size(), [&](std::size_t a) {
      for (std::size_t b = 0; b < gi.size(); ++b) {
        dist[a * gi.size() + b] = chamfer_elements(
            preds[pi[a]], gts[gi[b]], cfg.chamfer_samples);
      }
    });

    std::vector<double> scores;
    scores.reserve(pi.size());
    for (std::size_t a : pi) scores.push_back(preds[a].score);
    const std::vector<std::size_t> order = order_by_score_desc(scores);

    for (double threshold : cfg.frame_thresholds) {
      std::vector<bool> covered(gi.size(), false);
      std::vector<int> tp(order.size(), 0), fp(order.size(), 0);
      nlohmann::json matches = nlohmann::json::array();
      for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const std::size_t a = order[rank];
        double best = kInf;
        std::size_t best_j = gi.size();
        for (std::size_t b = 0; b < gi.size(); ++b) {
          if (covered[b]) continue;
          if (dist[a * gi.size() + b] < best) {
            best = dist[a * gi.size() + b];
            best_j = b;
          }
        }
        if (best_j < gi.size() && best <= threshold) {
          covered[best_j] = true;
          tp[rank] = 1;
        } else {
          fp[rank] = 1;
        }
        if (traces) {
          matches.push_back(
              {{"pred", static_cast<int>(pi[a])},
               {"score", preds[pi[a]].score},
               {"gt", tp[rank] ? static_cast<int>(gi[best_j]) : -1},
               {"distance", std::isfinite(best) ? best : -1.0}});
        }
      }
      slot.ap_percent[threshold] =
          100.0 * average_precision(tp, fp, gi.size());
      if (traces) {
        traces->push_back({{"kind", "frame"},
                           {"frame_index", frame_index},
                           {"category", to_string(category)},
                           {"threshold", threshold},
                           {"matches", std::move(matches)}});
      }
    }
    category_sum += mean_of(slot.ap_percent);
    category_count += 1;
  }

  if (category_count == 0) {
    report.skipped = true;
  } else {
    report.map_percent = category_sum / static_cast<double>(category_count);
  }
  return report;
}

GridSpec make_global_grid(std::span<const Point2> points,
                          const EvalConfig& cfg) {
  if (points.empty()) {
    throw std::invalid_argument("make_global_grid: no points");
  }
  double x_lo = kInf, x_hi = -kInf, y_lo = kInf, y_hi = -kInf;
  for (Point2 p : points) {
    x_lo = std::min(x_lo, p.x);
    x_hi = std::max(x_hi, p.x);
    y_lo = std::min(y_lo, p.y);
    y_hi = std::max(y_hi, p.y);
  }
  GridSpec grid;
  grid.x_min = x_lo - cfg.global_margin;
  grid.y_min = y_lo - cfg.global_margin;
  const double res = cfg.global_resolution;
  grid.width = std::max(
      1, static_cast<int>(std::ceil((x_hi + cfg.global_margin - grid.x_min) / res)));
  grid.height = std::max(
      1, static_cast<int>(std::ceil((y_hi + cfg.global_margin - grid.y_min) / res)));
  grid.x_max = grid.x_min + grid.width * res;
  grid.y_max = grid.y_min + grid.height * res;
  grid.validate();
  return grid;
}

GlobalMap raster_global_gt(std::span<const LocalFrame> frames,
                           const GridSpec& grid, const EvalConfig& cfg) {
  cfg.validate();
  if (frames.empty()) {
    throw std::invalid_argument("raster_global_gt: empty sequence");
  }
  std::map<std::int64_t, std::pair<Category, std::vector<MapElement>>> groups;
  for (const LocalFrame& frame : frames) {
    for (const MapElement& element : frame.gt) {
      if (!element.track_id) {
        throw std::invalid_argument(
            "raster_global_gt: ground truth element without a global id");
      }
      auto& slot = groups[*element.track_id];
      if (slot.second.empty()) {
        slot.first = element.category;
      } else if (slot.first != element.category) {
        throw std::invalid_argument(
            "raster_global_gt: inconsistent category for gt id " +
            std::to_string(*element.track_id));
      }
      slot.second.push_back(transform(element, frame.ego_pose));
    }
  }

  std::vector<std::int64_t> ids;
  ids.reserve(groups.size());
  for (const auto& [id, group] : groups) ids.push_back(id);

  std::vector<std::optional<GlobalInstance>> slots(ids.size());
  parallel_for(ids.size(), [&](std::size_t i) {
    const auto& [category, observations] = groups.at(ids[i]);
    slots[i] = build_instance(observations, category, ids[i], 1.0, true,
                              grid, cfg);
  });

  GlobalMap out{grid, {}};
  for (auto& slot : slots) {
    if (slot) out.instances.push_back(std::move(*slot));
  }
  return out;
}

GlobalMap merge_predictions(std::span<const TrackRecord> tracks,
                            const GridSpec& grid, const EvalConfig& cfg) {
  cfg.validate();
  std::vector<std::optional<GlobalInstance>> slots(tracks.size());
  parallel_for(tracks.size(), [&](std::size_t i) {
    const TrackRecord& track = tracks[i];
    if (track.snapshots.empty()) return;
    std::vector<MapElement> observations;
    observations.reserve(track.snapshots.size());
    double score_sum = 0.0;
    for (const TrackSnapshot& snap : track.snapshots) {
      observations.push_back(transform(snap.element, snap.ego_pose));
      score_sum += snap.element.score;
    }
    const double mean_score =
        score_sum / static_cast<double>(track.snapshots.size());
    slots[i] = build_instance(observations, track.category, track.track_id,
                              mean_score, false, grid, cfg);
  });

  GlobalMap out{grid, {}};
  for (auto& slot : slots) {
    if (slot) out.instances.push_back(std::move(*slot));
  }
  return out;
}

Polyline fit_polyline(const HistoryMap& raster, int n_points,
                      double gap_cells) {
  if (n_points < 2) throw std::invalid_argument("fit_polyline: n_points < 2");
  const GridSpec& spec = raster.spec;
  std::vector<Point2> centers;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (raster.at(r, c) > 0.0) centers.push_back(spec.cell_center(r, c));
    }
  }
  if (centers.size() < 2) {
    throw std::invalid_argument("fit_polyline: fewer than 2 occupied cells");
  }

  // Farthest point sampling, seeded at the lowest row-major occupied cell.
  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(n_points), centers.size());
  std::vector<double> min_dist2(centers.size(), kInf);
  std::vector<std::size_t> selected;
  selected.reserve(k);
  std::size_t cur = 0;
  for (std::size_t i = 0; i < k; ++i) {
    selected.push_back(cur);
    for (std::size_t j = 0; j < centers.size(); ++j) {
      min_dist2[j] =
          std::min(min_dist2[j], (centers[j] - centers[cur]).squared_norm());
    }
    if (i + 1 < k) {
      std::size_t best = 0;
      double best_d = -1.0;
      for (std::size_t j = 0; j < centers.size(); ++j) {
        if (min_dist2[j] > best_d) {
          best_d = min_dist2[j];
          best = j;
        }
      }
      cur = best;
    }
  }

  std::vector<Point2> pts;
  pts.reserve(selected.size());
  for (std::size_t idx : selected) pts.push_back(centers[idx]);

  // Order by greedy nearest-neighbor chaining from the most extremal point;
  // gaps beyond the threshold split the chain and the longest piece wins.
  Point2 centroid{0.0, 0.0};
  for (Point2 p : pts) centroid = centroid + p;
  centroid = centroid * (1.0 / static_cast<double>(pts.size()));
  std::size_t start = 0;
  double best_d = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = (pts[i] - centroid).squared_norm();
    if (d > best_d) {
      best_d = d;
      start = i;
    }
  }

  const double gap =
      gap_cells * std::max(spec.cell_width(), spec.cell_height());
  std::vector<bool> visited(pts.size(), false);
  std::vector<std::vector<Point2>> chains;
  std::vector<Point2> chain{pts[start]};
  visited[start] = true;
  std::size_t tail = start;
  for (std::size_t done = 1; done < pts.size(); ++done) {
    std::size_t nearest = pts.size();
    double nearest_d = kInf;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (visited[i]) continue;
      const double d = (pts[i] - pts[tail]).squared_norm();
      if (d < nearest_d) {
        nearest_d = d;
        nearest = i;
      }
    }
    if (std::sqrt(nearest_d) > gap) {
      chains.push_back(std::move(chain));
      chain = {pts[nearest]};
    } else {
      chain.push_back(pts[nearest]);
    }
    visited[nearest] = true;
    tail = nearest;
  }
  chains.push_back(std::move(chain));

  const auto arc_length = [](const std::vector<Point2>& c) {
    double total = 0.0;
    for (std::size_t i = 1; i < c.size(); ++i) {
      total += distance(c[i - 1], c[i]);
    }
    return total;
  };
  std::size_t best_chain = 0;
  for (std::size_t i = 1; i < chains.size(); ++i) {
    if (chains[i].size() > chains[best_chain].size() ||
        (chains[i].size() == chains[best_chain].size() &&
         arc_length(chains[i]) > arc_length(chains[best_chain]))) {
      best_chain = i;
    }
  }
  if (chains[best_chain].size() >= 2) {
    return Polyline(chains[best_chain]);
  }
  // All chains degenerated to single points (scattered dust): fall back to
  // the full visiting order so the caller still gets a usable polyline.
  std::vector<Point2> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  return Polyline(all);
}

double raster_iou(const HistoryMap& a, const HistoryMap& b) {
  if (!(a.spec == b.spec)) {
    throw std::invalid_argument("raster_iou: grid mismatch");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const bool in_a = a.cells[i] > 0.0;
    const bool in_b = b.cells[i] > 0.0;
    inter += in_a && in_b;
    uni += in_a || in_b;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

GlobalCategoryResult ap_polyline_global(const GlobalMap& pred,
                                        const GlobalMap& gt,
                                        Category category,
                                        const EvalConfig& cfg,
                                        std::vector<nlohmann::json>* traces) {
  cfg.validate();
  if (category_is_polygon(category)) {
    throw std::invalid_argument("ap_polyline_global: polygon category");
  }
  std::vector<const GlobalInstance*> pi, gi;
  for (const GlobalInstance& inst : pred.instances) {
    if (inst.category == category && inst.element) pi.push_back(&inst);
  }
  for (const GlobalInstance& inst : gt.instances) {
    if (inst.category == category && inst.element) gi.push_back(&inst);
  }

  GlobalCategoryResult result;
  if (gi.empty()) {
    result.skipped = true;
    return result;
  }

  CostMatrix cm(pi.size(), gi.size());
  parallel_for(pi.size(), [&](std::size_t a) {
    for (std::size_t b = 0; b < gi.size(); ++b) {
      const Polyline& pa = pi[a]->element->polyline();
      const Polyline& pb = gi[b]->element->polyline();
      if (cfg.one_directional_cm) {
        const Polyline ra = resample(pa, cfg.chamfer_samples);
        const Polyline rb = resample(pb, cfg.chamfer_samples);
        cm.at(a, b) = directed_chamfer(ra.points(), rb.points());
      } else {
        cm.at(a, b) = chamfer(pa, pb, cfg.chamfer_samples);
      }
    }
  });

  std::vector<double> scores;
  scores.reserve(pi.size());
  for (const GlobalInstance* inst : pi) scores.push_back(inst->mean_score);
  const std::vector<std::size_t> order = order_by_score_desc(scores);

  for (double tau_dis : cfg.tau_dis_set) {
    const MatchResult mr =
        global_instance_match(cm, scores, tau_dis, cfg.tau_valid);
    std::vector<int> tp(order.size()), fp(order.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      tp[rank] = mr.tp[order[rank]];
      fp[rank] = mr.fp[order[rank]];
    }
    result.ap_percent[tau_dis] =
        100.0 * average_precision(tp, fp, gi.size());
    if (traces) {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const std::size_t a = order[rank];
        rows.push_back({{"track_id", pi[a]->source_id},
                        {"score", scores[a]},
                        {"tp", mr.tp[a]},
                        {"fp", mr.fp[a]},
                        {"row_min", pi.empty() ? -1.0 : cm.row_min(a)}});
      }
      nlohmann::json covered = nlohmann::json::array();
      for (std::size_t b = 0; b < gi.size(); ++b) {
        if (mr.gt_covered[b]) covered.push_back(gi[b]->source_id);
      }
      traces->push_back({{"kind", "global"},
                         {"category", to_string(category)},
                         {"tau_dis", tau_dis},
                         {"predictions", std::move(rows)},
                         {"covered_gt", std::move(covered)}});
    }
  }
  result.mean_percent = mean_of(result.ap_percent);
  return result;
}

GlobalCategoryResult ap_polygon_global(const GlobalMap& pred,
                                       const GlobalMap& gt,
                                       const EvalConfig& cfg,
                                       std::vector<nlohmann::json>* traces) {
  cfg.validate();
  std::vector<const GlobalInstance*> pi, gi;
  for (const GlobalInstance& inst : pred.instances) {
    if (inst.category == Category::kPedestrian) pi.push_back(&inst);
  }
  for (const GlobalInstance& inst : gt.instances) {
    if (inst.category == Category::kPedestrian) gi.push_back(&inst);
  }

  GlobalCategoryResult result;
  if (gi.empty()) {
    result.skipped = true;
    return result;
  }

  std::vector<double> iou(pi.size() * gi.size(), 0.0);
  parallel_for(pi.size(), [&](std::size_t a) {
    for (std::size_t b = 0; b < gi.size(); ++b) {
      iou[a * gi.size() + b] = raster_iou(pi[a]->raster, gi[b]->raster);
    }
  });

  std::vector<double> scores;
  scores.reserve(pi.size());
  for (const GlobalInstance* inst : pi) scores.push_back(inst->mean_score);
  const std::vector<std::size_t> order = order_by_score_desc(scores);

  for (double threshold : cfg.iou_thresholds) {
    std::vector<bool> covered(gi.size(), false);
    std::vector<int> tp(order.size(), 0), fp(order.size(), 0);
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const std::size_t a = order[rank];
      double best = -1.0;
      std::size_t best_j = gi.size();
      for (std::size_t b = 0; b < gi.size(); ++b) {
        if (covered[b]) continue;
        if (iou[a * gi.size() + b] > best) {
          best = iou[a * gi.size() + b];
          best_j = b;
        }
      }
      if (best_j < gi.size() && best >= threshold) {
        covered[best_j] = true;
        tp[rank] = 1;
      } else {
        fp[rank] = 1;
      }
      if (traces) {
        rows.push_back({{"track_id", pi[a]->source_id},
                        {"score", scores[a]},
                        {"tp", tp[rank]},
                        {"fp", fp[rank]},
                        {"iou", best < 0.0 ? 0.0 : best}});
      }
    }
    result.ap_percent[threshold] =
        100.0 * average_precision(tp, fp, gi.size());
    if (traces) {
      traces->push_back({{"kind", "global"},
                         {"category", to_string(Category::kPedestrian)},
                         {"iou_threshold", threshold},
                         {"predictions", std::move(rows)}});
    }
  }
  result.mean_percent = mean_of(result.ap_percent);
  return result;
}

GlobalReport g_map(const GlobalMap& pred, const GlobalMap& gt,
                   const EvalConfig& cfg,
                   std::vector<nlohmann::json>* traces) {
  GlobalReport report;
  report.categories[Category::kPedestrian] =
      ap_polygon_global(pred, gt, cfg, traces);
  report.categories[Category::kDivider] =
      ap_polyline_global(pred, gt, Category::kDivider, cfg, traces);
  report.categories[Category::kBoundary] =
      ap_polyline_global(pred, gt, Category::kBoundary, cfg, traces);

  double sum = 0.0;
  int count = 0;
  for (const auto& [category, result] : report.categories) {
    if (result.skipped) continue;
    sum += result.mean_percent;
    count += 1;
  }
  if (count == 0) {
    throw std::runtime_error("g_map: no ground truth in any category");
  }
  report.g_map_percent = sum / static_cast<double>(count);
  return report;
}

}  // namespace histmap
