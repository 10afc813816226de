#include "histmap/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "histmap/parallel.hpp"
#include "histmap/rng.hpp"

namespace histmap {
namespace {

constexpr double kLaneHalf = 1.75;    // divider offset from the centerline
constexpr double kBoundaryOff = 3.0;  // boundary offset beyond the dividers
constexpr double kPathSample = 0.5;   // centerline sampling step, meters

// Fresh-id namespaces for perturbation output; far above any real gt id.
constexpr std::int64_t kIdSwitchBase = std::int64_t{1} << 32;
constexpr std::int64_t kFalsePositiveBase = std::int64_t{1} << 40;

struct PathPoint {
  Point2 position;
  Point2 tangent;  // unit
};

// Arc-length sampled centerline over [s_lo, s_hi].
std::vector<PathPoint> sample_path(const ScenarioSpec& spec, double s_lo,
                                   double s_hi) {
  std::vector<PathPoint> out;
  const int n = std::max(2, static_cast<int>(std::ceil((s_hi - s_lo) / kPathSample)) + 1);
  const double total = (spec.frames - 1) * spec.step;

  const auto eval = [&](double s) -> PathPoint {
    if (spec.trajectory == "straight") {
      return {{s, 0.0}, {1.0, 0.0}};
    }
    if (spec.trajectory == "turn") {
      // straight leg, 90 degree left arc, straight leg
      const double l1 = 0.35 * total;
      const double arc = 0.30 * total;
      const double radius = arc / (kPi / 2.0);
      if (s < l1) return {{s, 0.0}, {1.0, 0.0}};
      if (s < l1 + arc) {
        const double a = (s - l1) / radius;
        return {{l1 + radius * std::sin(a), radius * (1.0 - std::cos(a))},
                {std::cos(a), std::sin(a)}};
      }
      const double rest = s - l1 - arc;
      const double radius2 = radius;
      const Point2 arc_end{l1 + radius2, radius2};
      return {{arc_end.x, arc_end.y + rest}, {0.0, 1.0}};
    }
    if (spec.trajectory == "loop") {
      const double radius = spec.frames * spec.step / (2.0 * kPi);
      const double a = s / radius;
      return {{radius * std::cos(a), radius * std::sin(a)},
              {-std::sin(a), std::cos(a)}};
    }
    throw std::invalid_argument("unknown trajectory shape: " + spec.trajectory);
  };

  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = s_lo + (s_hi - s_lo) * static_cast<double>(i) /
                                static_cast<double>(n - 1);
    out.push_back(eval(s));
  }
  return out;
}

Point2 left_normal(Point2 tangent) { return {-tangent.y, tangent.x}; }

// Heading such that ego +y aligns with the tangent direction.
double heading_from_tangent(Point2 tangent) {
  return std::atan2(-tangent.x, tangent.y);
}

Polyline offset_curve(const std::vector<PathPoint>& path, double offset) {
  std::vector<Point2> pts;
  pts.reserve(path.size());
  for (const PathPoint& p : path) {
    const Point2 candidate = p.position + left_normal(p.tangent) * offset;
    if (pts.empty() || distance(pts.back(), candidate) > 1e-9) {
      pts.push_back(candidate);
    }
  }
  return Polyline(std::move(pts));
}

std::vector<double> divider_offsets(int count) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) {
    out.push_back((k - (count - 1) / 2.0) * 2.0 * kLaneHalf);
  }
  return out;
}

std::vector<double> boundary_offsets(int count, double max_div_offset) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) {
    const double tier = max_div_offset + kBoundaryOff * (1 + k / 2);
    out.push_back(k % 2 == 0 ? tier : -tier);
  }
  return out;
}

// Rectangle across the road at path station s, interpolated between the
// centerline samples.
Polygon crossing_at(const std::vector<PathPoint>& path, double s_lo,
                    double s_hi, double station, double half_span,
                    double half_width) {
  const double t = std::clamp((station - s_lo) / (s_hi - s_lo), 0.0, 1.0);
  const double x = t * static_cast<double>(path.size() - 1);
  const std::size_t i0 =
      std::min(path.size() - 2, static_cast<std::size_t>(x));
  const double f = x - static_cast<double>(i0);
  const Point2 center =
      path[i0].position + (path[i0 + 1].position - path[i0].position) * f;
  Point2 fwd = path[i0].tangent + (path[i0 + 1].tangent - path[i0].tangent) * f;
  fwd = fwd * (1.0 / fwd.norm());
  const Point2 side = left_normal(fwd);
  return Polygon({center + fwd * half_width + side * half_span,
                  center - fwd * half_width + side * half_span,
                  center - fwd * half_width - side * half_span,
                  center + fwd * half_width - side * half_span});
}

// Liang-Barsky clip of segment (a, b) against the extent box.
std::optional<std::pair<Point2, Point2>> clip_segment(
    Point2 a, Point2 b, const GridSpec& box) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - box.x_min, box.x_max - a.x, a.y - box.y_min,
                       box.y_max - a.y};
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return std::nullopt;
    } else {
      const double r = q[k] / p[k];
      if (p[k] < 0.0) {
        t0 = std::max(t0, r);
      } else {
        t1 = std::min(t1, r);
      }
    }
  }
  if (t0 > t1) return std::nullopt;
  // Unclipped endpoints pass through exactly, so adjacent interior segments
  // stay stitched together under the == continuity check below.
  const Point2 entry = t0 == 0.0 ? a : Point2{a.x + dx * t0, a.y + dy * t0};
  const Point2 exit = t1 == 1.0 ? b : Point2{a.x + dx * t1, a.y + dy * t1};
  return std::make_pair(entry, exit);
}

// Clips an open polyline to the extent box; returns the surviving pieces.
std::vector<std::vector<Point2>> clip_polyline(const std::vector<Point2>& pts,
                                               const GridSpec& box) {
  std::vector<std::vector<Point2>> pieces;
  std::vector<Point2> current;
  const auto close = [&]() {
    if (current.size() >= 2) pieces.push_back(current);
    current.clear();
  };
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto clipped = clip_segment(pts[i - 1], pts[i], box);
    if (!clipped) {
      close();
      continue;
    }
    const auto [p, q] = *clipped;
    if (p == q) continue;  // grazing contact
    if (current.empty()) {
      current = {p, q};
    } else if (current.back() == p) {
      current.push_back(q);
    } else {
      close();
      current = {p, q};
    }
  }
  close();
  return pieces;
}

// Sutherland-Hodgman clip of a ring against the extent box.
std::vector<Point2> clip_ring(const std::vector<Point2>& ring,
                              const GridSpec& box) {
  // inside tests for the four half-planes, in order
  const auto inside = [&](int side, Point2 p) {
    switch (side) {
      case 0: return p.x >= box.x_min;
      case 1: return p.x <= box.x_max;
      case 2: return p.y >= box.y_min;
      default: return p.y <= box.y_max;
    }
  };
  const auto intersect = [&](int side, Point2 a, Point2 b) {
    double t = 0.0;
    switch (side) {
      case 0: t = (box.x_min - a.x) / (b.x - a.x); break;
      case 1: t = (box.x_max - a.x) / (b.x - a.x); break;
      case 2: t = (box.y_min - a.y) / (b.y - a.y); break;
      default: t = (box.y_max - a.y) / (b.y - a.y); break;
    }
    return a + (b - a) * t;
  };

  std::vector<Point2> poly = ring;
  for (int side = 0; side < 4 && !poly.empty(); ++side) {
    std::vector<Point2> next;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Point2 a = poly[i];
      const Point2 b = poly[(i + 1) % poly.size()];
      const bool ain = inside(side, a);
      const bool bin = inside(side, b);
      if (ain) next.push_back(a);
      if (ain != bin) next.push_back(intersect(side, a, b));
    }
    poly = std::move(next);
  }
  // drop exact duplicates introduced by corner contacts
  std::vector<Point2> cleaned;
  for (const Point2& p : poly) {
    if (cleaned.empty() || !(cleaned.back() == p)) cleaned.push_back(p);
  }
  while (cleaned.size() >= 2 && cleaned.front() == cleaned.back()) {
    cleaned.pop_back();
  }
  return cleaned;
}

std::optional<MapElement> crop_element(const MapElement& global_element,
                                       const Pose2& ego_pose,
                                       const GridSpec& box) {
  const MapElement local = transform(global_element, ego_pose.inverse());
  if (local.is_polygon()) {
    const std::vector<Point2> ring = clip_ring(local.polygon().ring(), box);
    if (ring.size() < 3) return std::nullopt;
    try {
      return MapElement(Polygon(ring), local.category, local.score,
                        local.track_id);
    } catch (const std::invalid_argument&) {
      return std::nullopt;  // degenerate truncation
    }
  }
  const auto pieces = clip_polyline(local.polyline().points(), box);
  if (pieces.empty()) return std::nullopt;
  // Keep the longest piece so one instance maps to one local element.
  std::size_t best = 0;
  double best_len = -1.0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    double len = 0.0;
    for (std::size_t k = 1; k < pieces[i].size(); ++k) {
      len += distance(pieces[i][k - 1], pieces[i][k]);
    }
    if (len > best_len) {
      best_len = len;
      best = i;
    }
  }
  return MapElement(Polyline(pieces[best]), local.category, local.score,
                    local.track_id);
}

}  // namespace

void ScenarioSpec::validate() const {
  if (trajectory != "straight" && trajectory != "turn" &&
      trajectory != "loop") {
    throw std::invalid_argument("unknown trajectory shape: " + trajectory);
  }
  if (frames < 1) throw std::invalid_argument("scenario needs >= 1 frame");
  if (frames > 1 && !(step > 0.0)) {
    throw std::invalid_argument("zero-length trajectory");
  }
  if (dividers < 0 || boundaries < 0 || pedestrians < 0) {
    throw std::invalid_argument("negative element count");
  }
  grid.validate();
}

nlohmann::json ScenarioSpec::to_json() const {
  return {{"trajectory", trajectory},
          {"frames", frames},
          {"step", step},
          {"dividers", dividers},
          {"boundaries", boundaries},
          {"pedestrians", pedestrians},
          {"grid",
           {{"height", grid.height},
            {"width", grid.width},
            {"x_range", {grid.x_min, grid.x_max}},
            {"y_range", {grid.y_min, grid.y_max}}}}};
}

ScenarioSpec ScenarioSpec::from_json(const nlohmann::json& j) {
  ScenarioSpec spec;
  if (j.contains("trajectory")) spec.trajectory = j["trajectory"];
  if (j.contains("frames")) spec.frames = j["frames"];
  if (j.contains("step")) spec.step = j["step"];
  if (j.contains("dividers")) spec.dividers = j["dividers"];
  if (j.contains("boundaries")) spec.boundaries = j["boundaries"];
  if (j.contains("pedestrians")) spec.pedestrians = j["pedestrians"];
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    spec.grid.height = g["height"];
    spec.grid.width = g["width"];
    spec.grid.x_min = g["x_range"][0];
    spec.grid.x_max = g["x_range"][1];
    spec.grid.y_min = g["y_range"][0];
    spec.grid.y_max = g["y_range"][1];
  }
  spec.validate();
  return spec;
}

Scenario generate(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  Scenario scenario;
  scenario.spec = spec;
  scenario.seed = seed;

  const double total = (spec.frames - 1) * spec.step;
  const bool loop = spec.trajectory == "loop";
  // Polylines extend past the driven stretch so every frame sees them.
  const double extend = loop ? 0.0 : 10.0;
  const double s_lo = -extend;
  const double s_hi = loop ? spec.frames * spec.step : total + extend;
  const std::vector<PathPoint> path = sample_path(spec, s_lo, s_hi);

  scenario.trajectory.reserve(static_cast<std::size_t>(spec.frames));
  for (int i = 0; i < spec.frames; ++i) {
    const double s = i * spec.step;
    const double t = (s - s_lo) / (s_hi - s_lo);
    const std::size_t idx = std::min(
        path.size() - 1,
        static_cast<std::size_t>(t * static_cast<double>(path.size() - 1)));
    scenario.trajectory.emplace_back(path[idx].position.x,
                                     path[idx].position.y,
                                     heading_from_tangent(path[idx].tangent));
  }

  // Tight loops shrink the lane layout so the whole scene stays inside the
  // lateral BEV reach for every ego position.
  double lateral_scale = 1.0;
  if (loop) {
    const double radius = spec.frames * spec.step / (2.0 * kPi);
    lateral_scale = std::min(1.0, radius / 8.0);
  }

  std::int64_t next_id = 0;
  std::vector<MapElement> candidates;
  double max_div = 0.0;
  for (double off : divider_offsets(spec.dividers)) {
    max_div = std::max(max_div, std::abs(off));
    candidates.emplace_back(offset_curve(path, off * lateral_scale),
                            Category::kDivider, 1.0, next_id++);
  }
  for (double off : boundary_offsets(spec.boundaries, max_div)) {
    candidates.emplace_back(offset_curve(path, off * lateral_scale),
                            Category::kBoundary, 1.0, next_id++);
  }
  const double road_half =
      std::max(1.0, (max_div + kBoundaryOff - 0.5) * lateral_scale);
  Rng placer(substream_seed(seed, "place"));
  for (int k = 0; k < spec.pedestrians; ++k) {
    const double frac =
        (k + 1.0) / (spec.pedestrians + 1.0) + placer.uniform(-0.03, 0.03);
    const double station = std::clamp(frac, 0.05, 0.95) * (loop ? s_hi : total);
    candidates.emplace_back(
        crossing_at(path, s_lo, s_hi, station, road_half, 1.5),
        Category::kPedestrian, 1.0, next_id++);
  }

  // Keep only instances whose visibility window is one contiguous frame
  // interval; split windows would make two tracks share one instance and
  // the oracle scenarios are meant to be unambiguous.
  std::vector<MapElement> kept;
  for (const MapElement& element : candidates) {
    int first = -1, last = -1;
    bool contiguous = true;
    for (int i = 0; i < spec.frames; ++i) {
      const bool visible =
          crop_element(element, scenario.trajectory[i], spec.grid).has_value();
      if (visible) {
        if (first < 0) first = i;
        if (last >= 0 && i > last + 1) contiguous = false;
        last = i;
      }
    }
    if (first >= 0 && contiguous) kept.push_back(element);
  }
  std::int64_t id = 0;
  for (MapElement& element : kept) element.track_id = id++;
  scenario.gt = std::move(kept);
  return scenario;
}

SceneFrame crop_frame(const Scenario& scenario, int frame_index) {
  if (frame_index < 0 ||
      frame_index >= static_cast<int>(scenario.trajectory.size())) {
    throw std::invalid_argument("crop_frame: frame index out of range");
  }
  SceneFrame frame;
  frame.frame_index = frame_index;
  frame.ego_pose = scenario.trajectory[static_cast<std::size_t>(frame_index)];
  for (const MapElement& element : scenario.gt) {
    if (auto local = crop_element(element, frame.ego_pose, scenario.spec.grid)) {
      frame.gt.push_back(std::move(*local));
    }
  }
  return frame;
}

void PerturbationModel::validate() const {
  if (jitter_sigma < 0.0 || score_sigma < 0.0 || fp_rate < 0.0) {
    throw std::invalid_argument("negative perturbation magnitude");
  }
  if (dropout < 0.0 || dropout > 1.0 || id_switch < 0.0 || id_switch > 1.0) {
    throw std::invalid_argument("perturbation probability outside [0,1]");
  }
  if (n_points != 0 && n_points < 3) {
    throw std::invalid_argument("n_points must be 0 or >= 3");
  }
}

nlohmann::json PerturbationModel::to_json() const {
  return {{"jitter_sigma", jitter_sigma}, {"score_sigma", score_sigma},
          {"dropout", dropout},           {"fp_rate", fp_rate},
          {"id_switch", id_switch},       {"n_points", n_points}};
}

std::vector<MapElement> perturb(const SceneFrame& frame_gt,
                                const PerturbationModel& model,
                                std::uint64_t seed, const GridSpec& extent) {
  model.validate();
  const int frame = frame_gt.frame_index;
  std::vector<MapElement> preds;

  for (const MapElement& element : frame_gt.gt) {
    if (!element.track_id) {
      throw std::invalid_argument("perturb: ground truth without id");
    }
    const std::int64_t id = *element.track_id;

    if (model.dropout > 0.0) {
      Rng drop(substream_seed(seed, "drop", frame, id));
      if (drop.next_double() < model.dropout) continue;
    }

    // Association id: stays the instance id until a switch event; after a
    // switch at frame f the emitted id moves to a fresh namespace keyed on
    // (id, f), so downstream sees a brand-new instance.
    std::int64_t emitted = id;
    if (model.id_switch > 0.0) {
      for (int f = 0; f <= frame; ++f) {
        Rng sw(substream_seed(seed, "idsw", f, id));
        if (sw.next_double() < model.id_switch) {
          emitted = kIdSwitchBase + id * 4096 + f;
        }
      }
    }

    std::vector<Point2> pts = element.vertices();
    if (model.n_points > 0) {
      if (element.is_polygon()) {
        pts = resample_ring(pts, model.n_points);
      } else {
        pts = resample(element.polyline(), model.n_points).points();
      }
    }
    if (model.jitter_sigma > 0.0) {
      Rng jitter(substream_seed(seed, "jitter", frame, id));
      for (Point2& p : pts) {
        p.x += model.jitter_sigma * jitter.normal();
        p.y += model.jitter_sigma * jitter.normal();
      }
    }

    double score = 1.0;
    if (model.score_sigma > 0.0) {
      Rng noise(substream_seed(seed, "score", frame, id));
      score = std::clamp(1.0 - std::abs(model.score_sigma * noise.normal()),
                         0.0, 1.0);
    }

    try {
      if (element.is_polygon()) {
        preds.emplace_back(Polygon(pts), element.category, score, emitted);
      } else {
        preds.emplace_back(Polyline(pts), element.category, score, emitted);
      }
    } catch (const std::invalid_argument&) {
      // Jitter broke the ring's simplicity; emit the unjittered shape.
      preds.emplace_back(element.is_polygon()
                             ? MapElement(element.polygon(), element.category,
                                          score, emitted)
                             : MapElement(element.polyline(), element.category,
                                          score, emitted));
    }
  }

  if (model.fp_rate > 0.0) {
    Rng fp(substream_seed(seed, "fp", frame));
    const int count = fp.poisson(model.fp_rate);
    const GridSpec& box = extent;
    for (int k = 0; k < count; ++k) {
      const Point2 start{fp.uniform(box.x_min * 0.8, box.x_max * 0.8),
                         fp.uniform(box.y_min * 0.8, box.y_max * 0.8)};
      const double angle = fp.uniform(0.0, 2.0 * kPi);
      const double length = fp.uniform(2.0, 6.0);
      const Point2 dir{std::cos(angle), std::sin(angle)};
      std::vector<Point2> pts;
      for (int s = 0; s < 4; ++s) {
        pts.push_back(start + dir * (length * s / 3.0));
      }
      const Category category =
          (fp.next_u64() & 1) ? Category::kDivider : Category::kBoundary;
      const double score = fp.uniform(0.3, 1.0);
      preds.emplace_back(Polyline(pts), category, score,
                         kFalsePositiveBase + frame * 1024 + k);
    }
  }
  return preds;
}

Scene simulate(const ScenarioSpec& spec, const PerturbationModel& model,
               std::uint64_t seed) {
  const Scenario scenario = generate(spec, seed);
  Scene scene;
  scene.grid = spec.grid;
  scene.frames.reserve(static_cast<std::size_t>(spec.frames));
  for (int i = 0; i < spec.frames; ++i) {
    SceneFrame frame = crop_frame(scenario, i);
    frame.pred = perturb(frame, model, seed, spec.grid);
    scene.frames.push_back(std::move(frame));
  }
  return scene;
}

}  // namespace histmap
