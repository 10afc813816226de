#include "histmap/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace histmap {
namespace {

// Sign with a fixed tolerance on cross products, so nearly-degenerate
// configurations classify deterministically.
constexpr double kCrossEps = 1e-12;

int sign(double v) { return (v > kCrossEps) - (v < -kCrossEps); }

bool strictly_between(double lo, double v, double hi) {
  if (lo > hi) std::swap(lo, hi);
  return lo < v && v < hi;
}

// True when point p lies strictly inside segment (a, b), assuming p is
// already known to be collinear with it.
bool on_segment_interior(Point2 a, Point2 b, Point2 p) {
  if (p == a || p == b) return false;
  if (std::abs(a.x - b.x) >= std::abs(a.y - b.y)) {
    return strictly_between(a.x, p.x, b.x);
  }
  return strictly_between(a.y, p.y, b.y);
}

// Self-intersection predicate for two ring edges. Shared endpoints are
// allowed; proper crossings, T-contacts, and collinear overlaps are not.
bool segments_conflict(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double d1 = (b - a).cross(c - a);
  const double d2 = (b - a).cross(d - a);
  const double d3 = (d - c).cross(a - c);
  const double d4 = (d - c).cross(b - c);
  const int s1 = sign(d1), s2 = sign(d2), s3 = sign(d3), s4 = sign(d4);

  if (s1 * s2 < 0 && s3 * s4 < 0) return true;  // proper crossing

  if (s1 == 0 && s2 == 0 && s3 == 0 && s4 == 0) {
    // Collinear: reject any overlap longer than a single shared endpoint.
    int shared = (a == c) + (a == d) + (b == c) + (b == d);
    if (shared >= 2) return true;
    if (on_segment_interior(a, b, c) || on_segment_interior(a, b, d) ||
        on_segment_interior(c, d, a) || on_segment_interior(c, d, b)) {
      return true;
    }
    return false;
  }

  if (s1 == 0 && on_segment_interior(a, b, c)) return true;
  if (s2 == 0 && on_segment_interior(a, b, d)) return true;
  if (s3 == 0 && on_segment_interior(c, d, a)) return true;
  if (s4 == 0 && on_segment_interior(c, d, b)) return true;
  return false;
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

std::vector<Point2> require_finite_points(std::vector<Point2> pts,
                                          const char* what) {
  for (const Point2& p : pts) require(is_finite(p), what);
  return pts;
}

}  // namespace

bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double wrap_angle(double radians) {
  double a = std::remainder(radians, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Pose2::Pose2(double x, double y, double theta)
    : translation{x, y}, rotation(wrap_angle(theta)) {
  if (!is_finite(translation) || !std::isfinite(rotation)) {
    throw std::invalid_argument("Pose2: non-finite pose");
  }
}

Point2 Pose2::apply(Point2 p) const {
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);
  return {c * p.x - s * p.y + translation.x,
          s * p.x + c * p.y + translation.y};
}

Pose2 Pose2::inverse() const {
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);
  Pose2 out;
  out.rotation = wrap_angle(-rotation);
  out.translation = {-(c * translation.x + s * translation.y),
                     -(-s * translation.x + c * translation.y)};
  return out;
}

Pose2 Pose2::compose(const Pose2& second, const Pose2& first) {
  Pose2 out;
  out.rotation = wrap_angle(first.rotation + second.rotation);
  out.translation = second.apply(first.translation);
  return out;
}

std::string to_string(Category c) {
  switch (c) {
    case Category::kPedestrian:
      return "pedestrian";
    case Category::kDivider:
      return "divider";
    case Category::kBoundary:
      return "boundary";
  }
  throw std::invalid_argument("unknown category");
}

Category category_from_string(const std::string& name) {
  if (name == "pedestrian") return Category::kPedestrian;
  if (name == "divider") return Category::kDivider;
  if (name == "boundary") return Category::kBoundary;
  throw std::invalid_argument("unknown category: " + name);
}

bool category_is_polygon(Category c) { return c == Category::kPedestrian; }

Polyline::Polyline(std::vector<Point2> points)
    : points_(require_finite_points(std::move(points),
                                    "Polyline: non-finite point")) {
  require(points_.size() >= 2, "Polyline: needs at least 2 points");
  for (std::size_t i = 1; i < points_.size(); ++i) {
    require(!(points_[i] == points_[i - 1]),
            "Polyline: consecutive duplicate point");
  }
}

double Polyline::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    total += distance(points_[i - 1], points_[i]);
  }
  return total;
}

Polygon::Polygon(std::vector<Point2> ring)
    : ring_(require_finite_points(std::move(ring),
                                  "Polygon: non-finite point")) {
  if (ring_.size() >= 2 && ring_.front() == ring_.back()) ring_.pop_back();
  require(ring_.size() >= 3, "Polygon: needs at least 3 vertices");
  const std::size_t n = ring_.size();
  for (std::size_t i = 0; i < n; ++i) {
    require(!(ring_[i] == ring_[(i + 1) % n]),
            "Polygon: consecutive duplicate vertex");
  }
  require(signed_area() != 0.0, "Polygon: zero signed area");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_conflict(ring_[i], ring_[(i + 1) % n], ring_[j],
                            ring_[(j + 1) % n])) {
        throw std::invalid_argument("Polygon: self-intersecting ring");
      }
    }
  }
}

double Polygon::signed_area() const {
  double twice = 0.0;
  const std::size_t n = ring_.size();
  for (std::size_t i = 0; i < n; ++i) {
    twice += ring_[i].cross(ring_[(i + 1) % n]);
  }
  return 0.5 * twice;
}

double Polygon::perimeter() const {
  double total = 0.0;
  const std::size_t n = ring_.size();
  for (std::size_t i = 0; i < n; ++i) {
    total += distance(ring_[i], ring_[(i + 1) % n]);
  }
  return total;
}

MapElement::MapElement(Polyline line, Category category, double score,
                       std::optional<std::int64_t> track_id)
    : category(category),
      score(score),
      track_id(track_id),
      geometry_(std::move(line)) {
  require(!category_is_polygon(category),
          "MapElement: pedestrian requires a polygon");
  require(score >= 0.0 && score <= 1.0, "MapElement: score outside [0,1]");
  require(!track_id || *track_id >= 0, "MapElement: negative track id");
}

MapElement::MapElement(Polygon polygon, Category category, double score,
                       std::optional<std::int64_t> track_id)
    : category(category),
      score(score),
      track_id(track_id),
      geometry_(std::move(polygon)) {
  require(category_is_polygon(category),
          "MapElement: polygon requires the pedestrian category");
  require(score >= 0.0 && score <= 1.0, "MapElement: score outside [0,1]");
  require(!track_id || *track_id >= 0, "MapElement: negative track id");
}

bool MapElement::is_polygon() const {
  return std::holds_alternative<Polygon>(geometry_);
}

const Polyline& MapElement::polyline() const {
  return std::get<Polyline>(geometry_);
}

const Polygon& MapElement::polygon() const {
  return std::get<Polygon>(geometry_);
}

const std::vector<Point2>& MapElement::vertices() const {
  return is_polygon() ? polygon().ring() : polyline().points();
}

Polyline transform(const Polyline& line, const Pose2& pose) {
  std::vector<Point2> out;
  out.reserve(line.size());
  for (Point2 p : line.points()) out.push_back(pose.apply(p));
  return Polyline(std::move(out));
}

Polygon transform(const Polygon& polygon, const Pose2& pose) {
  std::vector<Point2> out;
  out.reserve(polygon.ring().size());
  for (Point2 p : polygon.ring()) out.push_back(pose.apply(p));
  return Polygon(std::move(out));
}

MapElement transform(const MapElement& element, const Pose2& pose) {
  if (element.is_polygon()) {
    return MapElement(transform(element.polygon(), pose), element.category,
                      element.score, element.track_id);
  }
  return MapElement(transform(element.polyline(), pose), element.category,
                    element.score, element.track_id);
}

Polyline resample(const Polyline& line, int n) {
  require(n >= 2, "resample: need at least 2 samples");
  const auto& pts = line.points();
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    cum[i] = cum[i - 1] + distance(pts[i - 1], pts[i]);
  }
  const double total = cum.back();
  require(total > 0.0, "resample: degenerate zero-length line");

  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(n));
  out.push_back(pts.front());
  std::size_t seg = 1;
  for (int k = 1; k < n - 1; ++k) {
    const double target = total * static_cast<double>(k) /
                          static_cast<double>(n - 1);
    while (seg + 1 < pts.size() && cum[seg] < target) ++seg;
    const double seg_len = cum[seg] - cum[seg - 1];
    const double t = seg_len > 0.0 ? (target - cum[seg - 1]) / seg_len : 0.0;
    out.push_back(pts[seg - 1] + (pts[seg] - pts[seg - 1]) * t);
  }
  out.push_back(pts.back());

  // Interpolation can land exactly on a vertex; keep the sample count by
  // nudging duplicates onto their predecessor's segment midpoint.
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] == out[i - 1]) {
      out[i] = out[i - 1] + (out[std::min(i + 1, out.size() - 1)] - out[i - 1]) * 0.5;
      if (out[i] == out[i - 1]) {
        throw std::invalid_argument("resample: degenerate duplicate samples");
      }
    }
  }
  return Polyline(std::move(out));
}

std::vector<Point2> resample_ring(const std::vector<Point2>& ring, int n) {
  require(n >= 3, "resample_ring: need at least 3 samples");
  require(ring.size() >= 3, "resample_ring: need a ring");
  const std::size_t m = ring.size();
  std::vector<double> cum(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    cum[i + 1] = cum[i] + distance(ring[i], ring[(i + 1) % m]);
  }
  const double total = cum.back();
  require(total > 0.0, "resample_ring: degenerate ring");

  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(n));
  std::size_t seg = 1;
  for (int k = 0; k < n; ++k) {
    const double target = total * static_cast<double>(k) /
                          static_cast<double>(n);
    while (seg < m && cum[seg] < target) ++seg;
    const double seg_len = cum[seg] - cum[seg - 1];
    const double t = seg_len > 0.0 ? (target - cum[seg - 1]) / seg_len : 0.0;
    const Point2 a = ring[seg - 1];
    const Point2 b = ring[seg % m];
    out.push_back(a + (b - a) * t);
  }
  return out;
}

double directed_chamfer(std::span<const Point2> a, std::span<const Point2> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("chamfer: empty point set");
  }
  double sum = 0.0;
  for (Point2 p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (Point2 q : b) {
      best = std::min(best, (p - q).squared_norm());
    }
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(a.size());
}

double chamfer_points(std::span<const Point2> a, std::span<const Point2> b) {
  return 0.5 * (directed_chamfer(a, b) + directed_chamfer(b, a));
}

double chamfer(const Polyline& a, const Polyline& b, int n_samples) {
  const Polyline ra = resample(a, n_samples);
  const Polyline rb = resample(b, n_samples);
  return chamfer_points(ra.points(), rb.points());
}

double chamfer_elements(const MapElement& a, const MapElement& b,
                        int n_samples) {
  const auto sample = [n_samples](const MapElement& e) {
    if (e.is_polygon()) return resample_ring(e.polygon().ring(), n_samples);
    return resample(e.polyline(), n_samples).points();
  };
  const std::vector<Point2> pa = sample(a);
  const std::vector<Point2> pb = sample(b);
  return chamfer_points(pa, pb);
}

}  // namespace histmap
