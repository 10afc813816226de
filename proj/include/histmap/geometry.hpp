#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace histmap {

inline constexpr double kPi = 3.14159265358979323846;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2 operator+(Point2 o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Point2 o) const { return x * o.x + y * o.y; }
  double cross(Point2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
  bool operator==(const Point2&) const = default;
};

inline double distance(Point2 a, Point2 b) { return (a - b).norm(); }
bool is_finite(Point2 p);

/// Normalizes an angle to (-pi, pi].
double wrap_angle(double radians);

/// SE(2) rigid transform: p -> R(rotation) * p + translation.
struct Pose2 {
  Point2 translation{};
  double rotation = 0.0;

  Pose2() = default;
  Pose2(double x, double y, double theta);

  Point2 apply(Point2 p) const;
  Pose2 inverse() const;
  bool operator==(const Pose2&) const = default;

  /// second ∘ first: applies `first`, then `second`.
  static Pose2 compose(const Pose2& second, const Pose2& first);
};

enum class Category : int { kPedestrian = 0, kDivider = 1, kBoundary = 2 };

inline constexpr Category kAllCategories[] = {
    Category::kPedestrian, Category::kDivider, Category::kBoundary};

std::string to_string(Category c);
Category category_from_string(const std::string& name);

/// Pedestrian crossings are closed shapes; dividers and boundaries are open.
bool category_is_polygon(Category c);

/// Ordered open curve. At least two points, all finite, no consecutive
/// duplicates (so the arc length is strictly positive).
class Polyline {
 public:
  explicit Polyline(std::vector<Point2> points);

  const std::vector<Point2>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double length() const;

 private:
  std::vector<Point2> points_;
};

/// Simple closed ring, implicitly closed (first vertex is not repeated).
/// At least three vertices, non-self-intersecting, nonzero signed area.
/// Vertex-to-vertex contact between non-adjacent edges is tolerated;
/// crossings and collinear overlaps are rejected.
class Polygon {
 public:
  explicit Polygon(std::vector<Point2> ring);

  const std::vector<Point2>& ring() const { return ring_; }
  double signed_area() const;
  double perimeter() const;

 private:
  std::vector<Point2> ring_;
};

/// One vectorized map instance: geometry + category + confidence.
/// For ground truth the optional id is the stable global instance id; for
/// predictions it is the association id carried across frames.
struct MapElement {
  MapElement(Polyline line, Category category, double score,
             std::optional<std::int64_t> track_id = std::nullopt);
  MapElement(Polygon polygon, Category category, double score,
             std::optional<std::int64_t> track_id = std::nullopt);

  bool is_polygon() const;
  const Polyline& polyline() const;
  const Polygon& polygon() const;
  /// Polyline points, or the polygon ring.
  const std::vector<Point2>& vertices() const;

  Category category;
  double score = 1.0;
  std::optional<std::int64_t> track_id;

 private:
  std::variant<Polyline, Polygon> geometry_;
};

Polyline transform(const Polyline& line, const Pose2& pose);
Polygon transform(const Polygon& polygon, const Pose2& pose);
MapElement transform(const MapElement& element, const Pose2& pose);

/// n points on the curve at equal arc-length spacing, endpoints preserved.
Polyline resample(const Polyline& line, int n);

/// n points around the closed ring at equal perimeter spacing, starting at
/// ring[0].
std::vector<Point2> resample_ring(const std::vector<Point2>& ring, int n);

/// Symmetric Chamfer distance between two point sets:
/// 0.5 * (mean_a min_b |a-b| + mean_b min_a |a-b|).
double chamfer_points(std::span<const Point2> a, std::span<const Point2> b);

/// Mean of nearest-neighbor distances from every point of `a` to `b`.
double directed_chamfer(std::span<const Point2> a, std::span<const Point2> b);

/// Symmetric Chamfer between two polylines over resampled point sets of
/// size n_samples each.
double chamfer(const Polyline& a, const Polyline& b, int n_samples = 100);

/// Chamfer between two elements; polygons are sampled around their ring.
double chamfer_elements(const MapElement& a, const MapElement& b,
                        int n_samples = 100);

}  // namespace histmap
