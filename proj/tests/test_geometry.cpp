#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "histmap/geometry.hpp"
#include "histmap/rng.hpp"

using namespace histmap;

namespace {

Polyline random_monotone_polyline(Rng& rng, int n) {
  std::vector<Point2> pts;
  double x = rng.uniform(-5.0, 5.0);
  double y = rng.uniform(-5.0, 5.0);
  for (int i = 0; i < n; ++i) {
    pts.push_back({x, y});
    x += rng.uniform(0.2, 2.0);  // strictly increasing x
    y += rng.uniform(-1.5, 1.5);
  }
  return Polyline(pts);
}

// Arc-length position of a point known to lie on the polyline. Relies on the
// generator above producing x-monotone lines, so the segment is unambiguous.
double arc_position_on(const Polyline& line, Point2 p) {
  const auto& pts = line.points();
  double cum = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Point2 a = pts[i - 1];
    const Point2 b = pts[i];
    if (p.x >= a.x - 1e-12 && p.x <= b.x + 1e-12) {
      const Point2 d = b - a;
      const double t = d.squared_norm() > 0.0
                           ? std::clamp((p - a).dot(d) / d.squared_norm(), 0.0, 1.0)
                           : 0.0;
      const Point2 proj = a + d * t;
      if (distance(proj, p) < 1e-7) return cum + distance(a, proj);
    }
    cum += distance(a, b);
  }
  FAIL("point not on polyline");
  return -1.0;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(0.25) == doctest::Approx(0.25));
}

TEST_CASE("transform basics") {
  const MapElement e(Polyline({{0.0, 0.0}, {1.0, 0.0}}), Category::kDivider,
                     0.8, 7);

  SUBCASE("identity pose leaves the element unchanged") {
    const MapElement out = transform(e, Pose2());
    CHECK(out.vertices() == e.vertices());
    CHECK(out.score == e.score);
    CHECK(out.track_id == e.track_id);
  }
  SUBCASE("pure translation") {
    const MapElement out = transform(e, Pose2(1.0, 0.0, 0.0));
    CHECK(out.vertices()[0] == Point2{1.0, 0.0});
  }
  SUBCASE("rotation plus translation") {
    // R(pi/2) * (1,0) + (1,1) = (1,2)
    const MapElement out = transform(e, Pose2(1.0, 1.0, kPi / 2.0));
    CHECK(out.vertices()[1].x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.vertices()[1].y == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("pose composition and inverse") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose2 p1(rng.uniform(-10, 10), rng.uniform(-10, 10),
                   rng.uniform(-4, 4));
    const Pose2 p2(rng.uniform(-10, 10), rng.uniform(-10, 10),
                   rng.uniform(-4, 4));
    const Pose2 p3(rng.uniform(-10, 10), rng.uniform(-10, 10),
                   rng.uniform(-4, 4));
    const Point2 x{rng.uniform(-5, 5), rng.uniform(-5, 5)};

    const Point2 via_chain = p2.apply(p1.apply(x));
    const Point2 via_compose = Pose2::compose(p2, p1).apply(x);
    CHECK(distance(via_chain, via_compose) < 1e-9);

    const Pose2 left = Pose2::compose(Pose2::compose(p3, p2), p1);
    const Pose2 right = Pose2::compose(p3, Pose2::compose(p2, p1));
    CHECK(distance(left.apply(x), right.apply(x)) < 1e-9);

    const Point2 back = p1.inverse().apply(p1.apply(x));
    CHECK(distance(back, x) < 1e-9);
  }
}

TEST_CASE("resample spec cases") {
  SUBCASE("segment midpoint") {
    const Polyline out = resample(Polyline({{0, 0}, {1, 0}}), 3);
    REQUIRE(out.size() == 3);
    CHECK(out.points()[1] == Point2{0.5, 0.0});
  }
  SUBCASE("already-uniform line is a fixed point") {
    const Polyline line({{0, 0}, {1, 0}, {2, 0}, {3, 0}});
    const Polyline out = resample(line, 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(distance(out.points()[i], line.points()[i]) < 1e-12);
    }
  }
  SUBCASE("L-shaped arc-length parameterization") {
    const Polyline out = resample(Polyline({{0, 0}, {1, 0}, {1, 1}}), 3);
    CHECK(out.points()[0] == Point2{0.0, 0.0});
    CHECK(distance(out.points()[1], {1.0, 0.0}) < 1e-12);
    CHECK(out.points()[2] == Point2{1.0, 1.0});
  }
  SUBCASE("n below 2 rejected") {
    CHECK_THROWS_AS(resample(Polyline({{0, 0}, {1, 0}}), 1),
                    std::invalid_argument);
  }
}

TEST_CASE("resample preserves endpoints and the arc-length spacing") {
  Rng rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const Polyline line = random_monotone_polyline(rng, 3 + trial % 6);
    const int n = 5 + static_cast<int>(rng.next_index(20));
    const Polyline out = resample(line, n);
    REQUIRE(static_cast<int>(out.size()) == n);
    CHECK(out.points().front() == line.points().front());
    CHECK(out.points().back() == line.points().back());

    const double total = line.length();
    for (int k = 0; k < n; ++k) {
      const double expected = total * k / (n - 1);
      const double actual = arc_position_on(line, out.points()[k]);
      CHECK(std::abs(actual - expected) < 1e-9 * std::max(1.0, total));
    }
  }
}

TEST_CASE("chamfer spec cases") {
  const Polyline a({{0, 0}, {1, 0}});
  SUBCASE("identical lines") { CHECK(chamfer(a, a, 64) == 0.0); }
  SUBCASE("parallel offset equals the offset") {
    const double d = 0.37;
    const Polyline b({{0, d}, {1, d}});
    CHECK(chamfer(a, b, 50) == doctest::Approx(d).epsilon(1e-12));
  }
  SUBCASE("symmetry and positivity on random pairs") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const Polyline u = random_monotone_polyline(rng, 4);
      const Polyline v = random_monotone_polyline(rng, 5);
      const double uv = chamfer(u, v, 40);
      const double vu = chamfer(v, u, 40);
      CHECK(uv == doctest::Approx(vu).epsilon(1e-12));
      CHECK(uv >= 0.0);
    }
  }
}

TEST_CASE("polyline validation") {
  CHECK_THROWS_AS(Polyline({{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(Polyline({{0, 0}, {0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(Polyline({{0, 0}, {std::nan(""), 1}}),
                  std::invalid_argument);
}

TEST_CASE("polygon validation") {
  SUBCASE("simple square accepted, closing duplicate stripped") {
    const Polygon square({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}});
    CHECK(square.ring().size() == 4);
    CHECK(square.signed_area() == doctest::Approx(1.0));
  }
  SUBCASE("bowtie rejected") {
    CHECK_THROWS_AS(Polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}),
                    std::invalid_argument);
  }
  SUBCASE("zero-area ring rejected") {
    CHECK_THROWS_AS(Polygon({{0, 0}, {1, 0}, {2, 0}}), std::invalid_argument);
  }
  SUBCASE("vertex-to-vertex contact tolerated") {
    // Two triangles joined at one shared vertex.
    CHECK_NOTHROW(Polygon(
        {{0, 0}, {1, 1}, {2, 0}, {3, 1}, {4, 0}, {2, -1}}));
  }
}

TEST_CASE("map element invariants") {
  CHECK_THROWS_AS(MapElement(Polyline({{0, 0}, {1, 0}}),
                             Category::kPedestrian, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(MapElement(Polygon({{0, 0}, {1, 0}, {1, 1}}),
                             Category::kDivider, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(MapElement(Polyline({{0, 0}, {1, 0}}), Category::kDivider,
                             1.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(MapElement(Polyline({{0, 0}, {1, 0}}), Category::kDivider,
                             0.5, -3),
                  std::invalid_argument);
}

TEST_CASE("transform then inverse restores geometry") {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const Polyline line = random_monotone_polyline(rng, 6);
    const Pose2 pose(rng.uniform(-20, 20), rng.uniform(-20, 20),
                     rng.uniform(-3, 3));
    const Polyline back = transform(transform(line, pose), pose.inverse());
    for (std::size_t i = 0; i < line.size(); ++i) {
      CHECK(distance(back.points()[i], line.points()[i]) < 1e-9);
    }
  }
}

}  // TEST_SUITE
