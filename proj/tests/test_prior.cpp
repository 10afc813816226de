#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "histmap/prior.hpp"
#include "histmap/rng.hpp"

using namespace histmap;

namespace {

GridSpec symmetric_grid(int n, double half) {
  GridSpec spec;
  spec.height = n;
  spec.width = n;
  spec.x_min = -half;
  spec.x_max = half;
  spec.y_min = -half;
  spec.y_max = half;
  return spec;
}

// Independent projection oracle: full 3x4 matrix P = K [R | t] applied to the
// homogeneous ground point, no shared code with project_to_pv.
std::pair<double, double> oracle_project(const CameraModel& cam, Point2 p) {
  double P[3][4];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double sum = 0.0;
      for (int k = 0; k < 3; ++k) {
        sum += cam.intrinsics.m[i][k] * cam.rotation.m[k][j];
      }
      P[i][j] = sum;
    }
    double sum = 0.0;
    sum += cam.intrinsics.m[i][0] * cam.translation.x;
    sum += cam.intrinsics.m[i][1] * cam.translation.y;
    sum += cam.intrinsics.m[i][2] * cam.translation.z;
    P[i][3] = sum;
  }
  const double hx = P[0][0] * p.x + P[0][1] * p.y + P[0][3];
  const double hy = P[1][0] * p.x + P[1][1] * p.y + P[1][3];
  const double hw = P[2][0] * p.x + P[2][1] * p.y + P[2][3];
  return {hx / hw, hy / hw};
}

CameraModel random_camera(Rng& rng) {
  return CameraModel::from_center_look(
      rng.uniform(400, 1400), rng.uniform(400, 1400), rng.uniform(700, 900),
      rng.uniform(380, 520),
      {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(1.2, 2.2)},
      rng.uniform(-kPi, kPi), rng.uniform(0.05, 0.45),
      rng.uniform(-0.08, 0.08), 1600, 900);
}

TrackState track_with_history(const GridSpec& spec) {
  TrackState state;
  state.track_id = 5;
  state.history = HistoryMap(spec);
  return state;
}

}  // namespace

TEST_SUITE("prior") {

TEST_CASE("bev samples are valid-cell centers in row-major order") {
  const GridSpec spec = symmetric_grid(5, 2.5);  // 1 m cells, center at (0,0)
  HistoryMap map(spec);

  SUBCASE("empty mask gives an empty list") {
    CHECK(bev_samples(valid_mask(map, 0.5), spec).empty());
  }
  SUBCASE("center cell maps to the origin") {
    map.at(2, 2) = 0.9;
    const auto pts = bev_samples(valid_mask(map, 0.5), spec);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pts[0].y == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("adjacent cells differ by one cell width") {
    map.at(1, 1) = 0.9;
    map.at(1, 2) = 0.9;
    const auto pts = bev_samples(valid_mask(map, 0.5), spec);
    REQUIRE(pts.size() == 2);
    CHECK(pts[1].x - pts[0].x == doctest::Approx(spec.cell_width()));
    CHECK(pts[1].y == pts[0].y);
  }
  SUBCASE("mask spec mismatch rejected") {
    const ValidMask mask = valid_mask(map, 0.5);
    CHECK_THROWS_AS(bev_samples(mask, symmetric_grid(4, 2.0)),
                    std::invalid_argument);
  }
}

TEST_CASE("projection basics") {
  // Horizontal camera at the origin looking along ego +y: points on the
  // optical axis land on the principal point.
  const CameraModel cam = CameraModel::from_center_look(
      800, 800, 800, 450, {0, 0, 0}, 0.0, 0.0, 0.0, 1600, 900);

  SUBCASE("point on the optical axis hits the principal point") {
    const auto samples = project_to_pv(std::vector<Point2>{{0.0, 7.0}}, cam);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].visible);
    CHECK(samples[0].u == doctest::Approx(800.0));
    CHECK(samples[0].v == doctest::Approx(450.0));
  }
  SUBCASE("point behind the camera is invisible") {
    const auto samples = project_to_pv(std::vector<Point2>{{0.0, -3.0}}, cam);
    CHECK_FALSE(samples[0].visible);
  }
}

TEST_CASE("projection agrees with the matrix oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const CameraModel cam = random_camera(rng);
    const Point2 p{rng.uniform(-30, 30), rng.uniform(-30, 30)};
    const auto samples = project_to_pv(std::vector<Point2>{p}, cam);
    if (!samples[0].visible) continue;
    const auto [u, v] = oracle_project(cam, p);
    CHECK(samples[0].u == doctest::Approx(u).epsilon(1e-9));
    CHECK(samples[0].v == doctest::Approx(v).epsilon(1e-9));
  }
}

TEST_CASE("visible projections back-project onto the ground point") {
  Rng rng(29);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const CameraModel cam = random_camera(rng);
    const Point2 p{rng.uniform(-25, 25), rng.uniform(-25, 25)};
    const auto samples = project_to_pv(std::vector<Point2>{p}, cam);
    if (!samples[0].visible) continue;
    const auto back = back_project_ground(samples[0].u, samples[0].v, cam);
    REQUIRE(back.has_value());
    CHECK(distance(*back, p) < 1e-6);
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("camera validation") {
  Mat3 k = Mat3::identity();
  k.m[0][0] = -5.0;
  k.m[1][1] = 100.0;
  k.m[0][2] = 10.0;
  k.m[1][2] = 10.0;
  CHECK_THROWS_AS(CameraModel(k, Mat3::identity(), {0, 0, 0}, 100, 100),
                  std::invalid_argument);
  k.m[0][0] = 100.0;
  k.m[0][2] = 500.0;  // principal point outside a 100px image
  CHECK_THROWS_AS(CameraModel(k, Mat3::identity(), {0, 0, 0}, 100, 100),
                  std::invalid_argument);
  Mat3 bad_rot = Mat3::identity();
  bad_rot.m[0][0] = 2.0;
  k.m[0][2] = 50.0;
  k.m[1][2] = 50.0;
  CHECK_THROWS_AS(CameraModel(k, bad_rot, {0, 0, 0}, 100, 100),
                  std::invalid_argument);
}

TEST_CASE("sample sets pad and truncate by confidence") {
  const GridSpec spec = symmetric_grid(5, 2.5);
  const std::vector<CameraModel> cameras{CameraModel::from_center_look(
      800, 800, 800, 450, {0, 0, 1.6}, 0.0, 0.3, 0.0, 1600, 900)};

  SUBCASE("empty history gives an all-padding set") {
    const TrackState state = track_with_history(spec);
    const SampleSet set = build_sample_set(state, cameras, 0.5, 8);
    CHECK(set.bev.empty());
    CHECK(set.pad_mask == std::vector<bool>(8, false));
  }
  SUBCASE("three valid cells, l_max 8") {
    TrackState state = track_with_history(spec);
    state.history.at(0, 0) = 0.9;
    state.history.at(2, 2) = 0.8;
    state.history.at(4, 4) = 0.7;
    const SampleSet set = build_sample_set(state, cameras, 0.5, 8);
    CHECK(set.bev.size() == 3);
    int real = 0;
    for (bool b : set.pad_mask) real += b;
    CHECK(real == 3);
    CHECK(set.pad_mask[0]);
    CHECK(set.pad_mask[2]);
    CHECK_FALSE(set.pad_mask[3]);
    CHECK(set.pv.size() == 1);
    CHECK(set.pv[0].size() == 3);
  }
  SUBCASE("twelve valid cells keep the eight most confident") {
    TrackState state = track_with_history(spec);
    int placed = 0;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 3; ++c) {
        state.history.at(r, c) = 0.55 + 0.03 * placed;
        ++placed;
      }
    }
    REQUIRE(placed == 12);
    const SampleSet set = build_sample_set(state, cameras, 0.5, 8);
    REQUIRE(set.bev.size() == 8);
    // The four weakest cells (0.55..0.64) live in rows 0 and 1; everything
    // kept must come from the high-confidence tail.
    for (Point2 p : set.bev) {
      const int row = static_cast<int>((p.y - spec.y_min) / spec.cell_height());
      CHECK(row >= 1);
    }
  }
  SUBCASE("row-major emission is deterministic") {
    TrackState state = track_with_history(spec);
    state.history.at(3, 1) = 0.9;
    state.history.at(1, 3) = 0.9;
    const SampleSet a = build_sample_set(state, cameras, 0.5, 4);
    const SampleSet b = build_sample_set(state, cameras, 0.5, 4);
    CHECK(a.bev[0] == b.bev[0]);
    CHECK(a.bev[0].y < a.bev[1].y);  // row-major: lower row first
  }
}

TEST_CASE("sample set json shape") {
  const GridSpec spec = symmetric_grid(5, 2.5);
  TrackState state = track_with_history(spec);
  state.history.at(2, 2) = 0.9;
  const std::vector<CameraModel> cameras{CameraModel::from_center_look(
      800, 800, 800, 450, {0, 0, 1.6}, 0.0, 0.3, 0.0, 1600, 900)};
  const SampleSet set = build_sample_set(state, cameras, 0.5, 4);
  const nlohmann::json j = sample_set_to_json(set);
  CHECK(j["track_id"] == 5);
  CHECK(j["bev"].size() == 4);
  CHECK(j["mask"].size() == 4);
  CHECK(j["pv"].size() == 1);
  CHECK(j["pv"][0]["uv"].size() == 4);
  CHECK(j["mask"][0] == true);
  CHECK(j["mask"][1] == false);
}

}  // TEST_SUITE
