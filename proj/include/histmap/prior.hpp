#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "histmap/grid.hpp"
#include "histmap/tracker.hpp"

namespace histmap {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct Mat3 {
  // row-major
  std::array<std::array<double, 3>, 3> m{};

  static Mat3 identity();
  Vec3 apply(const Vec3& v) const;
  Mat3 transposed() const;
};

/// Pinhole camera: 3x3 intrinsics plus a camera-from-ego rigid transform
/// (p_cam = R * p_ego + t). Camera convention: +z forward, +x right, +y down.
struct CameraModel {
  Mat3 intrinsics;  // [[fx,0,cx],[0,fy,cy],[0,0,1]]
  Mat3 rotation;    // camera-from-ego
  Vec3 translation;
  int image_width = 1600;
  int image_height = 900;

  CameraModel(Mat3 intrinsics, Mat3 rotation, Vec3 translation,
              int image_width, int image_height);

  /// Builds the extrinsics from the camera center (ego frame, meters) and
  /// yaw/pitch/roll of the viewing direction. Yaw 0 looks along ego +y,
  /// positive pitch tilts the view down toward the ground.
  static CameraModel from_center_look(double fx, double fy, double cx,
                                      double cy, Vec3 center, double yaw,
                                      double pitch, double roll,
                                      int image_width, int image_height);
};

struct PvSample {
  double u = 0.0;
  double v = 0.0;
  bool visible = false;
};

/// Ego-frame cell-center coordinate of every valid cell, row-major.
std::vector<Point2> bev_samples(const ValidMask& mask, const GridSpec& spec);

/// Lifts each BEV point onto the z=0 ground plane and projects it into the
/// image. visible=false when the point is behind the camera or lands
/// outside the image; u/v are then meaningless and must stay masked.
std::vector<PvSample> project_to_pv(std::span<const Point2> points,
                                    const CameraModel& camera);

/// Casts pixel (u, v) back onto the z=0 ground plane. nullopt when the ray
/// never hits the ground in front of the camera.
std::optional<Point2> back_project_ground(double u, double v,
                                          const CameraModel& camera);

/// Per-track sampling coordinates with a fixed padded length. bev/pv hold
/// only the real entries; pad_mask has length l_max with the real entries
/// flagged first.
struct SampleSet {
  std::int64_t track_id = 0;
  std::vector<Point2> bev;
  std::vector<std::vector<PvSample>> pv;  // per camera, aligned with bev
  std::size_t l_max = 0;
  std::vector<bool> pad_mask;
};

/// Valid-mask cells of the track's history (threshold tau_map), truncated to
/// the l_max highest-confidence cells (ties row-major), emitted row-major,
/// projected into every camera.
SampleSet build_sample_set(const TrackState& track,
                           const std::vector<CameraModel>& cameras,
                           double tau_map, std::size_t l_max);

/// Padded JSON form (schema documented in docs/format.md).
nlohmann::json sample_set_to_json(const SampleSet& set);

}  // namespace histmap
