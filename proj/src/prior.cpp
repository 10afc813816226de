#include "histmap/prior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace histmap {
namespace {

constexpr double kMinDepth = 1e-9;

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double sum = 0.0;
      for (int k = 0; k < 3; ++k) sum += a.m[i][k] * b.m[k][j];
      out.m[i][j] = sum;
    }
  }
  return out;
}

bool approximately_orthonormal(const Mat3& r) {
  const Mat3 rtr = multiply(r.transposed(), r);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double expected = i == j ? 1.0 : 0.0;
      if (std::abs(rtr.m[i][j] - expected) > 1e-6) return false;
    }
  }
  return true;
}

}  // namespace

Mat3 Mat3::identity() {
  Mat3 out;
  out.m = {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
  return out;
}

Vec3 Mat3::apply(const Vec3& v) const {
  return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
          m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
          m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

Mat3 Mat3::transposed() const {
  Mat3 out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out.m[i][j] = m[j][i];
  }
  return out;
}

CameraModel::CameraModel(Mat3 k, Mat3 r, Vec3 t, int width, int height)
    : intrinsics(k),
      rotation(r),
      translation(t),
      image_width(width),
      image_height(height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("CameraModel: empty image");
  }
  const double fx = k.m[0][0], fy = k.m[1][1];
  const double cx = k.m[0][2], cy = k.m[1][2];
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw std::invalid_argument("CameraModel: non-positive focal length");
  }
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
    throw std::invalid_argument("CameraModel: principal point outside image");
  }
  if (k.m[0][1] != 0.0 || k.m[1][0] != 0.0 || k.m[2][0] != 0.0 ||
      k.m[2][1] != 0.0 || k.m[2][2] != 1.0) {
    throw std::invalid_argument("CameraModel: malformed intrinsics");
  }
  if (!approximately_orthonormal(r)) {
    throw std::invalid_argument("CameraModel: rotation not orthonormal");
  }
}

CameraModel CameraModel::from_center_look(double fx, double fy, double cx,
                                          double cy, Vec3 center, double yaw,
                                          double pitch, double roll,
                                          int image_width, int image_height) {
  // View direction in the ego frame; yaw 0 = +y (forward), pitch > 0 down.
  const Vec3 forward{std::sin(yaw) * std::cos(pitch),
                     std::cos(yaw) * std::cos(pitch), -std::sin(pitch)};
  // Right vector before roll: horizontal, perpendicular to forward.
  Vec3 right{std::cos(yaw), -std::sin(yaw), 0.0};
  Vec3 down{forward.y * right.z - forward.z * right.y,
            forward.z * right.x - forward.x * right.z,
            forward.x * right.y - forward.y * right.x};
  // Apply roll about the forward axis.
  const double cr = std::cos(roll), sr = std::sin(roll);
  const Vec3 right_r{right.x * cr + down.x * sr, right.y * cr + down.y * sr,
                     right.z * cr + down.z * sr};
  const Vec3 down_r{down.x * cr - right.x * sr, down.y * cr - right.y * sr,
                    down.z * cr - right.z * sr};

  Mat3 rotation;  // rows are the camera axes expressed in ego coordinates
  rotation.m = {{{right_r.x, right_r.y, right_r.z},
                 {down_r.x, down_r.y, down_r.z},
                 {forward.x, forward.y, forward.z}}};
  const Vec3 t = rotation.apply({-center.x, -center.y, -center.z});

  Mat3 k = Mat3::identity();
  k.m[0][0] = fx;
  k.m[1][1] = fy;
  k.m[0][2] = cx;
  k.m[1][2] = cy;
  return CameraModel(k, rotation, t, image_width, image_height);
}

std::vector<Point2> bev_samples(const ValidMask& mask, const GridSpec& spec) {
  if (!(mask.spec == spec)) {
    throw std::invalid_argument("bev_samples: mask/spec mismatch");
  }
  std::vector<Point2> out;
  out.reserve(mask.cells.size());
  for (auto [row, col] : mask.cells) {
    if (!spec.contains(row, col)) {
      throw std::invalid_argument("bev_samples: cell index out of bounds");
    }
    out.push_back(spec.cell_center(row, col));
  }
  return out;
}

std::vector<PvSample> project_to_pv(std::span<const Point2> points,
                                    const CameraModel& camera) {
  std::vector<PvSample> out;
  out.reserve(points.size());
  for (Point2 p : points) {
    const Vec3 cam = camera.rotation.apply({p.x, p.y, 0.0});
    const Vec3 c{cam.x + camera.translation.x, cam.y + camera.translation.y,
                 cam.z + camera.translation.z};
    PvSample sample;
    if (c.z > kMinDepth) {
      const double u =
          camera.intrinsics.m[0][0] * (c.x / c.z) + camera.intrinsics.m[0][2];
      const double v =
          camera.intrinsics.m[1][1] * (c.y / c.z) + camera.intrinsics.m[1][2];
      if (u >= 0.0 && u < camera.image_width && v >= 0.0 &&
          v < camera.image_height) {
        sample = {u, v, true};
      }
    }
    out.push_back(sample);
  }
  return out;
}

std::optional<Point2> back_project_ground(double u, double v,
                                          const CameraModel& camera) {
  const double fx = camera.intrinsics.m[0][0];
  const double fy = camera.intrinsics.m[1][1];
  const double cx = camera.intrinsics.m[0][2];
  const double cy = camera.intrinsics.m[1][2];
  const Vec3 dir_cam{(u - cx) / fx, (v - cy) / fy, 1.0};
  const Mat3 ego_from_cam = camera.rotation.transposed();
  const Vec3 dir = ego_from_cam.apply(dir_cam);
  const Vec3 origin = ego_from_cam.apply(
      {-camera.translation.x, -camera.translation.y, -camera.translation.z});
  if (std::abs(dir.z) < 1e-15) return std::nullopt;
  const double s = -origin.z / dir.z;
  if (s <= 0.0) return std::nullopt;
  return Point2{origin.x + s * dir.x, origin.y + s * dir.y};
}

SampleSet build_sample_set(const TrackState& track,
                           const std::vector<CameraModel>& cameras,
                           double tau_map, std::size_t l_max) {
  if (l_max < 1) throw std::invalid_argument("build_sample_set: l_max < 1");
  const ValidMask mask = valid_mask(track.history, tau_map);

  // Keep the l_max highest-confidence cells; ties resolve row-major. The
  // survivors are emitted in row-major order.
  std::vector<std::size_t> order(mask.cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     const auto [ra, ca] = mask.cells[a];
                     const auto [rb, cb] = mask.cells[b];
                     return track.history.at(ra, ca) > track.history.at(rb, cb);
                   });
  if (order.size() > l_max) order.resize(l_max);
  std::sort(order.begin(), order.end());

  SampleSet set;
  set.track_id = track.track_id;
  set.l_max = l_max;
  set.bev.reserve(order.size());
  for (std::size_t idx : order) {
    const auto [row, col] = mask.cells[idx];
    set.bev.push_back(track.history.spec.cell_center(row, col));
  }
  set.pv.reserve(cameras.size());
  for (const CameraModel& camera : cameras) {
    set.pv.push_back(project_to_pv(set.bev, camera));
  }
  set.pad_mask.assign(l_max, false);
  for (std::size_t i = 0; i < set.bev.size(); ++i) set.pad_mask[i] = true;
  return set;
}

nlohmann::json sample_set_to_json(const SampleSet& set) {
  nlohmann::json bev = nlohmann::json::array();
  for (std::size_t i = 0; i < set.l_max; ++i) {
    if (i < set.bev.size()) {
      bev.push_back({set.bev[i].x, set.bev[i].y});
    } else {
      bev.push_back({0.0, 0.0});
    }
  }
  nlohmann::json pv = nlohmann::json::array();
  for (const auto& cam_samples : set.pv) {
    nlohmann::json uv = nlohmann::json::array();
    nlohmann::json visible = nlohmann::json::array();
    for (std::size_t i = 0; i < set.l_max; ++i) {
      if (i < cam_samples.size() && cam_samples[i].visible) {
        uv.push_back({cam_samples[i].u, cam_samples[i].v});
        visible.push_back(true);
      } else {
        uv.push_back({0.0, 0.0});
        visible.push_back(false);
      }
    }
    pv.push_back({{"uv", std::move(uv)}, {"visible", std::move(visible)}});
  }
  nlohmann::json mask = nlohmann::json::array();
  for (bool real : set.pad_mask) mask.push_back(real);
  return nlohmann::json{{"track_id", set.track_id},
                        {"bev", std::move(bev)},
                        {"pv", std::move(pv)},
                        {"mask", std::move(mask)}};
}

}  // namespace histmap
