#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histmap/grid.hpp"

namespace histmap {

/// One frame of a scene file: ego pose, local ground truth (ids in the
/// track_id field are the stable global instance ids), and optionally the
/// predicted elements (ids are association ids).
struct SceneFrame {
  int frame_index = 0;
  Pose2 ego_pose;
  std::vector<MapElement> gt;
  std::optional<std::vector<MapElement>> pred;
};

struct ScenarioSpec {
  std::string trajectory = "straight";  // straight | turn | loop
  int frames = 50;
  double step = 1.0;  // meters of travel per frame
  int dividers = 2;
  int boundaries = 2;
  int pedestrians = 3;
  GridSpec grid = GridSpec::bev_default();

  void validate() const;
  nlohmann::json to_json() const;
  static ScenarioSpec from_json(const nlohmann::json& j);
};

/// Deterministic synthetic world: global ground-truth elements with stable
/// ids plus the ego trajectory. Everything derives from (spec, seed).
struct Scenario {
  ScenarioSpec spec;
  std::uint64_t seed = 0;
  std::vector<Pose2> trajectory;
  std::vector<MapElement> gt;  // global frame, track_id = instance id
};

/// Builds the scenario. Elements whose visibility across the trajectory is
/// empty or non-contiguous are discarded, so every surviving instance is
/// observable in one unbroken frame window.
Scenario generate(const ScenarioSpec& spec, std::uint64_t seed);

/// Ground truth visible at one frame: every element transformed into the
/// ego frame and clipped to the BEV extent. Clipped polylines keep the
/// longest surviving piece (>= 2 points); polygons are truncated against the
/// extent box and dropped when degenerate.
SceneFrame crop_frame(const Scenario& scenario, int frame_index);

struct PerturbationModel {
  double jitter_sigma = 0.0;   // meters, per point
  double score_sigma = 0.0;    // score = clamp(1 - |N(0, sigma^2)|)
  double dropout = 0.0;        // per instance per frame
  double fp_rate = 0.0;        // expected injected false positives per frame
  double id_switch = 0.0;      // per instance per frame
  int n_points = 0;            // resample predictions to this count (0: keep)

  void validate() const;
  nlohmann::json to_json() const;
};

/// Turns one frame's ground truth into predictions. Fully deterministic:
/// every random draw comes from a substream keyed on (seed, purpose,
/// frame, instance), so enabling one perturbation never changes the draws
/// of another and dropout sets nest as the rate grows. Injected false
/// positives land inside `extent`.
std::vector<MapElement> perturb(const SceneFrame& frame_gt,
                                const PerturbationModel& model,
                                std::uint64_t seed,
                                const GridSpec& extent = GridSpec::bev_default());

/// Scene file container (header grid + frames).
struct Scene {
  int version = 1;
  GridSpec grid;
  std::vector<SceneFrame> frames;
};

/// generate + crop + perturb over the whole trajectory.
Scene simulate(const ScenarioSpec& spec, const PerturbationModel& model,
               std::uint64_t seed);

}  // namespace histmap
