#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "histmap/grid.hpp"

namespace histmap {

struct TrackerConfig {
  double tau_det = 0.4;    // birth gate
  double tau_track = 0.5;  // continuation gate
  double lambda = 0.95;    // history decay per update
  int patience = 0;        // extra missed frames tolerated before removal
  bool additive_update = false;
  GridSpec spec = GridSpec::bev_default();

  void validate() const;
};

/// Lifecycle record of one live instance.
struct TrackState {
  std::int64_t track_id = 0;
  Category category = Category::kDivider;
  HistoryMap history;
  double last_score = 0.0;
  int birth_frame = 0;
  int frames_tracked = 0;
  int misses = 0;
};

struct TrackSnapshot {
  int frame_index = 0;
  Pose2 ego_pose;
  MapElement element;  // local (ego-frame) geometry, carries the score
};

/// Full per-frame geometry of one track, kept for removed tracks too so the
/// global merge can reconstruct trajectories.
struct TrackRecord {
  std::int64_t track_id = 0;
  Category category = Category::kDivider;
  int birth_frame = 0;
  std::vector<TrackSnapshot> snapshots;
};

/// One frame of decoder output. Elements without a track id are birth
/// candidates; elements with one must reference a live track.
struct FrameObservation {
  std::vector<MapElement> elements;
  Pose2 ego_pose;
  int frame_index = 0;
};

struct TrackerOutput {
  std::vector<std::int64_t> born;
  std::vector<std::int64_t> continued;
  std::vector<std::int64_t> removed;
  int live_count = 0;
};

/// Maintains the live instance set and one history map per instance.
/// Per frame: warp every live history into the new ego frame, then birth
/// (no id, score > tau_det), continue (live id, score > tau_track, history
/// refreshed through the decayed update), and finally remove every live
/// track that saw no gate-passing element. Ids are assigned sequentially
/// and never reused.
class Tracker {
 public:
  explicit Tracker(TrackerConfig config = {});

  TrackerOutput step(const FrameObservation& obs);

  /// Every track seen so far (live and removed), ordered by id.
  std::vector<TrackRecord> export_tracks() const;

  int live_count() const { return static_cast<int>(live_.size()); }
  const TrackState* find(std::int64_t track_id) const;
  const std::map<std::int64_t, TrackState>& live_tracks() const {
    return live_;
  }
  const TrackerConfig& config() const { return config_; }

  /// Live-set summary (ids, categories, scores, frame indices).
  nlohmann::json snapshot_json() const;

  /// One PGM per live track under dir, named track_<id>.pgm.
  void dump_rasters(const std::filesystem::path& dir) const;

 private:
  TrackerConfig config_;
  std::int64_t next_id_ = 0;
  int last_frame_ = -1;
  std::optional<Pose2> last_pose_;
  std::map<std::int64_t, TrackState> live_;
  std::map<std::int64_t, TrackRecord> records_;
};

}  // namespace histmap
