#include "histmap/tracker.hpp"

#include <set>
#include <stdexcept>

namespace histmap {

void TrackerConfig::validate() const {
  if (!(tau_det >= 0.0 && tau_det <= 1.0) ||
      !(tau_track >= 0.0 && tau_track <= 1.0)) {
    throw std::invalid_argument("tracker thresholds outside [0,1]");
  }
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("tracker lambda outside (0,1]");
  }
  if (patience < 0) throw std::invalid_argument("negative patience");
  spec.validate();
}

Tracker::Tracker(TrackerConfig config) : config_(std::move(config)) {
  config_.validate();
}

TrackerOutput Tracker::step(const FrameObservation& obs) {
  if (obs.frame_index <= last_frame_) {
    throw std::invalid_argument("non-monotone frame index");
  }
  if (!is_finite(obs.ego_pose.translation) ||
      !std::isfinite(obs.ego_pose.rotation)) {
    throw std::invalid_argument("non-finite ego pose");
  }

  std::set<std::int64_t> referenced;
  for (const MapElement& e : obs.elements) {
    if (!e.track_id) continue;
    if (!live_.count(*e.track_id)) {
      throw std::invalid_argument("unknown track id " +
                                  std::to_string(*e.track_id));
    }
    if (!referenced.insert(*e.track_id).second) {
      throw std::invalid_argument("duplicate track id " +
                                  std::to_string(*e.track_id) +
                                  " in one frame");
    }
  }

  // Align every live history with the new ego position before updating.
  if (last_pose_ && !(*last_pose_ == obs.ego_pose)) {
    for (auto& [id, state] : live_) {
      state.history = warp(state.history, *last_pose_, obs.ego_pose);
    }
  }

  TrackerOutput out;
  std::set<std::int64_t> refreshed;
  for (const MapElement& e : obs.elements) {
    if (e.track_id) {
      if (e.score > config_.tau_track) {
        TrackState& state = live_.at(*e.track_id);
        HistoryMap fresh = rasterize(e, config_.spec, e.score);
        fresh.last_update_frame = obs.frame_index;
        state.history = config_.additive_update
                            ? decay_update_additive(state.history, fresh,
                                                    config_.lambda)
                            : decay_update(state.history, fresh,
                                           config_.lambda);
        state.last_score = e.score;
        state.frames_tracked += 1;
        state.misses = 0;
        refreshed.insert(*e.track_id);
        out.continued.push_back(*e.track_id);
        records_.at(*e.track_id)
            .snapshots.push_back({obs.frame_index, obs.ego_pose, e});
      }
      // Below the tracking gate the element does not rescue its track; the
      // removal pass below drops it.
    } else if (e.score > config_.tau_det) {
      const std::int64_t id = next_id_++;
      TrackState state;
      state.track_id = id;
      state.category = e.category;
      state.history = rasterize(e, config_.spec, e.score);
      state.history.last_update_frame = obs.frame_index;
      state.last_score = e.score;
      state.birth_frame = obs.frame_index;
      state.frames_tracked = 1;
      live_.emplace(id, std::move(state));
      refreshed.insert(id);
      out.born.push_back(id);
      TrackRecord record{id, e.category, obs.frame_index, {}};
      record.snapshots.push_back({obs.frame_index, obs.ego_pose, e});
      records_.emplace(id, std::move(record));
    }
  }

  for (auto it = live_.begin(); it != live_.end();) {
    if (refreshed.count(it->first)) {
      ++it;
      continue;
    }
    TrackState& state = it->second;
    state.misses += 1;
    if (state.misses > config_.patience) {
      out.removed.push_back(it->first);
      it = live_.erase(it);  // history map dropped with the state
    } else {
      ++it;
    }
  }

  out.live_count = static_cast<int>(live_.size());
  last_frame_ = obs.frame_index;
  last_pose_ = obs.ego_pose;
  return out;
}

std::vector<TrackRecord> Tracker::export_tracks() const {
  std::vector<TrackRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, record] : records_) out.push_back(record);
  return out;
}

const TrackState* Tracker::find(std::int64_t track_id) const {
  auto it = live_.find(track_id);
  return it == live_.end() ? nullptr : &it->second;
}

nlohmann::json Tracker::snapshot_json() const {
  nlohmann::json tracks = nlohmann::json::array();
  for (const auto& [id, state] : live_) {
    tracks.push_back({{"track_id", id},
                      {"category", to_string(state.category)},
                      {"last_score", state.last_score},
                      {"birth_frame", state.birth_frame},
                      {"frames_tracked", state.frames_tracked},
                      {"last_update_frame", state.history.last_update_frame}});
  }
  return nlohmann::json{{"live_count", static_cast<int>(live_.size())},
                        {"next_id", next_id_},
                        {"frame_index", last_frame_},
                        {"tracks", std::move(tracks)}};
}

void Tracker::dump_rasters(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [id, state] : live_) {
    write_pgm(state.history, dir / ("track_" + std::to_string(id) + ".pgm"));
  }
}

}  // namespace histmap
