#include <doctest.h>

#include <stdexcept>

#include <set>

#include "histmap/tracker.hpp"

using namespace histmap;

namespace {

MapElement obs(double score, std::optional<std::int64_t> id = std::nullopt,
               double x = 0.0) {
  return MapElement(Polyline({{x, -4.0}, {x, 6.0}}), Category::kDivider,
                    score, id);
}

FrameObservation frame(int index, std::vector<MapElement> elements) {
  return FrameObservation{std::move(elements), Pose2(0.0, index * 1.0, 0.0),
                          index};
}

}  // namespace

TEST_SUITE("tracker") {

TEST_CASE("birth gate uses tau_det") {
  Tracker tracker;  // tau_det 0.4, tau_track 0.5
  const TrackerOutput out =
      tracker.step(frame(0, {obs(0.9, {}, -2.0), obs(0.5), obs(0.3, {}, 2.0)}));
  CHECK(out.born.size() == 2);
  CHECK(out.continued.empty());
  CHECK(out.removed.empty());
  CHECK(out.live_count == 2);
}

TEST_CASE("continuation refreshes the history") {
  Tracker tracker;
  const auto first = tracker.step(frame(0, {obs(0.9)}));
  REQUIRE(first.born.size() == 1);
  const std::int64_t id = first.born[0];

  const auto second = tracker.step(frame(1, {obs(0.6, id)}));
  CHECK(second.continued == std::vector<std::int64_t>{id});
  CHECK(second.live_count == 1);
  const TrackState* state = tracker.find(id);
  REQUIRE(state != nullptr);
  CHECK(state->frames_tracked == 2);
  CHECK(state->last_score == 0.6);
  CHECK(state->history.last_update_frame == 1);
  CHECK(state->history.count_above(0.0) > 0);
}

TEST_CASE("a missed frame removes the track; re-detection gets a new id") {
  Tracker tracker;
  const auto first = tracker.step(frame(0, {obs(0.9)}));
  const std::int64_t id = first.born[0];

  const auto second = tracker.step(frame(1, {}));
  CHECK(second.removed == std::vector<std::int64_t>{id});
  CHECK(second.live_count == 0);
  CHECK(tracker.find(id) == nullptr);

  const auto third = tracker.step(frame(2, {obs(0.9)}));
  REQUIRE(third.born.size() == 1);
  CHECK(third.born[0] != id);
}

TEST_CASE("score at or below tau_track does not rescue a track") {
  Tracker tracker;
  const auto first = tracker.step(frame(0, {obs(0.9)}));
  const std::int64_t id = first.born[0];
  const auto second = tracker.step(frame(1, {obs(0.5, id)}));  // gate is strict
  CHECK(second.continued.empty());
  CHECK(second.removed == std::vector<std::int64_t>{id});
}

TEST_CASE("patience keeps a silent track alive") {
  TrackerConfig config;
  config.patience = 1;
  Tracker tracker(config);
  const auto first = tracker.step(frame(0, {obs(0.9)}));
  const std::int64_t id = first.born[0];
  const auto second = tracker.step(frame(1, {}));
  CHECK(second.removed.empty());
  CHECK(second.live_count == 1);
  const auto third = tracker.step(frame(2, {obs(0.8, id)}));
  CHECK(third.continued == std::vector<std::int64_t>{id});
  const auto fourth = tracker.step(frame(3, {}));
  const auto fifth = tracker.step(frame(4, {}));
  CHECK(fifth.removed == std::vector<std::int64_t>{id});
}

TEST_CASE("export covers live and removed tracks") {
  Tracker tracker;
  CHECK(tracker.export_tracks().empty());

  auto out = tracker.step(frame(0, {obs(0.9)}));
  const std::int64_t id = out.born[0];
  for (int i = 1; i < 5; ++i) tracker.step(frame(i, {obs(0.8, id)}));
  tracker.step(frame(5, {}));  // removes the track
  tracker.step(frame(6, {obs(0.7)}));

  const auto records = tracker.export_tracks();
  REQUIRE(records.size() == 2);
  CHECK(records[0].track_id == id);
  CHECK(records[0].snapshots.size() == 5);
  CHECK(records[0].snapshots[4].frame_index == 4);
  CHECK(records[1].snapshots.size() == 1);
}

TEST_CASE("input validation") {
  Tracker tracker;
  tracker.step(frame(0, {obs(0.9)}));
  CHECK_THROWS_AS(tracker.step(frame(0, {})), std::invalid_argument);
  CHECK_THROWS_AS(tracker.step(frame(1, {obs(0.8, 999)})),
                  std::invalid_argument);
  const std::int64_t id = 0;
  CHECK_THROWS_AS(tracker.step(frame(1, {obs(0.8, id), obs(0.7, id)})),
                  std::invalid_argument);
}

TEST_CASE("accounting identity and id freshness over random streams") {
  std::uint64_t state = 42;
  const auto next = [&state]() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  };

  Tracker tracker;
  std::set<std::int64_t> seen;
  std::vector<std::int64_t> live_ids;
  int live = 0;
  for (int f = 0; f < 60; ++f) {
    std::vector<MapElement> elements;
    std::vector<std::int64_t> keep;
    for (std::int64_t id : live_ids) {
      if (next() < 0.7) {
        elements.push_back(obs(0.6 + 0.4 * next(), id));
        keep.push_back(id);
      }
    }
    const int births = static_cast<int>(next() * 3);
    for (int b = 0; b < births; ++b) {
      elements.push_back(obs(0.5 + 0.5 * next(), {}, next() * 10 - 5));
    }
    const TrackerOutput out = tracker.step(
        FrameObservation{elements, Pose2(0, 0.5 * f, 0.01 * f), f});

    CHECK(out.live_count ==
          live + static_cast<int>(out.born.size()) -
              static_cast<int>(out.removed.size()));
    live = out.live_count;
    for (std::int64_t id : out.born) {
      CHECK(!seen.count(id));  // ids are never reused
      seen.insert(id);
    }
    live_ids.clear();
    for (const auto& [id, st] : tracker.live_tracks()) live_ids.push_back(id);
  }
}

TEST_CASE("identical streams give identical outputs") {
  const auto run = []() {
    Tracker tracker;
    std::vector<TrackerOutput> outs;
    outs.push_back(tracker.step(frame(0, {obs(0.9), obs(0.7, {}, 3.0)})));
    outs.push_back(tracker.step(frame(1, {obs(0.8, 0)})));
    outs.push_back(tracker.step(frame(2, {obs(0.8, 0), obs(0.9, {}, -3.0)})));
    return std::make_pair(outs, tracker.snapshot_json().dump());
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.second == b.second);
  REQUIRE(a.first.size() == b.first.size());
  for (std::size_t i = 0; i < a.first.size(); ++i) {
    CHECK(a.first[i].born == b.first[i].born);
    CHECK(a.first[i].continued == b.first[i].continued);
    CHECK(a.first[i].removed == b.first[i].removed);
  }
}

}  // TEST_SUITE
