#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "histmap/scene_io.hpp"

using namespace histmap;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "histmap_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::filesystem::path write_lines(const std::string& name,
                                  const std::vector<std::string>& lines) {
  const auto path = temp_file(name);
  std::ofstream out(path);
  for (const auto& line : lines) out << line << "\n";
  return path;
}

}  // namespace

TEST_SUITE("scene_io") {

TEST_CASE("golden fixture parses with the documented shape") {
  const Scene scene =
      read_scene(std::filesystem::path(HISTMAP_TEST_DATA_DIR) /
                 "golden_scene.jsonl");
  CHECK(scene.version == 1);
  CHECK(scene.grid.height == 200);
  CHECK(scene.grid.width == 100);
  CHECK(scene.grid.x_min == -15.0);
  REQUIRE(scene.frames.size() == 2);
  const SceneFrame& f0 = scene.frames[0];
  CHECK(f0.frame_index == 0);
  REQUIRE(f0.gt.size() == 2);
  CHECK(f0.gt[0].category == Category::kDivider);
  CHECK(f0.gt[0].track_id == 0);
  CHECK(f0.gt[1].is_polygon());
  REQUIRE(f0.pred.has_value());
  REQUIRE(f0.pred->size() == 1);
  CHECK((*f0.pred)[0].score == 0.97);
  CHECK(scene.frames[1].pred->empty());
}

TEST_CASE("scene write/read round-trip") {
  Scene scene;
  scene.grid = GridSpec::bev_default();
  SceneFrame frame;
  frame.frame_index = 3;
  frame.ego_pose = Pose2(1.5, -2.0, 0.25);
  frame.gt.push_back(MapElement(Polyline({{0, 0}, {3, 1}}),
                                Category::kBoundary, 1.0, 4));
  frame.pred = std::vector<MapElement>{MapElement(
      Polyline({{0.1, 0}, {3, 1.1}}), Category::kBoundary, 0.8, 4)};
  scene.frames.push_back(frame);

  const auto path = temp_file("roundtrip.jsonl");
  write_scene(scene, path);
  const Scene back = read_scene(path);
  REQUIRE(back.frames.size() == 1);
  CHECK(back.frames[0].frame_index == 3);
  CHECK(back.frames[0].ego_pose == scene.frames[0].ego_pose);
  CHECK(back.frames[0].gt[0].vertices() == frame.gt[0].vertices());
  CHECK((*back.frames[0].pred)[0].score == 0.8);
}

TEST_CASE("parse errors carry line numbers") {
  SUBCASE("broken json") {
    const auto path = write_lines(
        "broken.jsonl",
        {R"({"type":"header","version":1,"bev":{"height":2,"width":2,"x_range":[0,1],"y_range":[0,1]}})",
         "{not json"});
    try {
      read_scene(path);
      FAIL("expected throw");
    } catch (const SceneParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("unknown version") {
    const auto path = write_lines(
        "version.jsonl",
        {R"({"type":"header","version":9,"bev":{"height":2,"width":2,"x_range":[0,1],"y_range":[0,1]}})"});
    CHECK_THROWS_AS(read_scene(path), SceneParseError);
  }
  SUBCASE("frame indices must increase") {
    const auto path = write_lines(
        "order.jsonl",
        {R"({"type":"header","version":1,"bev":{"height":2,"width":2,"x_range":[0,1],"y_range":[0,1]}})",
         R"({"type":"frame","frame_index":1,"ego_pose":{"x":0,"y":0,"theta":0},"gt":[]})",
         R"({"type":"frame","frame_index":1,"ego_pose":{"x":0,"y":0,"theta":0},"gt":[]})"});
    try {
      read_scene(path);
      FAIL("expected throw");
    } catch (const SceneParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("missing header") {
    const auto path = write_lines(
        "noheader.jsonl",
        {R"({"type":"frame","frame_index":0,"ego_pose":{"x":0,"y":0,"theta":0},"gt":[]})"});
    CHECK_THROWS_AS(read_scene(path), SceneParseError);
  }
}

TEST_CASE("tracks write/read round-trip with config echo") {
  TrackRecord track;
  track.track_id = 2;
  track.category = Category::kDivider;
  track.birth_frame = 1;
  track.snapshots.push_back(
      {1, Pose2(0, 1, 0),
       MapElement(Polyline({{0, 0}, {2, 0}}), Category::kDivider, 0.9, 2)});
  track.snapshots.push_back(
      {2, Pose2(0, 2, 0),
       MapElement(Polyline({{0, 0}, {2, 0.1}}), Category::kDivider, 0.7, 2)});

  TrackerConfig config;
  config.tau_det = 0.35;
  const auto path = temp_file("tracks.jsonl");
  write_tracks(std::vector<TrackRecord>{track}, config, path);

  TrackerConfig echoed;
  const auto back = read_tracks(path, &echoed);
  REQUIRE(back.size() == 1);
  CHECK(back[0].track_id == 2);
  CHECK(back[0].category == Category::kDivider);
  REQUIRE(back[0].snapshots.size() == 2);
  CHECK(back[0].snapshots[1].element.score == 0.7);
  CHECK(back[0].snapshots[1].frame_index == 2);
  CHECK(echoed.tau_det == 0.35);
}

}  // TEST_SUITE
