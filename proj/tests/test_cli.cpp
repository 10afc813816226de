#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "histmap/cli.hpp"
#include "histmap/render.hpp"
#include "histmap/scene_io.hpp"

using namespace histmap;

namespace {

std::filesystem::path work_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "histmap_cli";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

int count_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  int n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

Scene tiny_scene(const PerturbationModel& model, std::uint64_t seed,
                 int frames = 12) {
  ScenarioSpec spec;
  spec.frames = frames;
  return simulate(spec, model, seed);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate is deterministic and honors the perturbation flags") {
  const auto dir = work_dir();
  std::ostringstream err;

  SimulateOptions options;
  options.seed = 4;
  options.out = (dir / "a.jsonl").string();
  REQUIRE(run_simulate(options, err) == 0);
  options.out = (dir / "b.jsonl").string();
  REQUIRE(run_simulate(options, err) == 0);
  CHECK(file_bytes(dir / "a.jsonl") == file_bytes(dir / "b.jsonl"));

  // 50-frame default scenario: header plus one record per frame.
  CHECK(count_lines(dir / "a.jsonl") == 51);

  SUBCASE("full dropout empties the prediction arrays") {
    options.model.dropout = 1.0;
    options.out = (dir / "drop.jsonl").string();
    REQUIRE(run_simulate(options, err) == 0);
    const Scene scene = read_scene(dir / "drop.jsonl");
    for (const SceneFrame& frame : scene.frames) {
      REQUIRE(frame.pred.has_value());
      CHECK(frame.pred->empty());
    }
  }
  SUBCASE("a bad spec fails with a message") {
    const auto bad = dir / "bad_spec.json";
    std::ofstream(bad) << R"({"frames":0})";
    SimulateOptions broken;
    broken.config_path = bad.string();
    broken.out = (dir / "never.jsonl").string();
    std::ostringstream msg;
    CHECK(run_simulate(broken, msg) == 1);
    CHECK(msg.str().find("frame") != std::string::npos);
  }
}

TEST_CASE("track produces a lifecycle log with the default thresholds") {
  const auto dir = work_dir();
  std::ostringstream err;

  // Loop world: every instance stays in view, so perfect predictions mean
  // zero removals for the whole sequence.
  const auto spec_path = dir / "loop_spec.json";
  std::ofstream(spec_path) << R"({"trajectory":"loop","step":0.6})";
  SimulateOptions sim;
  sim.seed = 6;
  sim.config_path = spec_path.string();
  sim.out = (dir / "scene.jsonl").string();
  REQUIRE(run_simulate(sim, err) == 0);

  TrackOptions track;
  track.scene_path = sim.out;
  track.out = (dir / "tracks.jsonl").string();
  REQUIRE(run_track(track, err) == 0);

  std::ifstream log(dir / "tracks.jsonl.log");
  std::string line;
  REQUIRE(std::getline(log, line));
  const auto header = nlohmann::json::parse(line);
  CHECK(header["tau_det"] == 0.4);
  CHECK(header["tau_track"] == 0.5);
  CHECK(header["lambda"] == 0.95);

  // Perfect predictions: no removals in any step record.
  while (std::getline(log, line)) {
    const auto step = nlohmann::json::parse(line);
    CHECK(step["removed"].empty());
  }
}

TEST_CASE("a saturated tracking gate kills every track after birth") {
  const Scene scene = tiny_scene(PerturbationModel{}, 8);
  TrackerConfig config;
  config.tau_track = 1.0;  // scores never exceed 1.0, so the strict gate fails
  std::vector<TrackerOutput> log;
  const auto tracks = track_scene(scene, config, &log);
  for (const TrackRecord& track : tracks) {
    CHECK(track.snapshots.size() == 1);
  }
  for (std::size_t f = 1; f < log.size(); ++f) {
    CHECK(log[f].removed.size() == log[f - 1].born.size());
  }
}

TEST_CASE("track rejects scenes without predictions and malformed files") {
  const auto dir = work_dir();
  std::ostringstream err;

  Scene gt_only = tiny_scene(PerturbationModel{}, 3, 4);
  for (SceneFrame& frame : gt_only.frames) frame.pred.reset();
  write_scene(gt_only, dir / "gt_only.jsonl");
  TrackOptions track;
  track.scene_path = (dir / "gt_only.jsonl").string();
  track.out = (dir / "t.jsonl").string();
  CHECK(run_track(track, err) == 1);
  CHECK(err.str().find("no prediction records") != std::string::npos);

  std::ofstream(dir / "broken.jsonl") << "{}\nnot json\n";
  track.scene_path = (dir / "broken.jsonl").string();
  std::ostringstream err2;
  CHECK(run_track(track, err2) == 1);
  CHECK(err2.str().find(":1:") != std::string::npos);  // line number
}

TEST_CASE("eval runs both modes and dumps match traces") {
  const auto dir = work_dir();
  std::ostringstream err;

  SimulateOptions sim;
  sim.seed = 9;
  sim.out = (dir / "escene.jsonl").string();
  REQUIRE(run_simulate(sim, err) == 0);
  TrackOptions track;
  track.scene_path = sim.out;
  track.out = (dir / "etracks.jsonl").string();
  REQUIRE(run_track(track, err) == 0);

  EvalOptions eval;
  eval.scene_path = sim.out;
  eval.tracks_path = track.out;
  eval.mode = "frame";
  eval.out = (dir / "frame.json").string();
  std::ostringstream out1;
  REQUIRE(run_eval(eval, out1, err) == 0);
  const auto frame_report =
      nlohmann::json::parse(file_bytes(dir / "frame.json"));
  CHECK(frame_report["sequence_mean_map"] == 100.0);

  eval.mode = "global";
  eval.out = (dir / "global.json").string();
  eval.dump_matches = (dir / "matches.jsonl").string();
  std::ostringstream out2;
  REQUIRE(run_eval(eval, out2, err) == 0);
  const auto global_report =
      nlohmann::json::parse(file_bytes(dir / "global.json"));
  CHECK(global_report["g_map"].get<double>() >= 99.0);

  // One trace per polyline (category, tau_dis) pair plus one per polygon
  // IoU threshold: 2*4 + 3.
  CHECK(count_lines(dir / "matches.jsonl") == 11);
}

TEST_CASE("render writes the svg and per-category layers") {
  const auto dir = work_dir() / "render";
  std::filesystem::remove_all(dir);
  std::ostringstream err;

  SimulateOptions sim;
  sim.seed = 12;
  sim.out = (work_dir() / "rscene.jsonl").string();
  REQUIRE(run_simulate(sim, err) == 0);
  TrackOptions track;
  track.scene_path = sim.out;
  track.out = (work_dir() / "rtracks.jsonl").string();
  REQUIRE(run_track(track, err) == 0);

  RenderOptions render;
  render.scene_path = sim.out;
  render.tracks_path = track.out;
  render.out_dir = dir.string();
  REQUIRE(run_render(render, err) == 0);
  CHECK(std::filesystem::exists(dir / "global_map.svg"));
  CHECK(std::filesystem::exists(dir / "global_gt_divider.pgm"));
  CHECK(std::filesystem::exists(dir / "track_0.pgm"));

  SUBCASE("empty scene renders a blank canvas") {
    Scene empty;
    empty.grid = GridSpec::bev_default();
    write_scene(empty, work_dir() / "empty.jsonl");
    RenderOptions blank;
    blank.scene_path = (work_dir() / "empty.jsonl").string();
    blank.out_dir = (work_dir() / "render_empty").string();
    REQUIRE(run_render(blank, err) == 0);
    const std::string svg =
        file_bytes(work_dir() / "render_empty" / "global_map.svg");
    CHECK(svg.find("<rect") != std::string::npos);
    CHECK(svg.find("<polyline") == std::string::npos);
  }
  SUBCASE("one divider yields exactly one polyline path") {
    Scene one;
    one.grid = GridSpec::bev_default();
    SceneFrame frame;
    frame.frame_index = 0;
    frame.gt.push_back(MapElement(Polyline({{0, -5}, {0, 5}}),
                                  Category::kDivider, 1.0, 0));
    one.frames.push_back(frame);
    write_scene(one, work_dir() / "one.jsonl");
    RenderOptions single;
    single.scene_path = (work_dir() / "one.jsonl").string();
    single.out_dir = (work_dir() / "render_one").string();
    REQUIRE(run_render(single, err) == 0);
    const std::string svg =
        file_bytes(work_dir() / "render_one" / "global_map.svg");
    std::size_t count = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
      ++count;
      pos += 1;
    }
    CHECK(count == 1);
  }
}

TEST_CASE("track colors are deterministic functions of the id") {
  CHECK(track_color(42) == track_color(42));
  CHECK(track_color(1) != track_color(2));
}

TEST_CASE("simulate/track/eval compose deterministically via files") {
  const auto dir = work_dir() / "determinism";
  std::filesystem::create_directories(dir);
  std::ostringstream err;

  const auto run_all = [&](const std::string& tag) {
    SimulateOptions sim;
    sim.seed = 21;
    sim.model.jitter_sigma = 0.15;
    sim.model.dropout = 0.1;
    sim.out = (dir / ("scene_" + tag + ".jsonl")).string();
    REQUIRE(run_simulate(sim, err) == 0);
    TrackOptions track;
    track.scene_path = sim.out;
    track.out = (dir / ("tracks_" + tag + ".jsonl")).string();
    REQUIRE(run_track(track, err) == 0);
    EvalOptions eval;
    eval.scene_path = sim.out;
    eval.tracks_path = track.out;
    eval.mode = "global";
    eval.out = (dir / ("report_" + tag + ".json")).string();
    std::ostringstream sink;
    REQUIRE(run_eval(eval, sink, err) == 0);
  };
  run_all("x");
  run_all("y");
  CHECK(file_bytes(dir / "scene_x.jsonl") == file_bytes(dir / "scene_y.jsonl"));
  CHECK(file_bytes(dir / "tracks_x.jsonl") ==
        file_bytes(dir / "tracks_y.jsonl"));
  CHECK(file_bytes(dir / "report_x.json") == file_bytes(dir / "report_y.json"));
}

}  // TEST_SUITE
