#include <iostream>

#include <CLI11.hpp>

#include "histmap/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Instance-level history-map tracking and global HD-map "
               "evaluation toolkit"};
  app.require_subcommand(1);

  histmap::SimulateOptions sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic scene file (JSONL)");
  simulate->add_option("--config", sim.config_path,
                       "Scenario spec JSON (defaults when omitted)");
  simulate->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output scene JSONL")->required();
  simulate->add_option("--jitter", sim.model.jitter_sigma,
                       "Point jitter sigma, meters");
  simulate->add_option("--score-noise", sim.model.score_sigma,
                       "Score noise sigma");
  simulate->add_option("--dropout", sim.model.dropout,
                       "Per-instance dropout probability");
  simulate->add_option("--fp-rate", sim.model.fp_rate,
                       "Expected injected false positives per frame");
  simulate->add_option("--id-switch", sim.model.id_switch,
                       "Per-instance id switch probability");
  simulate->add_option("--np", sim.model.n_points,
                       "Resample predictions to this point count (0 keeps "
                       "the source vertices)");

  histmap::TrackOptions trk;
  CLI::App* track = app.add_subcommand(
      "track", "Run the instance lifecycle tracker over a scene");
  track->add_option("--scene", trk.scene_path, "Input scene JSONL")
      ->required();
  track->add_option("--config", trk.config_path, "Tracker config JSON");
  track->add_option("--out", trk.out, "Output tracks JSONL")->required();
  track->add_option("--log", trk.log_path,
                    "Lifecycle log path (default <out>.log)");

  histmap::EvalOptions evl;
  CLI::App* eval = app.add_subcommand(
      "eval", "Evaluate tracks against a scene (frame mAP or global G-mAP)");
  eval->add_option("--scene", evl.scene_path, "Input scene JSONL")->required();
  eval->add_option("--tracks", evl.tracks_path, "Input tracks JSONL")
      ->required();
  eval->add_option("--mode", evl.mode, "frame | global")
      ->check(CLI::IsMember({"frame", "global"}))
      ->capture_default_str();
  eval->add_option("--config", evl.config_path, "Eval config JSON");
  eval->add_option("--out", evl.out, "Report JSON path");
  eval->add_option("--dump-matches", evl.dump_matches,
                   "Write per-instance match traces (JSONL)");

  histmap::RenderOptions rnd;
  CLI::App* render = app.add_subcommand(
      "render", "Render global map SVG/PGM images from a scene");
  render->add_option("--scene", rnd.scene_path, "Input scene JSONL")
      ->required();
  render->add_option("--tracks", rnd.tracks_path, "Optional tracks JSONL");
  render->add_option("--config", rnd.config_path, "Eval config JSON");
  render->add_option("--out-dir", rnd.out_dir, "Output directory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) return histmap::run_simulate(sim, std::cerr);
  if (track->parsed()) return histmap::run_track(trk, std::cerr);
  if (eval->parsed()) return histmap::run_eval(evl, std::cout, std::cerr);
  if (render->parsed()) return histmap::run_render(rnd, std::cerr);
  return 1;
}
