#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "edgedet/errors.hpp"

using namespace edgedet;
using namespace edgedet::cli;

namespace {

void shared_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--model", cfg.model, "Model file");
  cmd->add_option("--input", cfg.inputs, "Input images or directories")->expected(1, -1);
  cmd->add_option("--output", cfg.output, "Output path (default: standard output)");
  cmd->add_option("--format", cfg.format, "Report format")
      ->check(CLI::IsMember({"table", "json", "csv"}));
  cmd->add_option("--seed", cfg.seed, "Random seed");
  cmd->add_option("--jobs", cfg.jobs, "Worker threads for per-image work")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--conf", cfg.conf, "Confidence threshold in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--nms-iou", cfg.nms_iou, "NMS IoU threshold in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_flag("--paper-ref", cfg.paper_ref, "Append published reference figures");
}

void detector_flag(CLI::App* cmd, RunConfig& cfg, bool allow_stub = false) {
  std::vector<std::string> names = {"haar", "hogsvm", "lcnn"};
  if (allow_stub) names.push_back("stub");
  cmd->add_option("--detector", cfg.detector, "Detector family")->check(CLI::IsMember(names));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pedestrian detection toolkit: Haar cascade, HOG+SVM and L-CNN"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* detect = app.add_subcommand("detect", "Run a detector over images");
  shared_flags(detect, cfg);
  detector_flag(detect, cfg);
  detect->add_option("--overlay", cfg.overlay_dir, "Directory for PPM copies with boxes drawn");
  detect->add_option("--step", cfg.step, "Sliding-window step (haar, hogsvm)")
      ->check(CLI::PositiveNumber);
  detect->add_option("--scale-factor", cfg.scale_factor, "Pyramid factor (haar, hogsvm)");
  detect->add_option("--merge", cfg.merge, "Duplicate merge rule (hogsvm)")
      ->check(CLI::IsMember({"nms", "biggest-box"}));
  detect->add_option("--score-threshold", cfg.score_threshold, "SVM margin threshold (hogsvm)");

  auto* train = app.add_subcommand("train", "Train a detector on an annotated image directory");
  shared_flags(train, cfg);
  detector_flag(train, cfg);
  train->add_option("--annotations", cfg.annotations, "Annotation file (default <dir>/annotations.txt)");
  train->add_option("--rounds", cfg.rounds, "AdaBoost rounds per stage (haar)");
  train->add_option("--stages", cfg.stages, "Cascade stages (haar)");
  train->add_option("--epochs", cfg.epochs, "SVM epochs (hogsvm)");
  train->add_option("--lambda", cfg.lambda, "SVM regularisation (hogsvm)");
  train->add_option("--steps", cfg.steps, "SGD steps (lcnn)");
  train->add_option("--lr", cfg.lr, "Learning rate (lcnn)");
  train->add_option("--width", cfg.width, "Width multiplier (lcnn)");
  train->add_option("--input-size", cfg.input_size, "Network input side (lcnn)");
  train->add_option("--validation", cfg.validation, "Held-out fraction (lcnn)");

  auto* bench = app.add_subcommand("bench", "Time a detector over frames and sample CPU/memory");
  shared_flags(bench, cfg);
  detector_flag(bench, cfg, true);
  bench->add_option("--duration", cfg.duration, "Timed run length in seconds");
  bench->add_option("--stub-ms", cfg.stub_ms, "Per-frame sleep of the stub detector");
  bench->add_option("--step", cfg.step, "Sliding-window step (haar, hogsvm)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--scale-factor", cfg.scale_factor, "Pyramid factor (haar, hogsvm)");

  auto* eval = app.add_subcommand("eval", "Score detections against ground truth");
  shared_flags(eval, cfg);
  eval->add_option("--detector", cfg.detector, "Name reported for the detections");
  eval->add_option("--truth", cfg.truth, "Ground-truth annotation file")->required();
  eval->add_option("--iou", cfg.iou, "Match IoU threshold");

  auto* analyze = app.add_subcommand("analyze", "Per-layer MAC and parameter analysis");
  shared_flags(analyze, cfg);
  analyze->add_option("--width", cfg.analyze_width, "Width multiplier for the built-in network");
  analyze->add_option("--input-size", cfg.input_size, "Input side for the built-in network");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*detect) return cmd_detect(cfg);
    if (*train) return cmd_train(cfg);
    if (*bench) return cmd_bench(cfg);
    if (*eval) return cmd_eval(cfg);
    if (*analyze) return cmd_analyze(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InputError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const Error& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kFormatError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}
