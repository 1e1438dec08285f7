#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace edgedet::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kFormatError = 3, kDataError = 4 };

struct RunConfig {
  std::string detector = "lcnn";
  std::string model;
  std::vector<std::string> inputs;
  std::string output;
  std::string annotations;
  std::string truth;
  std::string format = "table";
  std::uint64_t seed = 42;
  int jobs = 1;
  double conf = 0.5;
  std::optional<double> nms_iou;  // per-detector default when unset
  double iou = 0.5;
  bool paper_ref = false;

  // detect
  std::string overlay_dir;
  int step = 4;
  double scale_factor = 1.25;
  std::string merge = "nms";
  double score_threshold = 0.0;

  // train
  int rounds = 10;
  int stages = 1;
  int epochs = 50;
  double lambda = 1e-3;
  int steps = 200;
  double lr = 0.05;
  double width = 0.25;
  int input_size = 224;
  double validation = 0.15;

  // analyze
  double analyze_width = 1.0;

  // bench
  double duration = 30.0;
  double stub_ms = 100.0;
};

int cmd_detect(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_bench(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_analyze(const RunConfig& cfg);

/// Writes to cfg.output, or standard output when it is empty.
void emit(const RunConfig& cfg, const std::string& text);

}  // namespace edgedet::cli
