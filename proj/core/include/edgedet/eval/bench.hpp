#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "edgedet/eval/procstats.hpp"

namespace edgedet::eval {

/// Processes frame `index` (the caller maps indices onto its frame set).
using FrameProcessor = std::function<void(std::size_t index)>;

struct BenchOptions {
  double duration_s = 30.0;
  std::size_t warmup_frames = 3;
};

struct FpsResult {
  std::size_t frames = 0;  // timed frames, warm-up excluded
  double duration = 0.0;   // seconds from first timed frame start to last end
  double fps_avg = 0.0;
  double fps_peak = 0.0;
  /// Frames per one-second bucket; a trailing bucket shorter than half a
  /// second is folded into its predecessor.
  std::vector<double> bucket_fps;
};

/// Peak and per-bucket rates from frame completion times (seconds after
/// the timed start) and the total elapsed time.
FpsResult fps_from_timestamps(std::span<const double> completions, double elapsed);

/// Cycles through `frame_count` frames until `duration_s` has elapsed.
/// ConfigError for a duration under one second, InputError for no frames.
FpsResult bench_fps(const FrameProcessor& process, std::size_t frame_count,
                    const BenchOptions& opts = {});

struct BenchRun {
  FpsResult fps;
  ProcSeries stats;
};

/// bench_fps with this process sampled concurrently.
BenchRun bench_with_stats(const FrameProcessor& process, std::size_t frame_count,
                          const BenchOptions& opts = {},
                          std::chrono::milliseconds period = std::chrono::milliseconds(100));

}  // namespace edgedet::eval
