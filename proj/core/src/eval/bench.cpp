#include "edgedet/eval/bench.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>

#include "edgedet/errors.hpp"

namespace edgedet::eval {

FpsResult fps_from_timestamps(std::span<const double> completions, double elapsed) {
  FpsResult r;
  r.frames = completions.size();
  r.duration = elapsed;
  if (r.frames == 0 || !(elapsed > 0.0)) return r;
  r.fps_avg = static_cast<double>(r.frames) / elapsed;

  // Buckets [k, k+1) partition [0, elapsed]; a short tail joins the bucket
  // before it so that a lone frame in a sliver of time cannot fake a peak.
  const auto whole = static_cast<std::size_t>(std::floor(elapsed));
  const double tail = elapsed - static_cast<double>(whole);
  std::vector<double> lengths(whole, 1.0);
  if (tail > 0.0) {
    if (tail < 0.5 && !lengths.empty())
      lengths.back() += tail;
    else
      lengths.push_back(tail);
  }
  std::vector<std::size_t> counts(lengths.size(), 0);
  for (double t : completions) {
    auto k = static_cast<std::size_t>(std::max(0.0, std::floor(t)));
    counts[std::min(k, counts.size() - 1)] += 1;
  }
  for (std::size_t k = 0; k < counts.size(); ++k) {
    r.bucket_fps.push_back(static_cast<double>(counts[k]) / lengths[k]);
    r.fps_peak = std::max(r.fps_peak, r.bucket_fps.back());
  }
  return r;
}

FpsResult bench_fps(const FrameProcessor& process, std::size_t frame_count,
                    const BenchOptions& opts) {
  if (!(opts.duration_s >= 1.0)) throw ConfigError("benchmark duration must be at least 1 s");
  if (frame_count == 0) throw InputError("no frames to benchmark");
  using clock = std::chrono::steady_clock;

  std::size_t index = 0;
  for (std::size_t i = 0; i < opts.warmup_frames; ++i) process(index++ % frame_count);

  std::vector<double> completions;
  const auto t0 = clock::now();
  double elapsed = 0.0;
  while (elapsed < opts.duration_s) {
    process(index++ % frame_count);
    elapsed = std::chrono::duration<double>(clock::now() - t0).count();
    completions.push_back(elapsed);
  }
  return fps_from_timestamps(completions, elapsed);
}

BenchRun bench_with_stats(const FrameProcessor& process, std::size_t frame_count,
                          const BenchOptions& opts, std::chrono::milliseconds period) {
  ProcessSampler sampler(getpid(), period);
  sampler.start();
  BenchRun run;
  try {
    run.fps = bench_fps(process, frame_count, opts);
  } catch (...) {
    sampler.stop();
    throw;
  }
  run.stats = sampler.stop();
  return run;
}

}  // namespace edgedet::eval
