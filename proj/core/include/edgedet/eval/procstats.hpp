#pragma once

#include <sys/types.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace edgedet::eval {

/// Cumulative CPU time and resident set size from /proc/<pid>.
struct ProcSnapshot {
  double cpu_seconds = 0.0;  // user + system
  double rss_mb = 0.0;
};

/// std::nullopt once the process is gone.
std::optional<ProcSnapshot> read_process(pid_t pid);

struct ProcSample {
  double time = 0.0;         // seconds since sampling started
  double cpu_percent = 0.0;  // over the preceding period, 100 = one core
  double rss_mb = 0.0;
};

struct ProcSeries {
  std::vector<ProcSample> samples;
  /// Set when the process vanished before sampling was stopped.
  bool partial = false;
  double baseline_rss_mb = 0.0;

  double cpu_avg() const;
  double cpu_peak() const;
  double rss_peak() const;
  double rss_avg() const;
};

/// Background thread taking one sample per period until stop().
class ProcessSampler {
 public:
  ProcessSampler(pid_t pid, std::chrono::milliseconds period);
  ~ProcessSampler();
  ProcessSampler(const ProcessSampler&) = delete;
  ProcessSampler& operator=(const ProcessSampler&) = delete;

  void start();
  ProcSeries stop();
  /// False once stopped or once the process has gone.
  bool active() const { return running_; }

 private:
  void run();

  pid_t pid_;
  std::chrono::milliseconds period_;
  std::atomic<bool> running_{false};
  std::thread thread_;
  std::mutex mutex_;
  ProcSeries series_;
};

/// Samples `pid` for `duration`, blocking the caller. ConfigError for a
/// non-positive period.
ProcSeries sample_process_stats(pid_t pid, std::chrono::milliseconds period,
                                std::chrono::milliseconds duration);

}  // namespace edgedet::eval
