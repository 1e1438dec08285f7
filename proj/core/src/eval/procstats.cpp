#include "edgedet/eval/procstats.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "edgedet/errors.hpp"

namespace edgedet::eval {

std::optional<ProcSnapshot> read_process(pid_t pid) {
  const std::string base = "/proc/" + std::to_string(pid);
  std::ifstream stat(base + "/stat");
  std::string line;
  if (!stat || !std::getline(stat, line)) return std::nullopt;
  // The command name may contain spaces; fields resume after the last ')'.
  const auto close = line.rfind(')');
  if (close == std::string::npos) return std::nullopt;
  std::istringstream fields(line.substr(close + 2));
  std::string f;
  unsigned long long utime = 0;
  unsigned long long stime = 0;
  for (int i = 3; i <= 15 && fields >> f; ++i) {
    if (i == 14) utime = std::stoull(f);
    if (i == 15) stime = std::stoull(f);
  }
  if (!fields) return std::nullopt;

  ProcSnapshot s;
  s.cpu_seconds = static_cast<double>(utime + stime) / static_cast<double>(sysconf(_SC_CLK_TCK));
  std::ifstream status(base + "/status");
  while (std::getline(status, line)) {
    if (line.rfind("VmRSS:", 0) == 0) {
      s.rss_mb = std::stod(line.substr(6)) / 1024.0;
      break;
    }
  }
  return s;
}

double ProcSeries::cpu_avg() const {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) sum += s.cpu_percent;
  return sum / static_cast<double>(samples.size());
}

double ProcSeries::cpu_peak() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.cpu_percent);
  return m;
}

double ProcSeries::rss_peak() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.rss_mb);
  return m;
}

double ProcSeries::rss_avg() const {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) sum += s.rss_mb;
  return sum / static_cast<double>(samples.size());
}

ProcessSampler::ProcessSampler(pid_t pid, std::chrono::milliseconds period)
    : pid_(pid), period_(period) {
  if (period.count() <= 0) throw ConfigError("sampling period must be positive");
}

ProcessSampler::~ProcessSampler() {
  if (running_) stop();
}

void ProcessSampler::start() {
  if (running_) return;
  series_ = {};
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

ProcSeries ProcessSampler::stop() {
  running_ = false;
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(mutex_);
  return series_;
}

void ProcessSampler::run() {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto prev = read_process(pid_);
  if (!prev) {
    std::lock_guard lock(mutex_);
    series_.partial = true;
    running_ = false;
    return;
  }
  {
    std::lock_guard lock(mutex_);
    series_.baseline_rss_mb = prev->rss_mb;
  }
  auto prev_t = t0;
  for (auto next = t0 + period_; running_; next += period_) {
    std::this_thread::sleep_until(next);
    if (!running_) break;
    const auto now = clock::now();
    const auto snap = read_process(pid_);
    std::lock_guard lock(mutex_);
    if (!snap) {
      series_.partial = true;
      break;
    }
    const double dt = std::chrono::duration<double>(now - prev_t).count();
    const double cpu = dt > 0.0 ? 100.0 * (snap->cpu_seconds - prev->cpu_seconds) / dt : 0.0;
    series_.samples.push_back(
        {std::chrono::duration<double>(now - t0).count(), std::max(0.0, cpu), snap->rss_mb});
    prev = snap;
    prev_t = now;
  }
  running_ = false;
}

ProcSeries sample_process_stats(pid_t pid, std::chrono::milliseconds period,
                                std::chrono::milliseconds duration) {
  ProcessSampler sampler(pid, period);
  sampler.start();
  const auto until = std::chrono::steady_clock::now() + duration;
  while (sampler.active() && std::chrono::steady_clock::now() < until) {
    std::this_thread::sleep_for(std::min(period, std::chrono::milliseconds(50)));
  }
  return sampler.stop();
}

}  // namespace edgedet::eval
