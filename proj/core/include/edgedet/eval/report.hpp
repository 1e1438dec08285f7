#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edgedet::eval {

/// One comparison row. Fields a run did not measure stay empty and print
/// as N/A.
struct EvalReport {
  std::string detector;
  std::optional<double> fps_avg;
  std::optional<double> fps_peak;
  std::optional<double> cpu_avg;   // percent of one core
  std::optional<double> mem_peak;  // MB resident
  std::optional<double> fpr;       // percent
  std::optional<double> fnr;       // percent
  std::size_t frames = 0;
  double duration = 0.0;           // seconds
  std::string source = "measured"; // or "published"

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Published figures for the compared detectors (Raspberry Pi 3 runs,
/// memory measured on a desktop).
std::vector<EvalReport> published_reference();
/// Published row matching a detector name (haar, lcnn, ...), if any.
std::optional<EvalReport> published_for(const std::string& detector);

enum class ReportFormat { table, json, csv };
ReportFormat report_format_from_string(const std::string& name);

/// Columns: detector, fps_avg, fps_peak, cpu_avg, mem_peak, fpr, fnr,
/// frames, duration, source. With `with_reference` the published rows are
/// appended after the measured ones.
std::string emit_report(std::span<const EvalReport> reports, ReportFormat format,
                        bool with_reference = false);

/// Inverse of the json and csv emitters. FormatError on malformed input.
std::vector<EvalReport> reports_from_json(const std::string& text);
std::vector<EvalReport> reports_from_csv(const std::string& text);

}  // namespace edgedet::eval
