#include <cstdio>
#include <sstream>

#include "commands.hpp"
#include "edgedet/errors.hpp"
#include "edgedet/lcnn/complexity.hpp"
#include "edgedet/lcnn/model_io.hpp"
#include "json.hpp"

namespace edgedet::cli {

namespace {

std::string reduction_text(const std::optional<double>& r) {
  if (!r) return "N/A";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *r);
  return buf;
}

std::string render_table(const lcnn::Analysis& a, std::uint64_t conventional_params) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%5s  %-9s  %3s  %6s  %6s  %6s  %5s  %14s  %16s  %9s  %10s\n",
                "layer", "op", "k", "in", "out", "stride", "side", "macs", "conventional_macs",
                "reduction", "params");
  out << line << std::string(std::string(line).size() - 1, '-') << '\n';
  for (const auto& r : a.rows) {
    std::snprintf(line, sizeof line,
                  "%5d  %-9s  %3d  %6d  %6d  %6d  %5d  %14llu  %16llu  %9s  %10llu\n", r.index,
                  lcnn::to_string(r.op).c_str(), r.kernel, r.in_channels, r.out_channels, r.stride,
                  r.out_side, static_cast<unsigned long long>(r.macs),
                  static_cast<unsigned long long>(r.conventional_macs),
                  reduction_text(r.reduction).c_str(), static_cast<unsigned long long>(r.params));
    out << line;
  }
  std::snprintf(line, sizeof line, "%-47s  %14llu  %16llu  %9s  %10llu\n", "total",
                static_cast<unsigned long long>(a.total_macs),
                static_cast<unsigned long long>(a.total_conventional_macs),
                reduction_text(a.overall_reduction).c_str(),
                static_cast<unsigned long long>(a.total_params));
  out << line;
  out << "conv layers: " << a.rows.size() << "\nall-conventional params: " << conventional_params
      << '\n';
  return out.str();
}

}  // namespace

int cmd_analyze(const RunConfig& cfg) {
  lcnn::Architecture arch;
  if (cfg.inputs.empty() && cfg.model.empty()) {
    lcnn::LcnnConfig lc;
    lc.width_multiplier = cfg.analyze_width;
    lc.input_size = cfg.input_size;
    arch = lcnn::architecture_of(lcnn::build_lcnn(lc));
  } else if (!cfg.model.empty()) {
    arch = lcnn::architecture_of(lcnn::load_model(cfg.model));
  } else {
    if (cfg.inputs.size() != 1) throw ConfigError("analyze takes one architecture file");
    arch = lcnn::load_architecture(cfg.inputs.front());
  }
  const auto analysis = lcnn::analyze(arch.layers);
  const auto conventional_params = lcnn::all_conventional_params(arch.layers);

  if (cfg.format == "table") {
    emit(cfg, render_table(analysis, conventional_params));
    return kOk;
  }
  const char* cols[] = {"layer", "op", "kernel", "in", "out", "stride", "side", "macs",
                        "conventional_macs", "reduction", "params"};
  if (cfg.format == "json") {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : analysis.rows) {
      rows.push_back({{cols[0], r.index},
                      {cols[1], lcnn::to_string(r.op)},
                      {cols[2], r.kernel},
                      {cols[3], r.in_channels},
                      {cols[4], r.out_channels},
                      {cols[5], r.stride},
                      {cols[6], r.out_side},
                      {cols[7], r.macs},
                      {cols[8], r.conventional_macs},
                      {cols[9], r.reduction ? nlohmann::ordered_json(*r.reduction)
                                            : nlohmann::ordered_json(nullptr)},
                      {cols[10], r.params}});
    }
    nlohmann::ordered_json doc{{"layers", std::move(rows)},
                               {"total",
                                {{"macs", analysis.total_macs},
                                 {"conventional_macs", analysis.total_conventional_macs},
                                 {"reduction", analysis.overall_reduction},
                                 {"params", analysis.total_params}}},
                               {"all_conventional_params", conventional_params}};
    emit(cfg, doc.dump(2) + "\n");
    return kOk;
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < std::size(cols); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : analysis.rows)
    out << r.index << ',' << lcnn::to_string(r.op) << ',' << r.kernel << ',' << r.in_channels
        << ',' << r.out_channels << ',' << r.stride << ',' << r.out_side << ',' << r.macs << ','
        << r.conventional_macs << ',' << reduction_text(r.reduction) << ',' << r.params << '\n';
  out << "total,,,,,,," << analysis.total_macs << ',' << analysis.total_conventional_macs << ','
      << reduction_text(analysis.overall_reduction) << ',' << analysis.total_params << '\n';
  emit(cfg, out.str());
  return kOk;
}

}  // namespace edgedet::cli
