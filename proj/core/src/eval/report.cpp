#include "edgedet/eval/report.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "edgedet/errors.hpp"
#include "json.hpp"

namespace edgedet::eval {

namespace {

using Field = std::optional<double> EvalReport::*;

struct Column {
  const char* name;
  Field field;
};

constexpr Column kMetrics[] = {
    {"fps_avg", &EvalReport::fps_avg}, {"fps_peak", &EvalReport::fps_peak},
    {"cpu_avg", &EvalReport::cpu_avg}, {"mem_peak", &EvalReport::mem_peak},
    {"fpr", &EvalReport::fpr},         {"fnr", &EvalReport::fnr}};

// Shortest text that parses back to the same double.
std::string exact(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fixed(const std::optional<double>& v, int digits) {
  if (!v) return "N/A";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  return buf;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw FormatError("not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string render_table(std::span<const EvalReport> rows) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"detector", "fps_avg", "fps_peak", "cpu_avg%", "mem_peak_mb", "fpr%", "fnr%",
                   "frames", "duration_s", "source"});
  for (const auto& r : rows) {
    std::vector<std::string> line{r.detector};
    for (const auto& c : kMetrics) line.push_back(fixed(r.*c.field, 2));
    line.push_back(std::to_string(r.frames));
    line.push_back(fixed(r.duration, 2));
    line.push_back(r.source);
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& line : cells)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());

  std::ostringstream out;
  for (std::size_t n = 0; n < cells.size(); ++n) {
    for (std::size_t i = 0; i < cells[n].size(); ++i) {
      const auto& s = cells[n][i];
      if (i == 0 || i + 1 == cells[n].size())
        out << s << std::string(width[i] - s.size(), ' ');
      else
        out << std::string(width[i] - s.size(), ' ') << s;
      out << (i + 1 == cells[n].size() ? "" : "  ");
    }
    out << '\n';
    if (n == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace

std::vector<EvalReport> published_reference() {
  auto row = [](std::string name) {
    EvalReport r;
    r.detector = std::move(name);
    r.source = "published";
    return r;
  };
  std::vector<EvalReport> out;
  auto lcnn = row("lcnn");
  lcnn.fps_avg = 1.79;
  lcnn.fps_peak = 2.06;
  lcnn.fpr = 6.6;
  lcnn.fnr = 18.1;
  lcnn.mem_peak = 139.5;
  out.push_back(lcnn);
  auto haar = row("haar");
  haar.fpr = 26.3;
  haar.fnr = 34.9;
  out.push_back(haar);
  auto google = row("ssd-googlenet");
  google.fps_avg = 0.39;
  google.fpr = 5.3;
  google.fnr = 15.6;
  google.mem_peak = 320.4;
  out.push_back(google);
  for (const auto& [name, mb] : {std::pair{"mobilenet", 172.2}, std::pair{"squeezenet", 145.3},
                                 std::pair{"vgg", 2459.8}}) {
    auto r = row(name);
    r.mem_peak = mb;
    out.push_back(r);
  }
  return out;
}

std::optional<EvalReport> published_for(const std::string& detector) {
  for (auto& r : published_reference())
    if (r.detector == detector) return r;
  return std::nullopt;
}

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "table") return ReportFormat::table;
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw ConfigError("unknown report format '" + name + "'");
}

std::string emit_report(std::span<const EvalReport> reports, ReportFormat format,
                        bool with_reference) {
  std::vector<EvalReport> rows(reports.begin(), reports.end());
  if (with_reference)
    for (auto& r : published_reference()) rows.push_back(std::move(r));

  switch (format) {
    case ReportFormat::table: return render_table(rows);
    case ReportFormat::json: {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const auto& r : rows) {
        nlohmann::ordered_json j{{"detector", r.detector}};
        for (const auto& c : kMetrics) {
          const auto& v = r.*c.field;
          j[c.name] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
        }
        j["frames"] = r.frames;
        j["duration"] = r.duration;
        j["source"] = r.source;
        arr.push_back(std::move(j));
      }
      return nlohmann::ordered_json{{"reports", std::move(arr)}}.dump(2) + "\n";
    }
    case ReportFormat::csv: {
      std::ostringstream out;
      out << "detector";
      for (const auto& c : kMetrics) out << ',' << c.name;
      out << ",frames,duration,source\n";
      for (const auto& r : rows) {
        out << csv_quote(r.detector);
        for (const auto& c : kMetrics) {
          const auto& v = r.*c.field;
          out << ',' << (v ? exact(*v) : "N/A");
        }
        out << ',' << r.frames << ',' << exact(r.duration) << ',' << csv_quote(r.source) << '\n';
      }
      return out.str();
    }
  }
  return {};
}

std::vector<EvalReport> reports_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    std::vector<EvalReport> out;
    for (const auto& j : doc.at("reports")) {
      EvalReport r;
      r.detector = j.at("detector").get<std::string>();
      for (const auto& c : kMetrics) {
        const auto& v = j.at(c.name);
        if (!v.is_null()) r.*c.field = v.get<double>();
      }
      r.frames = j.at("frames").get<std::size_t>();
      r.duration = j.at("duration").get<double>();
      r.source = j.value("source", "measured");
      out.push_back(std::move(r));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report json: ") + e.what());
  }
}

std::vector<EvalReport> reports_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty csv report");
  const auto header = split_csv(line);
  if (header.size() != 10 || header.front() != "detector")
    throw FormatError("unexpected csv report header");
  std::vector<EvalReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw FormatError("csv row has wrong column count");
    EvalReport r;
    r.detector = cells[0];
    for (std::size_t i = 0; i < std::size(kMetrics); ++i)
      if (cells[i + 1] != "N/A") r.*kMetrics[i].field = parse_double(cells[i + 1]);
    r.frames = static_cast<std::size_t>(parse_double(cells[7]));
    r.duration = parse_double(cells[8]);
    r.source = cells[9];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace edgedet::eval
