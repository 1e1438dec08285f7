#include <zlib.h>

#include <fstream>
#include <sstream>

#include "edgedet/errors.hpp"
#include "edgedet/haar.hpp"
#include "json.hpp"

namespace edgedet::haar {

namespace {

constexpr int kCascadeVersion = 1;
using nlohmann::json;

// CRC32 of the compact dump of every field except the checksum itself.
std::uint32_t content_crc(json doc) {
  doc.erase("crc32");
  const std::string text = doc.dump();
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size())));
}

}  // namespace

std::string to_json(const CascadeModel& model) {
  json stages = json::array();
  for (const auto& stage : model.stages) {
    json learners = json::array();
    for (const auto& l : stage.learners) {
      json rects = json::array();
      for (const auto& r : l.feature.rects) rects.push_back({r.x, r.y, r.w, r.h, r.weight});
      learners.push_back({{"kind", to_string(l.feature.kind)},
                          {"rects", rects},
                          {"threshold", l.threshold},
                          {"polarity", l.polarity},
                          {"alpha", l.alpha}});
    }
    stages.push_back({{"threshold", stage.threshold}, {"learners", learners}});
  }
  json doc = {{"version", kCascadeVersion},
              {"window", {model.window_w, model.window_h}},
              {"stages", stages}};
  doc["crc32"] = content_crc(doc);
  return doc.dump(1);
}

CascadeModel cascade_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("version").get<int>() != kCascadeVersion)
      throw FormatError("unsupported cascade version");
    if (doc.at("crc32").get<std::uint32_t>() != content_crc(doc))
      throw FormatError("cascade checksum mismatch");
    CascadeModel model;
    model.window_w = doc.at("window").at(0).get<int>();
    model.window_h = doc.at("window").at(1).get<int>();
    for (const auto& js : doc.at("stages")) {
      Stage stage;
      stage.threshold = js.at("threshold").get<double>();
      for (const auto& jl : js.at("learners")) {
        WeakLearner l;
        l.feature.kind = feature_kind_from_string(jl.at("kind").get<std::string>());
        l.feature.window_w = model.window_w;
        l.feature.window_h = model.window_h;
        for (const auto& jr : jl.at("rects")) {
          if (jr.size() != 5) throw FormatError("Haar rect needs 5 entries");
          l.feature.rects.push_back({jr[0].get<int>(), jr[1].get<int>(), jr[2].get<int>(),
                                     jr[3].get<int>(), jr[4].get<int>()});
        }
        l.threshold = jl.at("threshold").get<double>();
        l.polarity = jl.at("polarity").get<int>();
        l.alpha = jl.at("alpha").get<double>();
        if (l.polarity != 1 && l.polarity != -1) throw FormatError("polarity must be +-1");
        validate(l.feature);
        stage.learners.push_back(std::move(l));
      }
      if (stage.learners.empty()) throw FormatError("cascade stage without learners");
      model.stages.push_back(std::move(stage));
    }
    if (model.stages.empty()) throw FormatError("cascade without stages");
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed cascade JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid cascade feature: ") + e.what());
  }
}

void save_cascade(const CascadeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << to_json(model) << '\n';
}

CascadeModel load_cascade(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return cascade_from_json(buf.str());
}

}  // namespace edgedet::haar
