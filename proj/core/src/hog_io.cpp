#include <zlib.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "edgedet/errors.hpp"
#include "edgedet/hog.hpp"
#include "json.hpp"

namespace edgedet::hog {

namespace {

constexpr int kHogSvmVersion = 1;
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<unsigned char>& in) {
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const unsigned v = (in[i] << 16) | (in[i + 1] << 8) | in[i + 2];
    for (int s = 18; s >= 0; s -= 6) out.push_back(kAlphabet[(v >> s) & 63]);
  }
  if (const std::size_t rest = in.size() - i; rest > 0) {
    const unsigned v = (in[i] << 16) | (rest == 2 ? in[i + 1] << 8 : 0);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(rest == 2 ? kAlphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& in) {
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (int i = 0; i < 64; ++i) lookup[static_cast<unsigned char>(kAlphabet[i])] = i;
  if (in.size() % 4 != 0) throw FormatError("base64 length not a multiple of 4");

  std::vector<unsigned char> out;
  out.reserve(in.size() / 4 * 3);
  for (std::size_t i = 0; i < in.size(); i += 4) {
    unsigned v = 0;
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = in[i + k];
      if (c == '=' && i + 4 == in.size() && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = lookup[static_cast<unsigned char>(c)];
      if (d < 0 || pad > 0) throw FormatError("invalid base64 payload");
      v = (v << 6) | static_cast<unsigned>(d);
    }
    out.push_back((v >> 16) & 0xFF);
    if (pad < 2) out.push_back((v >> 8) & 0xFF);
    if (pad < 1) out.push_back(v & 0xFF);
  }
  return out;
}

std::vector<unsigned char> weights_to_le_bytes(const std::vector<float>& weights) {
  std::vector<unsigned char> bytes(weights.size() * 4);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(weights[i]);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = (bits >> (8 * b)) & 0xFF;
  }
  return bytes;
}

std::uint32_t crc_of(const std::vector<unsigned char>& bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

// CRC32 of the compact dump of every field except the checksum itself.
std::uint32_t content_crc(nlohmann::json doc) {
  doc.erase("crc32");
  const std::string text = doc.dump();
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size())));
}

}  // namespace

std::string to_json(const HogSvmModel& model) {
  const auto bytes = weights_to_le_bytes(model.weights);
  const auto& c = model.config;
  nlohmann::json doc = {
      {"version", kHogSvmVersion},
      {"config",
       {{"cell_size", c.cell_size},
        {"block_cells", c.block_cells},
        {"block_stride", c.block_stride},
        {"bins", c.bins},
        {"window", {c.window_w, c.window_h}}}},
      {"bias", model.bias},
      {"weight_count", model.weights.size()},
      {"weight_encoding", "base64-f32le"},
      {"weights_crc32", crc_of(bytes)},
      {"weights", base64_encode(bytes)}};
  doc["crc32"] = content_crc(doc);
  return doc.dump(1);
}

HogSvmModel hogsvm_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("version").get<int>() != kHogSvmVersion)
      throw FormatError("unsupported HOG-SVM model version");
    if (doc.at("crc32").get<std::uint32_t>() != content_crc(doc))
      throw FormatError("HOG-SVM model checksum mismatch");
    if (doc.at("weight_encoding").get<std::string>() != "base64-f32le")
      throw FormatError("unsupported weight encoding");
    HogSvmModel model;
    const auto& jc = doc.at("config");
    model.config.cell_size = jc.at("cell_size").get<int>();
    model.config.block_cells = jc.at("block_cells").get<int>();
    model.config.block_stride = jc.at("block_stride").get<int>();
    model.config.bins = jc.at("bins").get<int>();
    model.config.window_w = jc.at("window").at(0).get<int>();
    model.config.window_h = jc.at("window").at(1).get<int>();
    model.bias = doc.at("bias").get<double>();

    const auto bytes = base64_decode(doc.at("weights").get<std::string>());
    const auto count = doc.at("weight_count").get<std::size_t>();
    if (bytes.size() != count * 4) throw FormatError("weight payload length mismatch");
    if (crc_of(bytes) != doc.at("weights_crc32").get<std::uint32_t>())
      throw FormatError("weight checksum mismatch");
    model.weights.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
      model.weights[i] = std::bit_cast<float>(bits);
    }
    validate(model.config);
    if (model.weights.size() != descriptor_length(model.config))
      throw FormatError("weight count does not match HOG config");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed HOG-SVM JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid HOG config: ") + e.what());
  }
}

void save_hogsvm(const HogSvmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << to_json(model) << '\n';
}

HogSvmModel load_hogsvm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return hogsvm_from_json(buf.str());
}

}  // namespace edgedet::hog
