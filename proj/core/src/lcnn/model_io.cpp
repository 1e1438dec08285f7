#include "edgedet/lcnn/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "edgedet/errors.hpp"
#include "json.hpp"

namespace edgedet::lcnn {

namespace {

constexpr char kMagic[4] = {'L', 'C', 'N', 'N'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void i32(int v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<unsigned char>(bits >> (8 * i)));
  }
  void f32s(const std::vector<float>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (float f : v) u32(std::bit_cast<std::uint32_t>(f));
  }
  void raw(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    bytes_.insert(bytes_.end(), c, c + n);
  }
  std::vector<unsigned char>& bytes() { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> b) : b_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  int i32() { return static_cast<int>(u32()); }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::vector<float> f32s(std::size_t expected) {
    const std::uint32_t n = u32();
    if (n != expected) throw FormatError("weight block has unexpected length");
    need(static_cast<std::size_t>(n) * 4);
    std::vector<float> v(n);
    for (auto& f : v) f = std::bit_cast<float>(u32());
    return v;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("model file truncated");
  }
  std::span<const unsigned char> b_;
  std::size_t pos_ = 0;
};

std::uint32_t checksum(std::span<const unsigned char> bytes) {
  return static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

ConvKind kind_for(LayerOp op) {
  switch (op) {
    case LayerOp::depthwise: return ConvKind::depthwise;
    case LayerOp::pointwise: return ConvKind::pointwise;
    default: return ConvKind::conventional;
  }
}

bool has_kernel(LayerOp op) { return op != LayerOp::batchnorm && op != LayerOp::relu; }

}  // namespace

std::vector<unsigned char> encode_model(const CnnModel& model) {
  describe(model);
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(model.layers.size()));
  w.i32(model.input_channels);
  w.i32(model.input_size);
  w.u32(static_cast<std::uint32_t>(model.ssd.aspect_ratios.size()));
  for (double r : model.ssd.aspect_ratios) w.f64(r);
  for (double v : {model.ssd.min_scale, model.ssd.max_scale, model.ssd.center_variance,
                   model.ssd.size_variance, model.ssd.match_iou})
    w.f64(v);

  for (const auto& l : model.layers) {
    w.u32(static_cast<std::uint32_t>(l.op));
    w.i32(l.source);
    if (l.op == LayerOp::batchnorm) {
      w.u32(static_cast<std::uint32_t>(l.bn.gamma.size()));
      w.f32s(l.bn.gamma);
      w.f32s(l.bn.beta);
      w.f32s(l.bn.mean);
      w.f32s(l.bn.var);
    } else if (has_kernel(l.op)) {
      const auto& k = l.kernel;
      for (int v : {k.out_channels, k.in_channels, k.size, k.stride, k.padding}) w.i32(v);
      w.f32s(k.weights);
      w.f32s(k.bias);
    }
  }
  auto& bytes = w.bytes();
  const std::uint32_t crc = checksum(bytes);
  w.u32(crc);
  return std::move(bytes);
}

CnnModel decode_model(std::span<const unsigned char> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("not an L-CNN model file");
  Reader head(bytes.subspan(4));
  if (head.u32() != kModelVersion) throw FormatError("unsupported L-CNN model version");

  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (tail.u32() != checksum(body)) throw FormatError("model checksum mismatch");

  Reader r(body.subspan(8));
  const std::uint32_t count = r.u32();
  CnnModel model;
  model.input_channels = r.i32();
  model.input_size = r.i32();
  const std::uint32_t ratios = r.u32();
  if (ratios == 0 || ratios > 64) throw FormatError("implausible aspect ratio count");
  model.ssd.aspect_ratios.clear();
  for (std::uint32_t i = 0; i < ratios; ++i) model.ssd.aspect_ratios.push_back(r.f64());
  model.ssd.min_scale = r.f64();
  model.ssd.max_scale = r.f64();
  model.ssd.center_variance = r.f64();
  model.ssd.size_variance = r.f64();
  model.ssd.match_iou = r.f64();

  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t tag = r.u32();
    if (tag > static_cast<std::uint32_t>(LayerOp::bbox_regressor))
      throw FormatError("unknown layer tag " + std::to_string(tag));
    Layer l;
    l.op = static_cast<LayerOp>(tag);
    l.source = r.i32();
    if (l.op == LayerOp::batchnorm) {
      const std::uint32_t c = r.u32();
      l.bn.gamma = r.f32s(c);
      l.bn.beta = r.f32s(c);
      l.bn.mean = r.f32s(c);
      l.bn.var = r.f32s(c);
    } else if (has_kernel(l.op)) {
      auto& k = l.kernel;
      k.kind = kind_for(l.op);
      k.out_channels = r.i32();
      k.in_channels = r.i32();
      k.size = r.i32();
      k.stride = r.i32();
      k.padding = r.i32();
      if (k.out_channels < 1 || k.in_channels < 1 || k.size < 1 || k.size > 64)
        throw FormatError("invalid kernel shape in layer " + std::to_string(i));
      k.weights = r.f32s(k.weight_count());
      const std::uint32_t bias_len = k.out_channels;
      Reader probe = r;
      const std::uint32_t n = probe.u32();
      k.bias = r.f32s(n == 0 ? 0 : bias_len);
    }
    model.layers.push_back(std::move(l));
  }
  if (!r.done()) throw FormatError("trailing bytes after last layer");
  try {
    describe(model);
  } catch (const Error& e) {
    throw FormatError(std::string("inconsistent model: ") + e.what());
  }
  return model;
}

std::filesystem::path sidecar_path(const std::filesystem::path& model_path) {
  return model_path.string() + ".json";
}

void save_model(const CnnModel& model, const std::filesystem::path& path) {
  const auto bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  std::ofstream side(sidecar_path(path));
  side << architecture_json(model) << '\n';
  if (!out || !side) throw InputError("failed writing " + path.string());
}

CnnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

Architecture architecture_of(const CnnModel& model) {
  return {model.input_channels, model.input_size, describe(model)};
}

std::string architecture_json(const CnnModel& model) {
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& s : describe(model)) {
    nlohmann::ordered_json j{{"op", to_string(s.op)},
                             {"in_channels", s.in_channels},
                             {"out_channels", s.out_channels}};
    if (has_kernel(s.op)) {
      j["kernel"] = s.kernel;
      j["stride"] = s.stride;
      j["padding"] = s.padding;
      j["bias"] = s.bias;
    }
    j["in_side"] = s.in_side;
    j["out_side"] = s.out_side;
    if (is_head(s.op)) j["source"] = s.source;
    layers.push_back(std::move(j));
  }
  nlohmann::ordered_json doc{
      {"format", "lcnn-architecture"},
      {"version", kModelVersion},
      {"input", {model.input_channels, model.input_size, model.input_size}},
      {"ssd",
       {{"aspect_ratios", model.ssd.aspect_ratios},
        {"min_scale", model.ssd.min_scale},
        {"max_scale", model.ssd.max_scale},
        {"center_variance", model.ssd.center_variance},
        {"size_variance", model.ssd.size_variance},
        {"match_iou", model.ssd.match_iou}}},
      {"parameters", model.parameter_count()},
      {"layers", std::move(layers)}};
  return doc.dump(2);
}

Architecture architecture_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    Architecture a;
    const auto& input = doc.at("input");
    a.input_channels = input.at(0).get<int>();
    a.input_size = input.at(1).get<int>();
    if (a.input_channels < 1 || a.input_size < 1) throw FormatError("invalid input shape");

    int channels = a.input_channels;
    int side = a.input_size;
    for (const auto& j : doc.at("layers")) {
      LayerSpec s;
      s.op = layer_op_from_string(j.at("op").get<std::string>());
      s.in_channels = j.at("in_channels").get<int>();
      s.out_channels = j.at("out_channels").get<int>();
      if (has_kernel(s.op)) {
        s.kernel = j.at("kernel").get<int>();
        s.stride = j.value("stride", 1);
        s.padding = j.value("padding", 0);
        s.bias = j.value("bias", false);
      }
      if (is_head(s.op)) {
        s.source = j.at("source").get<int>();
        const int idx = static_cast<int>(a.layers.size());
        if (s.source < 0 || s.source >= idx || is_head(a.layers[s.source].op))
          throw FormatError("head source must name an earlier backbone layer");
        const auto& src = a.layers[s.source];
        if (s.in_channels != src.out_channels)
          throw FormatError("head width does not match its source layer");
        s.in_side = src.out_side;
      } else {
        if (!a.layers.empty() && is_head(a.layers.back().op))
          throw FormatError("backbone layer after the head");
        if (s.in_channels != channels)
          throw FormatError("layer " + std::to_string(a.layers.size()) + " expects " +
                            std::to_string(s.in_channels) + " channels, receives " +
                            std::to_string(channels));
        s.in_side = side;
      }
      if (has_kernel(s.op)) {
        if (s.kernel < 1 || s.stride < 1 || s.padding < 0 || s.out_channels < 1)
          throw FormatError("invalid kernel parameters");
        if (s.op == LayerOp::pointwise && s.kernel != 1)
          throw FormatError("pointwise layers use 1x1 kernels");
        if (s.op == LayerOp::depthwise && s.out_channels != s.in_channels)
          throw FormatError("depthwise layers preserve the channel count");
        s.out_side = (s.in_side + 2 * s.padding - s.kernel) / s.stride + 1;
        if (s.out_side < 1) throw FormatError("feature map vanishes");
      } else {
        if (s.out_channels != s.in_channels)
          throw FormatError("elementwise layers preserve the channel count");
        s.out_side = s.in_side;
      }
      if (j.contains("out_side") && j.at("out_side").get<int>() != s.out_side)
        throw FormatError("declared output side disagrees with the layer shape");
      if (!is_head(s.op)) {
        channels = s.out_channels;
        side = s.out_side;
      }
      a.layers.push_back(s);
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed architecture: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed architecture: ") + e.what());
  }
}

Architecture load_architecture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open architecture " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return architecture_from_json(ss.str());
}

}  // namespace edgedet::lcnn
