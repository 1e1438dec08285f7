#include "edgedet/lcnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "edgedet/errors.hpp"

namespace edgedet::lcnn {

std::string to_string(LayerOp op) {
  switch (op) {
    case LayerOp::conv: return "conv";
    case LayerOp::depthwise: return "depthwise";
    case LayerOp::pointwise: return "pointwise";
    case LayerOp::batchnorm: return "batchnorm";
    case LayerOp::relu: return "relu";
    case LayerOp::softmax_head: return "softmax-head";
    case LayerOp::bbox_regressor: return "bbox-regressor";
  }
  return "unknown";
}

LayerOp layer_op_from_string(const std::string& name) {
  for (LayerOp op : {LayerOp::conv, LayerOp::depthwise, LayerOp::pointwise, LayerOp::batchnorm,
                     LayerOp::relu, LayerOp::softmax_head, LayerOp::bbox_regressor})
    if (to_string(op) == name) return op;
  throw FormatError("unknown layer op '" + name + "'");
}

bool is_backbone_conv(LayerOp op) {
  return op == LayerOp::conv || op == LayerOp::depthwise || op == LayerOp::pointwise;
}

bool is_head(LayerOp op) { return op == LayerOp::softmax_head || op == LayerOp::bbox_regressor; }

namespace {

ConvKind expected_kind(LayerOp op) {
  switch (op) {
    case LayerOp::depthwise: return ConvKind::depthwise;
    case LayerOp::pointwise: return ConvKind::pointwise;
    default: return ConvKind::conventional;
  }
}

}  // namespace

template <typename T>
std::size_t BasicCnnModel<T>::backbone_size() const {
  std::size_t n = 0;
  while (n < layers.size() && !is_head(layers[n].op)) ++n;
  return n;
}

template <typename T>
std::size_t BasicCnnModel<T>::conv_layer_count() const {
  return static_cast<std::size_t>(std::count_if(
      layers.begin(), layers.end(), [](const auto& l) { return is_backbone_conv(l.op); }));
}

template <typename T>
std::size_t BasicCnnModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) {
    if (l.op == LayerOp::batchnorm) {
      n += 2 * l.bn.gamma.size();  // running statistics are buffers, not parameters
    } else if (l.op != LayerOp::relu) {
      n += l.kernel.weights.size() + l.kernel.bias.size();
    }
  }
  return n;
}

template <typename T>
std::vector<int> BasicCnnModel<T>::head_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].op == LayerOp::softmax_head) out.push_back(static_cast<int>(i));
  return out;
}

template <typename T>
std::vector<int> BasicCnnModel<T>::tap_sides() const {
  const auto specs = describe(*this);
  std::vector<int> sides;
  for (int h : head_indices()) sides.push_back(specs[h].out_side);
  return sides;
}

template <typename T>
std::size_t BasicCnnModel<T>::prediction_count() const {
  std::size_t n = 0;
  for (int side : tap_sides()) n += static_cast<std::size_t>(side) * side * ssd.boxes_per_location();
  return n;
}

template <typename T>
std::vector<LayerSpec> describe(const BasicCnnModel<T>& model) {
  std::vector<LayerSpec> specs;
  const std::size_t backbone = model.backbone_size();
  int channels = model.input_channels, side = model.input_size;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    LayerSpec s;
    s.op = l.op;
    if (is_head(l.op)) {
      if (i < backbone || l.source < 0 || static_cast<std::size_t>(l.source) >= backbone)
        throw ShapeError("head layer taps an invalid source");
      channels = specs[l.source].out_channels;
      side = specs[l.source].out_side;
      s.source = l.source;
    } else if (i >= backbone) {
      throw ShapeError("backbone layer after the head");
    }
    s.in_channels = channels;
    s.in_side = side;
    if (l.op == LayerOp::batchnorm) {
      if (l.bn.channels() != channels) throw ShapeError("batch-norm width mismatch at layer " + std::to_string(i));
      s.out_channels = channels;
      s.out_side = side;
    } else if (l.op == LayerOp::relu) {
      s.out_channels = channels;
      s.out_side = side;
    } else {
      const auto& k = l.kernel;
      if (k.kind != expected_kind(l.op)) throw ShapeError("kernel kind does not match layer op");
      validate(k);
      if (k.in_channels != channels)
        throw ShapeError("layer " + std::to_string(i) + " expects " + std::to_string(k.in_channels) +
                         " channels, receives " + std::to_string(channels));
      s.out_channels = k.out_channels;
      s.kernel = k.size;
      s.stride = k.stride;
      s.padding = k.padding;
      s.out_side = k.output_side(side);
      s.bias = !k.bias.empty();
      if (s.out_side < 1) throw ShapeError("feature map vanishes at layer " + std::to_string(i));
    }
    if (!is_head(l.op)) {
      channels = s.out_channels;
      side = s.out_side;
    }
    specs.push_back(s);
  }

  const int boxes = model.ssd.boxes_per_location();
  const auto heads = model.head_indices();
  if (heads.empty()) throw ShapeError("model has no detection head");
  for (int h : heads) {
    const std::size_t r = static_cast<std::size_t>(h) + 1;
    if (r >= model.layers.size() || model.layers[r].op != LayerOp::bbox_regressor ||
        model.layers[r].source != model.layers[h].source)
      throw ShapeError("softmax head must be followed by a box regressor on the same tap");
    if (specs[h].out_channels != boxes * 2 || specs[r].out_channels != boxes * 4)
      throw ShapeError("head widths do not match boxes per location");
    if (specs[h].out_side != specs[h].in_side || specs[r].out_side != specs[r].in_side)
      throw ShapeError("head convolutions must preserve the feature map size");
  }
  return specs;
}

std::vector<SeparableBlock> default_schedule() {
  return {{64, 1},  {128, 2}, {128, 1}, {256, 2}, {256, 1}, {512, 2},
          {512, 1}, {512, 1}, {512, 1}, {512, 1}, {1024, 2}};
}

int scaled_channels(int channels, double width_multiplier) {
  return std::max(1, static_cast<int>(std::lround(channels * width_multiplier)));
}

namespace {

void he_uniform(std::vector<float>& w, int fan_in, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / fan_in);
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (float& v : w) v = static_cast<float>(dist(rng));
}

}  // namespace

CnnModel build_lcnn(const LcnnConfig& config) {
  if (!(config.width_multiplier > 0.0)) throw ConfigError("width multiplier must be positive");
  if (config.input_size < 8) throw ConfigError("input size too small");
  if (config.taps.empty()) throw ConfigError("at least one tap is required");

  std::mt19937_64 rng(config.seed);
  CnnModel model;
  model.input_channels = 3;
  model.input_size = config.input_size;
  model.ssd = config.ssd;

  auto add_conv = [&](LayerOp op, ConvKernel k) {
    const int fan_in = (op == LayerOp::depthwise ? 1 : k.in_channels) * k.size * k.size;
    he_uniform(k.weights, fan_in, rng);
    const int out = k.out_channels;
    model.layers.push_back({op, std::move(k), {}, -1});
    model.layers.push_back({LayerOp::batchnorm, {}, BatchNorm::identity(out), -1});
    model.layers.push_back({LayerOp::relu, {}, {}, -1});
  };

  int channels = scaled_channels(config.stem_channels, config.width_multiplier);
  add_conv(LayerOp::conv, ConvKernel::conventional(channels, 3, 3, config.stem_stride, 1));

  std::vector<std::pair<int, int>> taps;  // (layer index, channels)
  for (std::size_t b = 0; b < config.schedule.size(); ++b) {
    const auto& block = config.schedule[b];
    add_conv(LayerOp::depthwise, ConvKernel::depthwise(channels, 3, block.stride, 1));
    const int out = scaled_channels(block.out_channels, config.width_multiplier);
    add_conv(LayerOp::pointwise, ConvKernel::pointwise(out, channels));
    channels = out;
    if (std::find(config.taps.begin(), config.taps.end(), static_cast<int>(b)) != config.taps.end())
      taps.emplace_back(static_cast<int>(model.layers.size()) - 1, channels);
  }
  if (taps.size() != config.taps.size()) throw ConfigError("tap index outside schedule");

  const int boxes = config.ssd.boxes_per_location();
  for (const auto& [source, width] : taps) {
    for (const auto& [op, outputs] : {std::pair{LayerOp::softmax_head, boxes * 2},
                                     std::pair{LayerOp::bbox_regressor, boxes * 4}}) {
      auto k = ConvKernel::conventional(outputs, width, 3, 1, 1);
      he_uniform(k.weights, width * 9, rng);
      k.bias.assign(outputs, 0.0f);
      model.layers.push_back({op, std::move(k), {}, source});
    }
  }
  describe(model);
  return model;
}

namespace {

template <typename T>
BasicTensor<T> run_layer(const BasicLayer<T>& l, const BasicTensor<T>& in) {
  switch (l.op) {
    case LayerOp::batchnorm: return batchnorm(in, l.bn);
    case LayerOp::relu: return relu(in);
    default: return apply_conv(in, l.kernel);
  }
}

}  // namespace

template <typename T>
ForwardPass<T> forward(const BasicCnnModel<T>& model, const BasicTensor<T>& input) {
  if (input.channels() != model.input_channels || input.height() != model.input_size ||
      input.width() != model.input_size)
    throw ShapeError("network expects a " + std::to_string(model.input_channels) + "x" +
                     std::to_string(model.input_size) + "x" + std::to_string(model.input_size) +
                     " input");
  ForwardPass<T> pass;
  pass.outputs.reserve(model.layers.size());
  const std::size_t backbone = model.backbone_size();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    const BasicTensor<T>& in = is_head(l.op) ? pass.outputs[l.source]
                               : i == 0      ? input
                                             : pass.outputs[i - 1];
    if (i >= backbone && !is_head(l.op)) throw ShapeError("backbone layer after the head");
    pass.outputs.push_back(run_layer(l, in));
  }

  const int boxes = model.ssd.boxes_per_location();
  for (int h : model.head_indices()) {
    const auto& cls = pass.outputs[h];
    const auto& reg = pass.outputs[h + 1];
    for (int y = 0; y < cls.height(); ++y)
      for (int x = 0; x < cls.width(); ++x)
        for (int b = 0; b < boxes; ++b) {
          for (int c = 0; c < 2; ++c) pass.logits.push_back(cls.at(b * 2 + c, y, x));
          for (int k = 0; k < 4; ++k) pass.offsets.push_back(reg.at(b * 4 + k, y, x));
        }
  }
  return pass;
}

namespace {

template <typename T>
void accumulate(BasicTensor<T>& into, const BasicTensor<T>& g) {
  if (into.size() == 0) {
    into = g;
    return;
  }
  auto d = into.data();
  const auto s = g.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

template <typename T>
std::vector<LayerGrads<T>> backward(const BasicCnnModel<T>& model, const BasicTensor<T>& input,
                                    const ForwardPass<T>& pass, std::span<const T> grad_logits,
                                    std::span<const T> grad_offsets, BasicTensor<T>* grad_input) {
  if (grad_logits.size() != pass.logits.size() || grad_offsets.size() != pass.offsets.size())
    throw ShapeError("loss gradient does not match prediction count");

  const std::size_t n = model.layers.size();
  std::vector<LayerGrads<T>> grads(n);
  std::vector<BasicTensor<T>> grad_out(n);

  // Scatter the flat prediction gradients back onto the head maps.
  const int boxes = model.ssd.boxes_per_location();
  std::size_t pred = 0;
  for (int h : model.head_indices()) {
    const auto& cls = pass.outputs[h];
    BasicTensor<T> gc(cls.channels(), cls.height(), cls.width());
    BasicTensor<T> gr(pass.outputs[h + 1].channels(), cls.height(), cls.width());
    for (int y = 0; y < cls.height(); ++y)
      for (int x = 0; x < cls.width(); ++x)
        for (int b = 0; b < boxes; ++b, ++pred) {
          for (int c = 0; c < 2; ++c) gc.at(b * 2 + c, y, x) = grad_logits[pred * 2 + c];
          for (int k = 0; k < 4; ++k) gr.at(b * 4 + k, y, x) = grad_offsets[pred * 4 + k];
        }
    grad_out[h] = std::move(gc);
    grad_out[h + 1] = std::move(gr);
  }

  for (std::size_t i = n; i-- > 0;) {
    if (grad_out[i].size() == 0) continue;
    const auto& l = model.layers[i];
    const BasicTensor<T>& in = is_head(l.op) ? pass.outputs[l.source]
                               : i == 0      ? input
                                             : pass.outputs[i - 1];
    BasicTensor<T> g_in;
    switch (l.op) {
      case LayerOp::batchnorm: {
        auto g = batchnorm_backward(in, l.bn, grad_out[i]);
        grads[i].gamma = std::move(g.gamma);
        grads[i].beta = std::move(g.beta);
        g_in = std::move(g.input);
        break;
      }
      case LayerOp::relu:
        g_in = relu_backward(in, grad_out[i]);
        break;
      default: {
        auto g = conv_backward(in, l.kernel, grad_out[i]);
        grads[i].weights = std::move(g.weights);
        grads[i].bias = std::move(g.bias);
        g_in = std::move(g.input);
        break;
      }
    }
    if (is_head(l.op)) {
      accumulate(grad_out[l.source], g_in);
    } else if (i > 0) {
      accumulate(grad_out[i - 1], g_in);
    } else if (grad_input) {
      *grad_input = std::move(g_in);
    }
  }

  // Layers past the last tap receive no gradient; give them zeros.
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = model.layers[i];
    if (l.op == LayerOp::batchnorm && grads[i].gamma.empty()) {
      grads[i].gamma.assign(l.bn.gamma.size(), T{});
      grads[i].beta.assign(l.bn.beta.size(), T{});
    } else if (l.op != LayerOp::batchnorm && l.op != LayerOp::relu && grads[i].weights.empty()) {
      grads[i].weights.assign(l.kernel.weights.size(), T{});
      grads[i].bias.assign(l.kernel.bias.size(), T{});
    }
  }
  return grads;
}

template struct BasicCnnModel<float>;
template struct BasicCnnModel<double>;

#define EDGEDET_INSTANTIATE_NETWORK(T)                                                         \
  template std::vector<LayerSpec> describe(const BasicCnnModel<T>&);                           \
  template ForwardPass<T> forward(const BasicCnnModel<T>&, const BasicTensor<T>&);             \
  template std::vector<LayerGrads<T>> backward(const BasicCnnModel<T>&, const BasicTensor<T>&, \
                                               const ForwardPass<T>&, std::span<const T>,      \
                                               std::span<const T>, BasicTensor<T>*);

EDGEDET_INSTANTIATE_NETWORK(float)
EDGEDET_INSTANTIATE_NETWORK(double)

#undef EDGEDET_INSTANTIATE_NETWORK

}  // namespace edgedet::lcnn
