#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edgedet/lcnn/conv.hpp"
#include "edgedet/lcnn/layers.hpp"
#include "edgedet/lcnn/ssd.hpp"
#include "edgedet/lcnn/tensor.hpp"

namespace edgedet::lcnn {

enum class LayerOp { conv, depthwise, pointwise, batchnorm, relu, softmax_head, bbox_regressor };

std::string to_string(LayerOp op);
LayerOp layer_op_from_string(const std::string& name);

/// True for the three backbone convolution ops (the head convolutions are
/// excluded).
bool is_backbone_conv(LayerOp op);
bool is_head(LayerOp op);

/// Shape-only view of a layer, used by the analyzer and the architecture
/// sidecar.
struct LayerSpec {
  LayerOp op = LayerOp::conv;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int in_side = 0;
  int out_side = 0;
  int source = -1;  // head layers: index of the tapped backbone layer
  bool bias = false;
};

template <typename T>
struct BasicLayer {
  LayerOp op = LayerOp::relu;
  BasicConvKernel<T> kernel;  // conv, depthwise, pointwise and head ops
  BasicBatchNorm<T> bn;       // batchnorm only
  int source = -1;            // head ops only

  template <typename U>
  BasicLayer<U> cast() const {
    return {op, kernel.template cast<U>(), bn.template cast<U>(), source};
  }
};

/// Backbone layers come first and run in sequence; head layers follow, each
/// reading the output of its `source` layer. Softmax heads and box
/// regressors appear in pairs, one pair per tapped feature map.
template <typename T>
struct BasicCnnModel {
  int input_channels = 3;
  int input_size = 224;
  SsdConfig ssd;
  std::vector<BasicLayer<T>> layers;

  std::size_t backbone_size() const;
  /// Depthwise and pointwise layers counted separately, head excluded.
  std::size_t conv_layer_count() const;
  std::size_t parameter_count() const;
  /// Indices of the softmax-head layers, in prediction order.
  std::vector<int> head_indices() const;
  /// Spatial side of each tapped feature map, in prediction order.
  std::vector<int> tap_sides() const;
  std::size_t prediction_count() const;

  template <typename U>
  BasicCnnModel<U> cast() const {
    BasicCnnModel<U> m{input_channels, input_size, ssd, {}};
    for (const auto& l : layers) m.layers.push_back(l.template cast<U>());
    return m;
  }
};

using Layer = BasicLayer<float>;
using CnnModel = BasicCnnModel<float>;

/// Throws ShapeError when consecutive layers disagree on shape or a head
/// pair is malformed.
template <typename T>
std::vector<LayerSpec> describe(const BasicCnnModel<T>& model);

struct SeparableBlock {
  int out_channels = 64;
  int stride = 1;  // applied by the depthwise layer
};

/// MobileNet-class schedule with 11 depthwise/pointwise pairs:
/// 64, 128/2, 128, 256/2, 256, 512/2, 512 x4, 1024/2.
std::vector<SeparableBlock> default_schedule();

struct LcnnConfig {
  double width_multiplier = 1.0;
  int input_size = 224;
  int stem_channels = 32;
  int stem_stride = 2;
  std::vector<SeparableBlock> schedule = default_schedule();
  /// Zero-based indices into `schedule` whose outputs feed the SSD head.
  std::vector<int> taps = {9, 10};
  SsdConfig ssd;
  std::uint64_t seed = 42;
};

int scaled_channels(int channels, double width_multiplier);

/// Conventional 3x3 stem, then depthwise 3x3 + pointwise pairs, each conv
/// followed by batch norm and ReLU, then a 3x3 class/box head per tap.
/// Conv weights are He-uniform from `seed`; batch norm starts as identity.
CnnModel build_lcnn(const LcnnConfig& config = {});

template <typename T>
struct ForwardPass {
  std::vector<BasicTensor<T>> outputs;  // one per layer
  std::vector<T> logits;                // predictions x 2
  std::vector<T> offsets;               // predictions x 4
};

/// ShapeError unless input is input_channels x input_size x input_size.
template <typename T>
ForwardPass<T> forward(const BasicCnnModel<T>& model, const BasicTensor<T>& input);

template <typename T>
struct LayerGrads {
  std::vector<T> weights;
  std::vector<T> bias;
  std::vector<T> gamma;
  std::vector<T> beta;
};

/// Back-propagates loss gradients w.r.t. logits and offsets. Returns one
/// entry per layer; `grad_input` receives dL/dinput when non-null.
template <typename T>
std::vector<LayerGrads<T>> backward(const BasicCnnModel<T>& model, const BasicTensor<T>& input,
                                    const ForwardPass<T>& pass, std::span<const T> grad_logits,
                                    std::span<const T> grad_offsets,
                                    BasicTensor<T>* grad_input = nullptr);

extern template struct BasicCnnModel<float>;
extern template struct BasicCnnModel<double>;

}  // namespace edgedet::lcnn
