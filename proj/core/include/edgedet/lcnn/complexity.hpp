#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "edgedet/lcnn/network.hpp"

namespace edgedet::lcnn {

/// Multiply-accumulate counts for a D_k x D_k convolution mapping M to N
/// channels on a D_f x D_f output map.
struct ConvComplexity {
  std::uint64_t conventional = 0;  // D_k^2 M N D_f^2
  std::uint64_t separable = 0;     // D_k^2 M D_f^2 + M N D_f^2
  double reduction = 0.0;          // separable / conventional = 1/N + 1/D_k^2
};

ConvComplexity complexity(int kernel, int in_channels, int out_channels, int out_side);

/// Actual MACs of one convolution-type layer (heads included). Throws
/// LayerTypeError for batch norm and ReLU.
std::uint64_t layer_macs(const LayerSpec& layer);
std::uint64_t layer_params(const LayerSpec& layer);

/// Cost of a conventional layer with this shape, and its reduction factor
/// had it been factorised. LayerTypeError for non-conventional layers.
ConvComplexity complexity(const LayerSpec& layer);

struct AnalysisRow {
  int index = 0;  // position in the layer list
  LayerOp op = LayerOp::conv;
  int kernel = 1;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  int out_side = 0;
  std::uint64_t macs = 0;
  /// Conventional convolution covering the same mapping. Depthwise rows
  /// carry 0; their pair is accounted on the following pointwise row.
  std::uint64_t conventional_macs = 0;
  std::optional<double> reduction;
  std::uint64_t params = 0;
};

struct Analysis {
  std::vector<AnalysisRow> rows;  // backbone convolutions only
  std::uint64_t total_macs = 0;
  std::uint64_t total_conventional_macs = 0;
  std::uint64_t total_params = 0;
  double overall_reduction = 0.0;
};

Analysis analyze(std::span<const LayerSpec> layers);

/// Backbone conv weights if every layer were conventional with the same
/// kernel and channel counts (a depthwise layer becomes D_k^2 M M).
std::uint64_t all_conventional_params(std::span<const LayerSpec> layers);
std::uint64_t backbone_conv_params(std::span<const LayerSpec> layers);

}  // namespace edgedet::lcnn
