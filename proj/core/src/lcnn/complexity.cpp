#include "edgedet/lcnn/complexity.hpp"

#include "edgedet/errors.hpp"

namespace edgedet::lcnn {

namespace {

using u64 = std::uint64_t;

void require_conv(const LayerSpec& l) {
  if (l.op == LayerOp::batchnorm || l.op == LayerOp::relu)
    throw LayerTypeError("complexity is defined for convolution layers, not " + to_string(l.op));
}

}  // namespace

ConvComplexity complexity(int kernel, int in_channels, int out_channels, int out_side) {
  if (kernel < 1 || in_channels < 1 || out_channels < 1 || out_side < 1)
    throw ConfigError("convolution dimensions must be positive");
  const u64 k2 = static_cast<u64>(kernel) * kernel;
  const u64 m = in_channels;
  const u64 n = out_channels;
  const u64 f2 = static_cast<u64>(out_side) * out_side;
  ConvComplexity c;
  c.conventional = k2 * m * n * f2;
  c.separable = k2 * m * f2 + m * n * f2;
  // Reduce the ratio exactly before going to floating point: the common
  // factor M D_f^2 cancels, leaving (k2 + n) / (k2 n).
  c.reduction = static_cast<double>(k2 + n) / static_cast<double>(k2 * n);
  return c;
}

std::uint64_t layer_macs(const LayerSpec& l) {
  require_conv(l);
  const u64 f2 = static_cast<u64>(l.out_side) * l.out_side;
  const u64 k2 = static_cast<u64>(l.kernel) * l.kernel;
  if (l.op == LayerOp::depthwise) return k2 * l.in_channels * f2;
  return k2 * l.in_channels * l.out_channels * f2;
}

std::uint64_t layer_params(const LayerSpec& l) {
  require_conv(l);
  const u64 k2 = static_cast<u64>(l.kernel) * l.kernel;
  const u64 w = l.op == LayerOp::depthwise ? k2 * l.in_channels
                                           : k2 * l.in_channels * l.out_channels;
  return w + (l.bias ? l.out_channels : 0);
}

ConvComplexity complexity(const LayerSpec& l) {
  require_conv(l);
  if (l.op == LayerOp::depthwise || l.op == LayerOp::pointwise)
    throw LayerTypeError("expected a conventional layer, got " + to_string(l.op));
  return complexity(l.kernel, l.in_channels, l.out_channels, l.out_side);
}

Analysis analyze(std::span<const LayerSpec> layers) {
  Analysis a;
  const LayerSpec* pending_dw = nullptr;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (!is_backbone_conv(l.op)) continue;
    AnalysisRow row{static_cast<int>(i), l.op,          l.kernel, l.in_channels, l.out_channels,
                    l.stride,            l.out_side,    layer_macs(l), 0, std::nullopt,
                    layer_params(l)};
    if (l.op == LayerOp::conv) {
      const auto c = complexity(l);
      row.conventional_macs = c.conventional;
      row.reduction = c.reduction;
      pending_dw = nullptr;
    } else if (l.op == LayerOp::depthwise) {
      pending_dw = &l;
    } else if (pending_dw) {
      const auto c = complexity(pending_dw->kernel, pending_dw->in_channels, l.out_channels,
                                l.out_side);
      row.conventional_macs = c.conventional;
      row.reduction = c.reduction;
      pending_dw = nullptr;
    } else {
      // Free-standing pointwise layer: already its own conventional form.
      row.conventional_macs = row.macs;
    }
    a.total_macs += row.macs;
    a.total_conventional_macs += row.conventional_macs;
    a.total_params += row.params;
    a.rows.push_back(row);
  }
  // A trailing depthwise layer with no pointwise partner counts as-is.
  if (pending_dw) a.total_conventional_macs += layer_macs(*pending_dw);
  a.overall_reduction = a.total_conventional_macs
                            ? static_cast<double>(a.total_macs) / a.total_conventional_macs
                            : 0.0;
  return a;
}

std::uint64_t all_conventional_params(std::span<const LayerSpec> layers) {
  u64 total = 0;
  for (const auto& l : layers) {
    if (!is_backbone_conv(l.op)) continue;
    total += static_cast<u64>(l.kernel) * l.kernel * l.in_channels * l.out_channels;
  }
  return total;
}

std::uint64_t backbone_conv_params(std::span<const LayerSpec> layers) {
  u64 total = 0;
  for (const auto& l : layers)
    if (is_backbone_conv(l.op)) total += layer_params(l);
  return total;
}

}  // namespace edgedet::lcnn
