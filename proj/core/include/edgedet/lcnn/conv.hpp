#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgedet/lcnn/tensor.hpp"

namespace edgedet::lcnn {

enum class ConvKind { conventional, depthwise, pointwise };

std::string to_string(ConvKind kind);

/// Weights layout:
///   conventional  [out][in][ky][kx]
///   depthwise     [channel][ky][kx]       (out == in)
///   pointwise     [out][in]               (size 1)
/// `bias` is either empty or holds one value per output channel.
template <typename T>
struct BasicConvKernel {
  ConvKind kind = ConvKind::conventional;
  int out_channels = 0;
  int in_channels = 0;
  int size = 1;
  int stride = 1;
  int padding = 0;
  std::vector<T> weights;
  std::vector<T> bias;

  static BasicConvKernel conventional(int out, int in, int size, int stride = 1, int padding = 0);
  static BasicConvKernel depthwise(int channels, int size, int stride = 1, int padding = 0);
  static BasicConvKernel pointwise(int out, int in);

  std::size_t weight_count() const;
  int output_side(int input_side) const { return (input_side + 2 * padding - size) / stride + 1; }

  T& w(int n, int m, int ky, int kx) {
    return weights[((static_cast<std::size_t>(n) * in_channels + m) * size + ky) * size + kx];
  }
  const T& w(int n, int m, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(n) * in_channels + m) * size + ky) * size + kx];
  }
  T& dw(int m, int ky, int kx) { return weights[(static_cast<std::size_t>(m) * size + ky) * size + kx]; }
  const T& dw(int m, int ky, int kx) const {
    return weights[(static_cast<std::size_t>(m) * size + ky) * size + kx];
  }

  template <typename U>
  BasicConvKernel<U> cast() const {
    return {kind, out_channels, in_channels, size, stride, padding,
            std::vector<U>(weights.begin(), weights.end()), std::vector<U>(bias.begin(), bias.end())};
  }
};

using ConvKernel = BasicConvKernel<float>;

/// Throws ShapeError when the kernel's own fields are inconsistent.
template <typename T>
void validate(const BasicConvKernel<T>& k);

/// Counts scalar multiplies performed by the direct reference loops. Every
/// kernel tap counts, including taps that land on zero padding.
struct OpCount {
  std::uint64_t multiplies = 0;
};

// Fast paths: im2col + blocked products for conventional and pointwise,
// row-sliced loops for depthwise. All throw ShapeError on channel mismatch
// and LayerTypeError when handed the wrong kernel kind.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicConvKernel<T>& k);
template <typename T>
BasicTensor<T> depthwise_conv(const BasicTensor<T>& input, const BasicConvKernel<T>& k);
template <typename T>
BasicTensor<T> pointwise_conv(const BasicTensor<T>& input, const BasicConvKernel<T>& k);

// Direct nested-loop reference paths.
template <typename T>
BasicTensor<T> conv2d_direct(const BasicTensor<T>& input, const BasicConvKernel<T>& k,
                             OpCount* count = nullptr);
template <typename T>
BasicTensor<T> depthwise_conv_direct(const BasicTensor<T>& input, const BasicConvKernel<T>& k,
                                     OpCount* count = nullptr);
template <typename T>
BasicTensor<T> pointwise_conv_direct(const BasicTensor<T>& input, const BasicConvKernel<T>& k,
                                     OpCount* count = nullptr);

/// Dispatches on k.kind.
template <typename T>
BasicTensor<T> apply_conv(const BasicTensor<T>& input, const BasicConvKernel<T>& k);

template <typename T>
struct ConvGrads {
  BasicTensor<T> input;
  std::vector<T> weights;
  std::vector<T> bias;  // empty when the kernel has no bias
};

/// Gradients of sum(grad_out * conv(input)) with respect to the input, the
/// weights and the bias. Dispatches on k.kind.
template <typename T>
ConvGrads<T> conv_backward(const BasicTensor<T>& input, const BasicConvKernel<T>& k,
                           const BasicTensor<T>& grad_out);

/// Conventional kernel K[n][m][i][j] = D[m][i][j] * P[n][m] equivalent to
/// depthwise `d` followed by pointwise `p`.
template <typename T>
BasicConvKernel<T> compose_separable(const BasicConvKernel<T>& d, const BasicConvKernel<T>& p);

/// Runs both routes and returns the largest elementwise deviation relative
/// to the largest output magnitude (0 when both outputs vanish).
template <typename T>
double factorized_equals_composed(const BasicConvKernel<T>& d, const BasicConvKernel<T>& p,
                                  const BasicTensor<T>& input);

}  // namespace edgedet::lcnn
