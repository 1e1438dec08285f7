#include "edgedet/lcnn/conv.hpp"

#include <algorithm>
#include <cmath>

#include "edgedet/errors.hpp"

namespace edgedet::lcnn {

std::string to_string(ConvKind kind) {
  switch (kind) {
    case ConvKind::conventional: return "conv";
    case ConvKind::depthwise: return "depthwise";
    case ConvKind::pointwise: return "pointwise";
  }
  return "unknown";
}

template <typename T>
BasicConvKernel<T> BasicConvKernel<T>::conventional(int out, int in, int size, int stride, int padding) {
  BasicConvKernel k{ConvKind::conventional, out, in, size, stride, padding, {}, {}};
  k.weights.assign(k.weight_count(), T{});
  return k;
}

template <typename T>
BasicConvKernel<T> BasicConvKernel<T>::depthwise(int channels, int size, int stride, int padding) {
  BasicConvKernel k{ConvKind::depthwise, channels, channels, size, stride, padding, {}, {}};
  k.weights.assign(k.weight_count(), T{});
  return k;
}

template <typename T>
BasicConvKernel<T> BasicConvKernel<T>::pointwise(int out, int in) {
  BasicConvKernel k{ConvKind::pointwise, out, in, 1, 1, 0, {}, {}};
  k.weights.assign(k.weight_count(), T{});
  return k;
}

template <typename T>
std::size_t BasicConvKernel<T>::weight_count() const {
  const auto k2 = static_cast<std::size_t>(size) * size;
  switch (kind) {
    case ConvKind::conventional: return static_cast<std::size_t>(out_channels) * in_channels * k2;
    case ConvKind::depthwise: return static_cast<std::size_t>(in_channels) * k2;
    case ConvKind::pointwise: return static_cast<std::size_t>(out_channels) * in_channels;
  }
  return 0;
}

template <typename T>
void validate(const BasicConvKernel<T>& k) {
  if (k.out_channels < 1 || k.in_channels < 1 || k.size < 1 || k.stride < 1 || k.padding < 0)
    throw ShapeError("kernel dimensions must be positive");
  if (k.kind == ConvKind::depthwise && k.out_channels != k.in_channels)
    throw ShapeError("depthwise kernel must preserve the channel count");
  if (k.kind == ConvKind::pointwise && (k.size != 1 || k.stride != 1 || k.padding != 0))
    throw ShapeError("pointwise kernel must be 1x1, stride 1, no padding");
  if (k.weights.size() != k.weight_count()) throw ShapeError("kernel weight count mismatch");
  if (!k.bias.empty() && k.bias.size() != static_cast<std::size_t>(k.out_channels))
    throw ShapeError("kernel bias length mismatch");
}

namespace {

template <typename T>
void check(const BasicTensor<T>& input, const BasicConvKernel<T>& k, ConvKind expected) {
  if (k.kind != expected)
    throw LayerTypeError("expected a " + to_string(expected) + " kernel, got " + to_string(k.kind));
  validate(k);
  if (input.channels() != k.in_channels)
    throw ShapeError("input has " + std::to_string(input.channels()) + " channels, kernel expects " +
                     std::to_string(k.in_channels));
  if (k.output_side(input.height()) < 1 || k.output_side(input.width()) < 1)
    throw ShapeError("kernel larger than padded input");
}

template <typename T>
BasicTensor<T> make_output(const BasicTensor<T>& input, const BasicConvKernel<T>& k) {
  BasicTensor<T> out(k.out_channels, k.output_side(input.height()), k.output_side(input.width()));
  if (!k.bias.empty())
    for (int n = 0; n < k.out_channels; ++n) std::ranges::fill(out.channel(n), k.bias[n]);
  return out;
}

// Column matrix [in * size * size][out_h * out_w].
template <typename T>
std::vector<T> im2col(const BasicTensor<T>& in, const BasicConvKernel<T>& k, int oh, int ow) {
  const int ks = k.size;
  const std::size_t cols = static_cast<std::size_t>(oh) * ow;
  std::vector<T> col(static_cast<std::size_t>(k.in_channels) * ks * ks * cols, T{});
  for (int m = 0; m < k.in_channels; ++m)
    for (int ky = 0; ky < ks; ++ky)
      for (int kx = 0; kx < ks; ++kx) {
        T* row = &col[((static_cast<std::size_t>(m) * ks + ky) * ks + kx) * cols];
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * k.stride + ky - k.padding;
          if (iy < 0 || iy >= in.height()) continue;
          const T* src = &in.at(m, iy, 0);
          T* dst = row + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * k.stride + kx - k.padding;
            if (ix >= 0 && ix < in.width()) dst[ox] = src[ix];
          }
        }
      }
  return col;
}

template <typename T>
void col2im(const std::vector<T>& col, const BasicConvKernel<T>& k, int oh, int ow,
            BasicTensor<T>& grad_in) {
  const int ks = k.size;
  const std::size_t cols = static_cast<std::size_t>(oh) * ow;
  for (int m = 0; m < k.in_channels; ++m)
    for (int ky = 0; ky < ks; ++ky)
      for (int kx = 0; kx < ks; ++kx) {
        const T* row = &col[((static_cast<std::size_t>(m) * ks + ky) * ks + kx) * cols];
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * k.stride + ky - k.padding;
          if (iy < 0 || iy >= grad_in.height()) continue;
          T* dst = &grad_in.at(m, iy, 0);
          const T* src = row + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * k.stride + kx - k.padding;
            if (ix >= 0 && ix < grad_in.width()) dst[ix] += src[ox];
          }
        }
      }
}

// C[rows x cols] += A[rows x inner] * B[inner x cols]
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, std::size_t rows, std::size_t inner, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    T* crow = c + i * cols;
    for (std::size_t r = 0; r < inner; ++r) {
      const T av = a[i * inner + r];
      if (av == T{}) continue;
      const T* brow = b + r * cols;
      for (std::size_t j = 0; j < cols; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[inner x cols] += A^T * B with A[rows x inner], B[rows x cols]
template <typename T>
void gemm_at_acc(const T* a, const T* b, T* c, std::size_t rows, std::size_t inner, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const T* brow = b + i * cols;
    for (std::size_t r = 0; r < inner; ++r) {
      const T av = a[i * inner + r];
      if (av == T{}) continue;
      T* crow = c + r * cols;
      for (std::size_t j = 0; j < cols; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[rows x inner] += A * B^T with A[rows x cols], B[inner x cols]
template <typename T>
void gemm_bt_acc(const T* a, const T* b, T* c, std::size_t rows, std::size_t inner, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const T* arow = a + i * cols;
    for (std::size_t r = 0; r < inner; ++r) {
      const T* brow = b + r * cols;
      T acc{};
      for (std::size_t j = 0; j < cols; ++j) acc += arow[j] * brow[j];
      c[i * inner + r] += acc;
    }
  }
}

// Output columns [lo, hi) for which ix = ox*stride + kx - pad stays inside [0, width).
inline void valid_range(int kx, int pad, int stride, int width, int ow, int& lo, int& hi) {
  const int first = pad - kx;  // smallest ox*stride allowed
  lo = first <= 0 ? 0 : (first + stride - 1) / stride;
  const int last = width - 1 + pad - kx;
  hi = last < 0 ? 0 : std::min(ow, last / stride + 1);
  if (hi < lo) hi = lo;
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicConvKernel<T>& k) {
  check(input, k, ConvKind::conventional);
  BasicTensor<T> out = make_output(input, k);
  const int oh = out.height(), ow = out.width();
  const auto col = im2col(input, k, oh, ow);
  gemm_acc(k.weights.data(), col.data(), out.data().data(), k.out_channels,
           static_cast<std::size_t>(k.in_channels) * k.size * k.size,
           static_cast<std::size_t>(oh) * ow);
  return out;
}

template <typename T>
BasicTensor<T> depthwise_conv(const BasicTensor<T>& input, const BasicConvKernel<T>& k) {
  check(input, k, ConvKind::depthwise);
  BasicTensor<T> out = make_output(input, k);
  const int oh = out.height(), ow = out.width();
  for (int m = 0; m < k.in_channels; ++m)
    for (int ky = 0; ky < k.size; ++ky)
      for (int kx = 0; kx < k.size; ++kx) {
        const T wv = k.dw(m, ky, kx);
        int lo, hi;
        valid_range(kx, k.padding, k.stride, input.width(), ow, lo, hi);
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * k.stride + ky - k.padding;
          if (iy < 0 || iy >= input.height()) continue;
          const T* src = &input.at(m, iy, 0);
          const int shift = kx - k.padding;
          T* dst = &out.at(m, oy, 0);
          if (k.stride == 1) {
            for (int ox = lo; ox < hi; ++ox) dst[ox] += wv * src[ox + shift];
          } else {
            for (int ox = lo; ox < hi; ++ox) dst[ox] += wv * src[ox * k.stride + shift];
          }
        }
      }
  return out;
}

template <typename T>
BasicTensor<T> pointwise_conv(const BasicTensor<T>& input, const BasicConvKernel<T>& k) {
  check(input, k, ConvKind::pointwise);
  BasicTensor<T> out = make_output(input, k);
  gemm_acc(k.weights.data(), input.data().data(), out.data().data(), k.out_channels,
           k.in_channels, input.plane());
  return out;
}

template <typename T>
BasicTensor<T> conv2d_direct(const BasicTensor<T>& input, const BasicConvKernel<T>& k,
                             OpCount* count) {
  check(input, k, ConvKind::conventional);
  BasicTensor<T> out = make_output(input, k);
  std::uint64_t mults = 0;
  for (int n = 0; n < k.out_channels; ++n)
    for (int oy = 0; oy < out.height(); ++oy)
      for (int ox = 0; ox < out.width(); ++ox) {
        T acc = out.at(n, oy, ox);
        for (int m = 0; m < k.in_channels; ++m)
          for (int ky = 0; ky < k.size; ++ky)
            for (int kx = 0; kx < k.size; ++kx) {
              const int iy = oy * k.stride + ky - k.padding;
              const int ix = ox * k.stride + kx - k.padding;
              const bool inside = iy >= 0 && iy < input.height() && ix >= 0 && ix < input.width();
              acc += k.w(n, m, ky, kx) * (inside ? input.at(m, iy, ix) : T{});
              ++mults;
            }
        out.at(n, oy, ox) = acc;
      }
  if (count) count->multiplies += mults;
  return out;
}

template <typename T>
BasicTensor<T> depthwise_conv_direct(const BasicTensor<T>& input, const BasicConvKernel<T>& k,
                                     OpCount* count) {
  check(input, k, ConvKind::depthwise);
  BasicTensor<T> out = make_output(input, k);
  std::uint64_t mults = 0;
  for (int m = 0; m < k.in_channels; ++m)
    for (int oy = 0; oy < out.height(); ++oy)
      for (int ox = 0; ox < out.width(); ++ox) {
        T acc = out.at(m, oy, ox);
        for (int ky = 0; ky < k.size; ++ky)
          for (int kx = 0; kx < k.size; ++kx) {
            const int iy = oy * k.stride + ky - k.padding;
            const int ix = ox * k.stride + kx - k.padding;
            const bool inside = iy >= 0 && iy < input.height() && ix >= 0 && ix < input.width();
            acc += k.dw(m, ky, kx) * (inside ? input.at(m, iy, ix) : T{});
            ++mults;
          }
        out.at(m, oy, ox) = acc;
      }
  if (count) count->multiplies += mults;
  return out;
}

template <typename T>
BasicTensor<T> pointwise_conv_direct(const BasicTensor<T>& input, const BasicConvKernel<T>& k,
                                     OpCount* count) {
  check(input, k, ConvKind::pointwise);
  BasicTensor<T> out = make_output(input, k);
  std::uint64_t mults = 0;
  for (int n = 0; n < k.out_channels; ++n)
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) {
        T acc = out.at(n, y, x);
        for (int m = 0; m < k.in_channels; ++m) {
          acc += k.weights[static_cast<std::size_t>(n) * k.in_channels + m] * input.at(m, y, x);
          ++mults;
        }
        out.at(n, y, x) = acc;
      }
  if (count) count->multiplies += mults;
  return out;
}

template <typename T>
BasicTensor<T> apply_conv(const BasicTensor<T>& input, const BasicConvKernel<T>& k) {
  switch (k.kind) {
    case ConvKind::conventional: return conv2d(input, k);
    case ConvKind::depthwise: return depthwise_conv(input, k);
    case ConvKind::pointwise: return pointwise_conv(input, k);
  }
  throw LayerTypeError("unknown convolution kind");
}

template <typename T>
ConvGrads<T> conv_backward(const BasicTensor<T>& input, const BasicConvKernel<T>& k,
                           const BasicTensor<T>& grad_out) {
  check(input, k, k.kind);
  const int oh = k.output_side(input.height()), ow = k.output_side(input.width());
  if (grad_out.channels() != k.out_channels || grad_out.height() != oh || grad_out.width() != ow)
    throw ShapeError("output gradient shape does not match convolution output");

  ConvGrads<T> g{BasicTensor<T>(input.channels(), input.height(), input.width()),
                 std::vector<T>(k.weights.size(), T{}), {}};
  if (!k.bias.empty()) {
    g.bias.assign(k.out_channels, T{});
    for (int n = 0; n < k.out_channels; ++n)
      for (T v : grad_out.channel(n)) g.bias[n] += v;
  }

  const std::size_t cols = static_cast<std::size_t>(oh) * ow;
  switch (k.kind) {
    case ConvKind::conventional: {
      const std::size_t inner = static_cast<std::size_t>(k.in_channels) * k.size * k.size;
      const auto col = im2col(input, k, oh, ow);
      gemm_bt_acc(grad_out.data().data(), col.data(), g.weights.data(), k.out_channels, inner, cols);
      std::vector<T> dcol(col.size(), T{});
      gemm_at_acc(k.weights.data(), grad_out.data().data(), dcol.data(), k.out_channels, inner, cols);
      col2im(dcol, k, oh, ow, g.input);
      break;
    }
    case ConvKind::pointwise: {
      gemm_bt_acc(grad_out.data().data(), input.data().data(), g.weights.data(), k.out_channels,
                  k.in_channels, cols);
      gemm_at_acc(k.weights.data(), grad_out.data().data(), g.input.data().data(), k.out_channels,
                  k.in_channels, cols);
      break;
    }
    case ConvKind::depthwise: {
      for (int m = 0; m < k.in_channels; ++m)
        for (int ky = 0; ky < k.size; ++ky)
          for (int kx = 0; kx < k.size; ++kx) {
            const T wv = k.dw(m, ky, kx);
            T wg{};
            int lo, hi;
            valid_range(kx, k.padding, k.stride, input.width(), ow, lo, hi);
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * k.stride + ky - k.padding;
              if (iy < 0 || iy >= input.height()) continue;
              const T* src = &input.at(m, iy, 0);
              T* dsrc = &g.input.at(m, iy, 0);
              const int shift = kx - k.padding;
              const T* gout = &grad_out.at(m, oy, 0);
              for (int ox = lo; ox < hi; ++ox) {
                wg += gout[ox] * src[ox * k.stride + shift];
                dsrc[ox * k.stride + shift] += wv * gout[ox];
              }
            }
            g.weights[(static_cast<std::size_t>(m) * k.size + ky) * k.size + kx] += wg;
          }
      break;
    }
  }
  return g;
}

template <typename T>
BasicConvKernel<T> compose_separable(const BasicConvKernel<T>& d, const BasicConvKernel<T>& p) {
  if (d.kind != ConvKind::depthwise || p.kind != ConvKind::pointwise)
    throw LayerTypeError("compose_separable needs a depthwise and a pointwise kernel");
  validate(d);
  validate(p);
  if (p.in_channels != d.out_channels) throw ShapeError("pointwise input must match depthwise output");
  auto k = BasicConvKernel<T>::conventional(p.out_channels, d.in_channels, d.size, d.stride, d.padding);
  for (int n = 0; n < p.out_channels; ++n)
    for (int m = 0; m < d.in_channels; ++m)
      for (int ky = 0; ky < d.size; ++ky)
        for (int kx = 0; kx < d.size; ++kx)
          k.w(n, m, ky, kx) = d.dw(m, ky, kx) * p.weights[static_cast<std::size_t>(n) * p.in_channels + m];
  if (!d.bias.empty() || !p.bias.empty()) {
    // Depthwise bias folds through the pointwise map.
    k.bias.assign(p.out_channels, T{});
    for (int n = 0; n < p.out_channels; ++n) {
      T b = p.bias.empty() ? T{} : p.bias[n];
      if (!d.bias.empty())
        for (int m = 0; m < d.in_channels; ++m)
          b += p.weights[static_cast<std::size_t>(n) * p.in_channels + m] * d.bias[m];
      k.bias[n] = b;
    }
  }
  return k;
}

template <typename T>
double factorized_equals_composed(const BasicConvKernel<T>& d, const BasicConvKernel<T>& p,
                                  const BasicTensor<T>& input) {
  const auto composed = conv2d(input, compose_separable(d, p));
  const auto factored = pointwise_conv(depthwise_conv(input, d), p);
  double max_abs = 0.0, max_dev = 0.0;
  for (std::size_t i = 0; i < composed.size(); ++i) {
    max_abs = std::max(max_abs, std::abs(static_cast<double>(composed.data()[i])));
    max_dev = std::max(max_dev, std::abs(static_cast<double>(composed.data()[i]) - factored.data()[i]));
  }
  return max_abs > 0.0 ? max_dev / max_abs : max_dev;
}

#define EDGEDET_INSTANTIATE_CONV(T)                                                            \
  template struct BasicConvKernel<T>;                                                          \
  template void validate(const BasicConvKernel<T>&);                                           \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicConvKernel<T>&);            \
  template BasicTensor<T> depthwise_conv(const BasicTensor<T>&, const BasicConvKernel<T>&);    \
  template BasicTensor<T> pointwise_conv(const BasicTensor<T>&, const BasicConvKernel<T>&);    \
  template BasicTensor<T> conv2d_direct(const BasicTensor<T>&, const BasicConvKernel<T>&,      \
                                        OpCount*);                                             \
  template BasicTensor<T> depthwise_conv_direct(const BasicTensor<T>&,                         \
                                                const BasicConvKernel<T>&, OpCount*);          \
  template BasicTensor<T> pointwise_conv_direct(const BasicTensor<T>&,                         \
                                                const BasicConvKernel<T>&, OpCount*);          \
  template BasicTensor<T> apply_conv(const BasicTensor<T>&, const BasicConvKernel<T>&);        \
  template ConvGrads<T> conv_backward(const BasicTensor<T>&, const BasicConvKernel<T>&,        \
                                      const BasicTensor<T>&);                                  \
  template BasicConvKernel<T> compose_separable(const BasicConvKernel<T>&,                     \
                                                const BasicConvKernel<T>&);                    \
  template double factorized_equals_composed(const BasicConvKernel<T>&,                       \
                                             const BasicConvKernel<T>&, const BasicTensor<T>&);

EDGEDET_INSTANTIATE_CONV(float)
EDGEDET_INSTANTIATE_CONV(double)

#undef EDGEDET_INSTANTIATE_CONV

}  // namespace edgedet::lcnn
