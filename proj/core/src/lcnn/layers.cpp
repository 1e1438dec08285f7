#include "edgedet/lcnn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "edgedet/errors.hpp"

namespace edgedet::lcnn {

template <typename T>
BasicBatchNorm<T> BasicBatchNorm<T>::identity(int channels) {
  return {std::vector<T>(channels, T{1}), std::vector<T>(channels, T{0}),
          std::vector<T>(channels, T{0}), std::vector<T>(channels, T{1})};
}

namespace {

template <typename T>
void check_bn(const BasicTensor<T>& input, const BasicBatchNorm<T>& bn) {
  const auto c = static_cast<std::size_t>(input.channels());
  if (bn.gamma.size() != c || bn.beta.size() != c || bn.mean.size() != c || bn.var.size() != c)
    throw ShapeError("batch-norm parameters do not match channel count");
}

}  // namespace

template <typename T>
BasicTensor<T> batchnorm(const BasicTensor<T>& input, const BasicBatchNorm<T>& bn) {
  check_bn(input, bn);
  BasicTensor<T> out = input;
  for (int c = 0; c < input.channels(); ++c) {
    const T scale = static_cast<T>(bn.gamma[c] / std::sqrt(static_cast<double>(bn.var[c]) + kBatchNormEpsilon));
    const T shift = bn.beta[c] - bn.mean[c] * scale;
    for (T& v : out.channel(c)) v = v * scale + shift;
  }
  return out;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BasicTensor<T>& input, const BasicBatchNorm<T>& bn,
                                     const BasicTensor<T>& grad_out) {
  check_bn(input, bn);
  if (!input.same_shape(grad_out)) throw ShapeError("batch-norm gradient shape mismatch");
  BatchNormGrads<T> g{BasicTensor<T>(input.channels(), input.height(), input.width()),
                      std::vector<T>(input.channels(), T{}), std::vector<T>(input.channels(), T{})};
  for (int c = 0; c < input.channels(); ++c) {
    const T inv_std = static_cast<T>(1.0 / std::sqrt(static_cast<double>(bn.var[c]) + kBatchNormEpsilon));
    const T scale = bn.gamma[c] * inv_std;
    const auto x = input.channel(c);
    const auto gy = grad_out.channel(c);
    auto gx = g.input.channel(c);
    T dgamma{}, dbeta{};
    for (std::size_t i = 0; i < x.size(); ++i) {
      dgamma += gy[i] * (x[i] - bn.mean[c]) * inv_std;
      dbeta += gy[i];
      gx[i] = gy[i] * scale;
    }
    g.gamma[c] = dgamma;
    g.beta[c] = dbeta;
  }
  return g;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input) {
  BasicTensor<T> out = input;
  for (T& v : out.data()) v = std::max(v, T{});
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out) {
  if (!input.same_shape(grad_out)) throw ShapeError("relu gradient shape mismatch");
  BasicTensor<T> g = grad_out;
  const auto x = input.data();
  auto d = g.data();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!(x[i] > T{})) d[i] = T{};
  return g;
}

template <typename T>
std::vector<T> softmax_rows(std::span<const T> logits, int classes) {
  if (classes < 1 || logits.size() % classes != 0) throw ShapeError("softmax row length mismatch");
  std::vector<T> out(logits.size());
  for (std::size_t r = 0; r < logits.size(); r += classes) {
    const T mx = *std::max_element(logits.begin() + r, logits.begin() + r + classes);
    T sum{};
    for (int c = 0; c < classes; ++c) {
      out[r + c] = std::exp(logits[r + c] - mx);
      sum += out[r + c];
    }
    for (int c = 0; c < classes; ++c) out[r + c] /= sum;
  }
  return out;
}

template <typename T>
double mse(std::span<const T> predicted, std::span<const T> target) {
  if (predicted.size() != target.size()) throw ShapeError("mse length mismatch");
  if (predicted.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = static_cast<double>(predicted[i]) - target[i];
    s += d * d;
  }
  return s / static_cast<double>(predicted.size());
}

template <typename T>
double softmax_mse(std::span<const T> logits, std::span<const T> target, int classes,
                   std::vector<T>* grad_logits) {
  const auto p = softmax_rows(logits, classes);
  const double loss = mse<T>(p, target);
  if (grad_logits) {
    grad_logits->assign(logits.size(), T{});
    const T scale = static_cast<T>(2.0 / static_cast<double>(logits.size()));
    for (std::size_t r = 0; r < logits.size(); r += classes) {
      // dL/dp_c then through the softmax Jacobian.
      T dot{};
      for (int c = 0; c < classes; ++c) dot += p[r + c] * scale * (p[r + c] - target[r + c]);
      for (int c = 0; c < classes; ++c)
        (*grad_logits)[r + c] = p[r + c] * (scale * (p[r + c] - target[r + c]) - dot);
    }
  }
  return loss;
}

template <typename T>
double smooth_l1(std::span<const T> predicted, std::span<const T> target, std::vector<T>* grad) {
  if (predicted.size() != target.size()) throw ShapeError("smooth-L1 length mismatch");
  if (grad) grad->assign(predicted.size(), T{});
  double loss = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = static_cast<double>(predicted[i]) - target[i];
    if (std::abs(d) < 1.0) {
      loss += 0.5 * d * d;
      if (grad) (*grad)[i] = static_cast<T>(d);
    } else {
      loss += std::abs(d) - 0.5;
      if (grad) (*grad)[i] = static_cast<T>(d > 0 ? 1.0 : -1.0);
    }
  }
  return loss;
}

#define EDGEDET_INSTANTIATE_LAYERS(T)                                                          \
  template struct BasicBatchNorm<T>;                                                           \
  template BasicTensor<T> batchnorm(const BasicTensor<T>&, const BasicBatchNorm<T>&);          \
  template BatchNormGrads<T> batchnorm_backward(const BasicTensor<T>&, const BasicBatchNorm<T>&, \
                                                const BasicTensor<T>&);                        \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                         \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);         \
  template std::vector<T> softmax_rows(std::span<const T>, int);                               \
  template double mse(std::span<const T>, std::span<const T>);                                 \
  template double softmax_mse(std::span<const T>, std::span<const T>, int, std::vector<T>*);   \
  template double smooth_l1(std::span<const T>, std::span<const T>, std::vector<T>*);

EDGEDET_INSTANTIATE_LAYERS(float)
EDGEDET_INSTANTIATE_LAYERS(double)

#undef EDGEDET_INSTANTIATE_LAYERS

}  // namespace edgedet::lcnn
