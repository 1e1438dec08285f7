#pragma once

#include <span>
#include <vector>

#include "edgedet/lcnn/tensor.hpp"

namespace edgedet::lcnn {

inline constexpr double kBatchNormEpsilon = 1e-5;

/// Per-channel affine normalisation with fixed statistics:
/// (x - mean) / sqrt(var + 1e-5) * gamma + beta.
template <typename T>
struct BasicBatchNorm {
  std::vector<T> gamma;
  std::vector<T> beta;
  std::vector<T> mean;
  std::vector<T> var;

  static BasicBatchNorm identity(int channels);
  int channels() const { return static_cast<int>(gamma.size()); }

  template <typename U>
  BasicBatchNorm<U> cast() const {
    return {{gamma.begin(), gamma.end()}, {beta.begin(), beta.end()},
            {mean.begin(), mean.end()}, {var.begin(), var.end()}};
  }
};

using BatchNorm = BasicBatchNorm<float>;

template <typename T>
BasicTensor<T> batchnorm(const BasicTensor<T>& input, const BasicBatchNorm<T>& bn);

template <typename T>
struct BatchNormGrads {
  BasicTensor<T> input;
  std::vector<T> gamma;
  std::vector<T> beta;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BasicTensor<T>& input, const BasicBatchNorm<T>& bn,
                                     const BasicTensor<T>& grad_out);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input);

/// Passes the gradient where the forward input was strictly positive.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out);

/// Row-wise softmax of a rows x classes matrix.
template <typename T>
std::vector<T> softmax_rows(std::span<const T> logits, int classes);

/// Mean squared error (1/n) sum (p_i - y_i)^2 over every element.
template <typename T>
double mse(std::span<const T> predicted, std::span<const T> target);

/// Loss = mse(softmax_rows(logits), target) and its gradient w.r.t. logits.
template <typename T>
double softmax_mse(std::span<const T> logits, std::span<const T> target, int classes,
                   std::vector<T>* grad_logits);

/// Sum of smooth-L1 (Huber, delta 1) terms and its gradient.
template <typename T>
double smooth_l1(std::span<const T> predicted, std::span<const T> target, std::vector<T>* grad);

}  // namespace edgedet::lcnn
