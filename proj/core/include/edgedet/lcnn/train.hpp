#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "edgedet/geometry.hpp"
#include "edgedet/lcnn/network.hpp"

namespace edgedet::lcnn {

struct TrainSample {
  Tensor input;                     // already prepared for the model input
  std::vector<BoundingBox> boxes;   // normalised [0, 1] coordinates
};

struct TrainOptions {
  int steps = 200;
  double learning_rate = 0.01;
  double momentum = 0.9;
  SsdLossOptions loss;
  /// Global gradient-norm clip; 0 disables it.
  double clip_norm = 10.0;
  /// 0 means full batch.
  int batch_size = 0;
  /// Share of samples held out for validation, rounded down.
  double validation_fraction = 0.15;
  std::uint64_t seed = 42;
};

struct TrainReport {
  std::vector<double> loss;  // mean training loss before each step
  double initial_loss = 0.0;
  double final_loss = 0.0;   // after the last step
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
  std::optional<double> validation_loss;
};

/// Mean detection loss of `model` over `samples` (no update).
double dataset_loss(const CnnModel& model, std::span<const TrainSample> samples,
                    const SsdLossOptions& loss = {});

/// Momentum SGD on softmax-MSE classification (with hard-negative mining)
/// plus smooth-L1 localisation.
/// Weights and batch-norm scale/shift are trained; batch-norm statistics
/// stay fixed. Throws ConfigError for a non-positive learning rate and
/// InputError for an empty dataset.
TrainReport train_toy(CnnModel& model, std::span<const TrainSample> samples,
                      const TrainOptions& opts = {});

}  // namespace edgedet::lcnn
