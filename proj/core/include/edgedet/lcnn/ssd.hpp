#pragma once

#include <array>
#include <span>
#include <vector>

#include "edgedet/geometry.hpp"

namespace edgedet::lcnn {

/// Single-shot head parameters. Scales are spread linearly over
/// [min_scale, max_scale] across the tapped feature maps; offsets use the
/// centre-size encoding with the two variances.
struct SsdConfig {
  std::vector<double> aspect_ratios = {1.0, 2.0, 0.5, 3.0, 1.0 / 3.0};
  double min_scale = 0.2;
  double max_scale = 0.9;
  double center_variance = 0.1;
  double size_variance = 0.2;
  double match_iou = 0.5;

  int boxes_per_location() const { return static_cast<int>(aspect_ratios.size()); }
  friend bool operator==(const SsdConfig&, const SsdConfig&) = default;
};

/// Default box in normalised [0, 1] image coordinates.
struct PriorBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

double layer_scale(const SsdConfig& cfg, int layer, int layer_count);

/// Ordered by map, then row, column and aspect ratio, matching the order in
/// which the network emits predictions.
std::vector<PriorBox> default_boxes(const SsdConfig& cfg, std::span<const int> map_sides);

/// Corner-form box in normalised coordinates.
BoundingBox prior_as_box(const PriorBox& p);

/// Offsets (tx, ty, tw, th) that turn `prior` into `target` (both normalised).
std::array<double, 4> encode_box(const BoundingBox& target, const PriorBox& prior,
                                 const SsdConfig& cfg);
BoundingBox decode_box(std::span<const double, 4> offsets, const PriorBox& prior,
                       const SsdConfig& cfg);

/// Index of the ground-truth box each prior is responsible for, or -1.
/// A prior matches when its best IoU reaches cfg.match_iou; additionally each
/// ground-truth box claims its single best prior so no object goes unmatched.
std::vector<int> match_priors(std::span<const PriorBox> priors, std::span<const BoundingBox> truth,
                              const SsdConfig& cfg);

inline constexpr int kPersonClass = 0;
inline constexpr int kBackgroundClass = 1;

template <typename T>
struct SsdTargets {
  std::vector<T> classes;  // priors x 2, one-hot
  std::vector<T> offsets;  // priors x 4, zero for unmatched priors
  std::vector<int> matches;
  int positives = 0;
};

template <typename T>
SsdTargets<T> build_targets(std::span<const PriorBox> priors, std::span<const BoundingBox> truth,
                            const SsdConfig& cfg);

struct SsdLossOptions {
  double loc_weight = 1.0;
  /// Hard-negative mining: the classification term covers every positive
  /// prior plus this many negatives per positive (at least one positive's
  /// worth), taking the negatives with the highest person score. 0 keeps
  /// every prior.
  double negative_ratio = 3.0;
};

struct SsdLoss {
  double total = 0.0;
  double classification = 0.0;  // MSE of softmax scores against one-hot targets
  double localization = 0.0;    // smooth-L1 over matched priors / max(1, positives)
  std::size_t selected = 0;     // priors in the classification term
};

template <typename T>
SsdLoss ssd_loss(std::span<const T> logits, std::span<const T> offsets,
                 const SsdTargets<T>& targets, const SsdLossOptions& opts,
                 std::vector<T>* grad_logits, std::vector<T>* grad_offsets);

}  // namespace edgedet::lcnn
