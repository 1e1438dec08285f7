#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edgedet/geometry.hpp"
#include "edgedet/image.hpp"

namespace edgedet::haar {

enum class FeatureKind { two_rect, three_rect, four_rect };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

/// Rectangle relative to the detection window, with a +1 (white) or -1
/// (black) weight.
struct WeightedRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  int weight = 1;

  friend bool operator==(const WeightedRect&, const WeightedRect&) = default;
};

struct HaarFeature {
  FeatureKind kind = FeatureKind::two_rect;
  std::vector<WeightedRect> rects;
  int window_w = 24;
  int window_h = 24;

  friend bool operator==(const HaarFeature&, const HaarFeature&) = default;
};

/// Throws ConfigError when the rect count does not match the kind, a rect
/// leaves the window, or the weighted areas do not cancel.
void validate(const HaarFeature& f);

// Builders for the Fig. 2 shapes. Each cell is `cw` x `ch`; white cells
// carry +1. The three-rect centre band is two cells wide so that +1/-1/+1
// weights still cancel on uniform input.
HaarFeature two_rect_side_by_side(int x, int y, int cw, int ch, int window_w = 24, int window_h = 24);
HaarFeature two_rect_stacked(int x, int y, int cw, int ch, int window_w = 24, int window_h = 24);
HaarFeature three_rect_side_by_side(int x, int y, int cw, int ch, int window_w = 24, int window_h = 24);
HaarFeature three_rect_stacked(int x, int y, int cw, int ch, int window_w = 24, int window_h = 24);
HaarFeature four_rect(int x, int y, int cw, int ch, int window_w = 24, int window_h = 24);

/// Every feature shape at the given position and cell-size strides. With
/// both strides at 1 on a 24x24 window this is the exhaustive set; the
/// default 4-pixel grid keeps desk-scale training cheap.
std::vector<HaarFeature> enumerate_features(int window_w = 24, int window_h = 24,
                                            int position_stride = 4, int size_stride = 4);

/// Feature response inside `window` (top-left at window.x, window.y; extent
/// window_w*scale by window_h*scale). Rect corners are rounded to the pixel
/// grid, each rect sum is rescaled to its nominal area, and the total is
/// divided by the nominal window area, so responses are comparable across
/// scales. Throws BoundsError when the window leaves the image.
double eval_feature(const HaarFeature& f, const IntegralImage& ii, const BoundingBox& window,
                    double scale);

/// Discrete stump h(x) = polarity * sign(f(x) - threshold), with f(x) >=
/// threshold counted as the positive side.
struct WeakLearner {
  HaarFeature feature;
  double threshold = 0.0;
  int polarity = 1;
  double alpha = 0.0;

  int predict(double response) const {
    return (response >= threshold ? 1 : -1) * polarity;
  }
};

/// One window-sized training sample.
struct Sample {
  IntegralImage ii;
  int label = 1;  // +1 object, -1 background
};

/// Weighted misclassification rate of a single learner on window samples.
/// Throws InputError on empty input or when weights do not sum to 1.
double weak_learner_error(const WeakLearner& learner, std::span<const Sample> samples,
                          std::span<const double> weights);

/// alpha = 0.5 * ln((1 - eps) / eps), with eps clamped into [1e-10, 1 - 1e-10].
double learner_weight(double error);

// ---------------------------------------------------------------------------
// Generic discrete AdaBoost over precomputed responses. responses[f][i] is
// the response of candidate f on sample i.

struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;
  int polarity = 1;
  double alpha = 0.0;
  double error = 0.0;  // weighted error at selection time

  int predict(double response) const { return (response >= threshold ? 1 : -1) * polarity; }
};

struct BoostRound {
  double error = 0.0;
  double alpha = 0.0;
  double weight_sum = 0.0;       // after renormalisation
  double ensemble_error = 0.0;   // unweighted training error of F_t
};

struct BoostResult {
  std::vector<Stump> stumps;
  std::vector<BoostRound> rounds;
};

/// Lowest weighted-error stump for one candidate's responses.
Stump best_stump(std::span<const double> responses, std::span<const int> labels,
                 std::span<const double> weights);

BoostResult boost_stumps(const std::vector<std::vector<double>>& responses,
                         std::span<const int> labels, int rounds);

/// AdaBoost over Haar candidates evaluated on window samples.
std::vector<WeakLearner> adaboost_train(std::span<const Sample> samples, int rounds,
                                        std::span<const HaarFeature> candidates,
                                        std::vector<BoostRound>* trace = nullptr);

// ---------------------------------------------------------------------------

struct Stage {
  std::vector<WeakLearner> learners;
  double threshold = 0.0;
};

struct CascadeModel {
  int window_w = 24;
  int window_h = 24;
  std::vector<Stage> stages;
};

/// Sum of alpha_t * h_t(x) for one stage at a window.
double stage_score(const Stage& stage, const IntegralImage& ii, const BoundingBox& window,
                   double scale);

struct CascadeTrainOptions {
  std::vector<int> stage_rounds = {10};
  std::vector<double> stage_thresholds;  // missing entries default to 0
};

/// Attentional cascade: stage k is boosted on all positives and on the
/// negatives that every earlier stage still accepts. Training stops early
/// once no negatives survive.
CascadeModel train_cascade(std::span<const Sample> positives, std::span<const Sample> negatives,
                           std::span<const HaarFeature> candidates,
                           const CascadeTrainOptions& options);

struct CascadeDetectOptions {
  double nms_iou = 0.3;
  std::string label = "person";
};

struct CascadeDetectStats {
  std::size_t windows_evaluated = 0;
  std::size_t windows_accepted = 0;
};

/// Slides the window over the image at scales 1, f, f^2, ... while it fits;
/// the step grows with the scale. Accepted windows are merged by NMS and
/// scored by their last-stage margin.
std::vector<Detection> cascade_detect(const CascadeModel& model, const Image& img, int step,
                                      double scale_factor,
                                      const CascadeDetectOptions& options = {},
                                      CascadeDetectStats* stats = nullptr);

/// Number of windows cascade_detect() visits on a width x height image.
std::size_t count_windows(int window_w, int window_h, int width, int height, int step,
                          double scale_factor);

// Versioned JSON persistence.
std::string to_json(const CascadeModel& model);
CascadeModel cascade_from_json(const std::string& text);
void save_cascade(const CascadeModel& model, const std::filesystem::path& path);
CascadeModel load_cascade(const std::filesystem::path& path);

}  // namespace edgedet::haar
