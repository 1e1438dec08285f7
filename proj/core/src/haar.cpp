#include "edgedet/haar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "edgedet/errors.hpp"

namespace edgedet::haar {

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::two_rect: return "two-rect";
    case FeatureKind::three_rect: return "three-rect";
    case FeatureKind::four_rect: return "four-rect";
  }
  return "unknown";
}

FeatureKind feature_kind_from_string(const std::string& name) {
  if (name == "two-rect") return FeatureKind::two_rect;
  if (name == "three-rect") return FeatureKind::three_rect;
  if (name == "four-rect") return FeatureKind::four_rect;
  throw FormatError("unknown Haar feature kind '" + name + "'");
}

void validate(const HaarFeature& f) {
  const std::size_t expected = f.kind == FeatureKind::two_rect     ? 2
                               : f.kind == FeatureKind::three_rect ? 3
                                                                   : 4;
  if (f.rects.size() != expected) throw ConfigError("Haar feature has wrong rectangle count");
  long balance = 0;
  for (const auto& r : f.rects) {
    if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > f.window_w ||
        r.y + r.h > f.window_h)
      throw ConfigError("Haar rectangle outside its window");
    if (r.weight != 1 && r.weight != -1) throw ConfigError("Haar rectangle weight must be +-1");
    balance += static_cast<long>(r.weight) * r.w * r.h;
  }
  if (balance != 0) throw ConfigError("Haar feature weights do not cancel");
}

namespace {

HaarFeature make(FeatureKind kind, std::vector<WeightedRect> rects, int ww, int wh) {
  HaarFeature f{kind, std::move(rects), ww, wh};
  validate(f);
  return f;
}

}  // namespace

HaarFeature two_rect_side_by_side(int x, int y, int cw, int ch, int ww, int wh) {
  return make(FeatureKind::two_rect, {{x, y, cw, ch, +1}, {x + cw, y, cw, ch, -1}}, ww, wh);
}

HaarFeature two_rect_stacked(int x, int y, int cw, int ch, int ww, int wh) {
  return make(FeatureKind::two_rect, {{x, y, cw, ch, +1}, {x, y + ch, cw, ch, -1}}, ww, wh);
}

HaarFeature three_rect_side_by_side(int x, int y, int cw, int ch, int ww, int wh) {
  return make(FeatureKind::three_rect,
              {{x, y, cw, ch, +1}, {x + cw, y, 2 * cw, ch, -1}, {x + 3 * cw, y, cw, ch, +1}}, ww,
              wh);
}

HaarFeature three_rect_stacked(int x, int y, int cw, int ch, int ww, int wh) {
  return make(FeatureKind::three_rect,
              {{x, y, cw, ch, +1}, {x, y + ch, cw, 2 * ch, -1}, {x, y + 3 * ch, cw, ch, +1}}, ww,
              wh);
}

HaarFeature four_rect(int x, int y, int cw, int ch, int ww, int wh) {
  return make(FeatureKind::four_rect,
              {{x, y, cw, ch, +1},
               {x + cw, y, cw, ch, -1},
               {x, y + ch, cw, ch, -1},
               {x + cw, y + ch, cw, ch, +1}},
              ww, wh);
}

std::vector<HaarFeature> enumerate_features(int ww, int wh, int position_stride,
                                            int size_stride) {
  if (position_stride < 1 || size_stride < 1) throw ConfigError("feature strides must be >= 1");
  std::vector<HaarFeature> out;
  // (cells across, cells down, builder)
  struct Shape {
    int nx, ny;
    HaarFeature (*build)(int, int, int, int, int, int);
  };
  const Shape shapes[] = {{2, 1, &two_rect_side_by_side},   {1, 2, &two_rect_stacked},
                          {4, 1, &three_rect_side_by_side}, {1, 4, &three_rect_stacked},
                          {2, 2, &four_rect}};
  for (const auto& s : shapes) {
    for (int cw = size_stride; cw * s.nx <= ww; cw += size_stride)
      for (int ch = size_stride; ch * s.ny <= wh; ch += size_stride)
        for (int y = 0; y + ch * s.ny <= wh; y += position_stride)
          for (int x = 0; x + cw * s.nx <= ww; x += position_stride)
            out.push_back(s.build(x, y, cw, ch, ww, wh));
  }
  return out;
}

namespace {

int scaled(int v, double scale) { return static_cast<int>(std::lround(v * scale)); }

// Response without bounds checks; callers guarantee the window fits.
double response(const HaarFeature& f, const IntegralImage& ii, int wx, int wy, double scale) {
  double total = 0.0;
  for (const auto& r : f.rects) {
    const int x0 = wx + scaled(r.x, scale);
    const int y0 = wy + scaled(r.y, scale);
    const int x1 = std::max(x0 + 1, wx + scaled(r.x + r.w, scale));
    const int y1 = std::max(y0 + 1, wy + scaled(r.y + r.h, scale));
    const double mean = ii.sum(x0, y0, x1 - x0, y1 - y0) / ((x1 - x0) * static_cast<double>(y1 - y0));
    total += r.weight * mean * (static_cast<double>(r.w) * r.h);
  }
  return total / (static_cast<double>(f.window_w) * f.window_h);
}

int window_extent(int nominal, double scale) { return std::max(1, scaled(nominal, scale)); }

}  // namespace

double eval_feature(const HaarFeature& f, const IntegralImage& ii, const BoundingBox& window,
                    double scale) {
  if (!(scale > 0.0)) throw ConfigError("feature scale must be positive");
  const int wx = static_cast<int>(std::lround(window.x));
  const int wy = static_cast<int>(std::lround(window.y));
  const int ew = window_extent(f.window_w, scale);
  const int eh = window_extent(f.window_h, scale);
  if (wx < 0 || wy < 0 || wx + ew > ii.width() || wy + eh > ii.height())
    throw BoundsError("Haar window outside image");
  return response(f, ii, wx, wy, scale);
}

double weak_learner_error(const WeakLearner& learner, std::span<const Sample> samples,
                          std::span<const double> weights) {
  if (samples.empty()) throw InputError("no samples");
  if (weights.size() != samples.size()) throw InputError("one weight per sample required");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw InputError("sample weights must sum to 1");
  double err = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double r = eval_feature(learner.feature, samples[i].ii,
                                  {0, 0, double(learner.feature.window_w), double(learner.feature.window_h)}, 1.0);
    if (learner.predict(r) != samples[i].label) err += weights[i];
  }
  return std::clamp(err, 0.0, 1.0);
}

double learner_weight(double error) {
  const double eps = std::clamp(error, 1e-10, 1.0 - 1e-10);
  return 0.5 * std::log((1.0 - eps) / eps);
}

Stump best_stump(std::span<const double> responses, std::span<const int> labels,
                 std::span<const double> weights) {
  const std::size_t n = responses.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return responses[a] < responses[b]; });

  double pos_total = 0.0, neg_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) (labels[i] > 0 ? pos_total : neg_total) += weights[i];

  Stump best;
  best.error = 2.0;
  double below_pos = 0.0, below_neg = 0.0;
  // Split k puts order[0..k) below the threshold.
  for (std::size_t k = 0; k <= n; ++k) {
    if (k > 0) {
      const std::size_t i = order[k - 1];
      (labels[i] > 0 ? below_pos : below_neg) += weights[i];
      if (k < n && responses[order[k]] == responses[i]) continue;
    }
    double threshold;
    if (k == 0) {
      threshold = responses[order[0]] - 1.0;
    } else if (k == n) {
      threshold = responses[order[n - 1]] + 1.0;
    } else {
      threshold = 0.5 * (responses[order[k - 1]] + responses[order[k]]);
    }
    // polarity +1 labels everything at or above the threshold positive.
    const double err_pos = below_pos + (neg_total - below_neg);
    const double err_neg = below_neg + (pos_total - below_pos);
    if (err_pos < best.error) best = {0, threshold, +1, 0.0, err_pos};
    if (err_neg < best.error) best = {0, threshold, -1, 0.0, err_neg};
  }
  return best;
}

BoostResult boost_stumps(const std::vector<std::vector<double>>& responses,
                         std::span<const int> labels, int rounds) {
  if (rounds < 1) throw ConfigError("boosting needs at least one round");
  if (responses.empty()) throw InputError("no candidate features");
  const std::size_t n = labels.size();
  if (n == 0) throw InputError("no samples");
  const bool has_pos = std::any_of(labels.begin(), labels.end(), [](int y) { return y > 0; });
  const bool has_neg = std::any_of(labels.begin(), labels.end(), [](int y) { return y < 0; });
  if (!has_pos || !has_neg) throw InputError("boosting needs both positive and negative samples");
  for (const auto& r : responses)
    if (r.size() != n) throw InputError("response row length differs from label count");

  BoostResult result;
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  std::vector<double> ensemble(n, 0.0);
  for (int t = 0; t < rounds; ++t) {
    Stump best;
    best.error = 2.0;
    for (std::size_t f = 0; f < responses.size(); ++f) {
      Stump s = best_stump(responses[f], labels, weights);
      if (s.error < best.error) {
        best = s;
        best.feature = f;
      }
    }
    best.alpha = learner_weight(best.error);

    double sum = 0.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int h = best.predict(responses[best.feature][i]);
      weights[i] *= std::exp(-best.alpha * labels[i] * h);
      sum += weights[i];
      ensemble[i] += best.alpha * h;
      if ((ensemble[i] >= 0.0 ? 1 : -1) != labels[i]) ++wrong;
    }
    double renormed = 0.0;
    for (double& w : weights) {
      w /= sum;
      renormed += w;
    }
    result.stumps.push_back(best);
    result.rounds.push_back({best.error, best.alpha, renormed,
                             static_cast<double>(wrong) / static_cast<double>(n)});
  }
  return result;
}

namespace {

std::vector<std::vector<double>> response_matrix(std::span<const Sample> samples,
                                                 std::span<const HaarFeature> candidates) {
  std::vector<std::vector<double>> responses(candidates.size(),
                                             std::vector<double>(samples.size()));
  for (std::size_t f = 0; f < candidates.size(); ++f)
    for (std::size_t i = 0; i < samples.size(); ++i)
      responses[f][i] = eval_feature(
          candidates[f], samples[i].ii,
          {0, 0, double(candidates[f].window_w), double(candidates[f].window_h)}, 1.0);
  return responses;
}

}  // namespace

std::vector<WeakLearner> adaboost_train(std::span<const Sample> samples, int rounds,
                                        std::span<const HaarFeature> candidates,
                                        std::vector<BoostRound>* trace) {
  if (samples.empty()) throw InputError("no samples");
  if (candidates.empty()) throw InputError("no candidate features");
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);

  const BoostResult boosted = boost_stumps(response_matrix(samples, candidates), labels, rounds);
  std::vector<WeakLearner> learners;
  for (const auto& s : boosted.stumps)
    learners.push_back({candidates[s.feature], s.threshold, s.polarity, s.alpha});
  if (trace) *trace = boosted.rounds;
  return learners;
}

double stage_score(const Stage& stage, const IntegralImage& ii, const BoundingBox& window,
                   double scale) {
  double sum = 0.0;
  for (const auto& l : stage.learners)
    sum += l.alpha * l.predict(eval_feature(l.feature, ii, window, scale));
  return sum;
}

namespace {

// True when every stage accepts; margin is then the last stage sum minus its threshold.
bool run_cascade(const CascadeModel& model, const IntegralImage& ii, int wx, int wy, double scale,
                 double& margin) {
  for (const auto& stage : model.stages) {
    double sum = 0.0;
    for (const auto& l : stage.learners) sum += l.alpha * l.predict(response(l.feature, ii, wx, wy, scale));
    if (sum < stage.threshold) return false;
    margin = sum - stage.threshold;
  }
  return true;
}

bool accepts(const CascadeModel& model, const IntegralImage& ii) {
  double margin = 0.0;
  return run_cascade(model, ii, 0, 0, 1.0, margin);
}

}  // namespace

CascadeModel train_cascade(std::span<const Sample> positives, std::span<const Sample> negatives,
                           std::span<const HaarFeature> candidates,
                           const CascadeTrainOptions& options) {
  if (positives.empty() || negatives.empty())
    throw InputError("cascade training needs positive and negative samples");
  if (options.stage_rounds.empty()) throw ConfigError("cascade needs at least one stage");
  if (candidates.empty()) throw InputError("no candidate features");

  CascadeModel model;
  model.window_w = candidates.front().window_w;
  model.window_h = candidates.front().window_h;

  std::vector<Sample> remaining(negatives.begin(), negatives.end());
  for (std::size_t k = 0; k < options.stage_rounds.size(); ++k) {
    if (remaining.empty()) break;
    std::vector<Sample> training(positives.begin(), positives.end());
    training.insert(training.end(), remaining.begin(), remaining.end());
    Stage stage;
    stage.learners = adaboost_train(training, options.stage_rounds[k], candidates);
    stage.threshold = k < options.stage_thresholds.size() ? options.stage_thresholds[k] : 0.0;
    model.stages.push_back(std::move(stage));

    CascadeModel partial = model;
    std::erase_if(remaining, [&](const Sample& s) { return !accepts(partial, s.ii); });
  }
  return model;
}

std::size_t count_windows(int window_w, int window_h, int width, int height, int step,
                          double scale_factor) {
  if (step < 1) throw ConfigError("window step must be >= 1");
  if (!(scale_factor > 1.0)) throw ConfigError("scale factor must exceed 1");
  std::size_t total = 0;
  for (double s = 1.0;; s *= scale_factor) {
    const int ew = window_extent(window_w, s), eh = window_extent(window_h, s);
    if (ew > width || eh > height) break;
    const int st = std::max(1, static_cast<int>(std::lround(step * s)));
    total += static_cast<std::size_t>((width - ew) / st + 1) * ((height - eh) / st + 1);
  }
  return total;
}

std::vector<Detection> cascade_detect(const CascadeModel& model, const Image& img, int step,
                                      double scale_factor, const CascadeDetectOptions& options,
                                      CascadeDetectStats* stats) {
  if (step < 1) throw ConfigError("window step must be >= 1");
  if (!(scale_factor > 1.0)) throw ConfigError("scale factor must exceed 1");
  if (model.stages.empty()) throw ConfigError("cascade has no stages");

  const Image gray = to_grayscale(img);
  const IntegralImage ii(gray);
  CascadeDetectStats local;
  std::vector<Detection> hits;
  for (double s = 1.0;; s *= scale_factor) {
    const int ew = window_extent(model.window_w, s), eh = window_extent(model.window_h, s);
    if (ew > gray.width() || eh > gray.height()) break;
    const int st = std::max(1, static_cast<int>(std::lround(step * s)));
    for (int y = 0; y + eh <= gray.height(); y += st) {
      for (int x = 0; x + ew <= gray.width(); x += st) {
        ++local.windows_evaluated;
        double margin = 0.0;
        if (run_cascade(model, ii, x, y, s, margin)) {
          ++local.windows_accepted;
          hits.push_back({{double(x), double(y), double(ew), double(eh)}, options.label, margin});
        }
      }
    }
  }
  if (stats) *stats = local;
  return nms(std::move(hits), options.nms_iou);
}

}  // namespace edgedet::haar
