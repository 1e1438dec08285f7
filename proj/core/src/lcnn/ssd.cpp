#include "edgedet/lcnn/ssd.hpp"

#include <algorithm>
#include <cmath>

#include "edgedet/errors.hpp"
#include "edgedet/lcnn/layers.hpp"

namespace edgedet::lcnn {

double layer_scale(const SsdConfig& cfg, int layer, int layer_count) {
  if (layer_count <= 1) return cfg.min_scale;
  return cfg.min_scale + (cfg.max_scale - cfg.min_scale) * layer / (layer_count - 1);
}

std::vector<PriorBox> default_boxes(const SsdConfig& cfg, std::span<const int> map_sides) {
  std::vector<PriorBox> priors;
  const int maps = static_cast<int>(map_sides.size());
  for (int k = 0; k < maps; ++k) {
    const int side = map_sides[k];
    const double s = layer_scale(cfg, k, maps);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        for (double ar : cfg.aspect_ratios) {
          const double r = std::sqrt(ar);
          priors.push_back({(x + 0.5) / side, (y + 0.5) / side, s * r, s / r});
        }
  }
  return priors;
}

BoundingBox prior_as_box(const PriorBox& p) {
  return {p.cx - 0.5 * p.w, p.cy - 0.5 * p.h, p.w, p.h};
}

std::array<double, 4> encode_box(const BoundingBox& target, const PriorBox& prior,
                                 const SsdConfig& cfg) {
  const double cx = target.x + 0.5 * target.w;
  const double cy = target.y + 0.5 * target.h;
  return {(cx - prior.cx) / (prior.w * cfg.center_variance),
          (cy - prior.cy) / (prior.h * cfg.center_variance),
          std::log(target.w / prior.w) / cfg.size_variance,
          std::log(target.h / prior.h) / cfg.size_variance};
}

BoundingBox decode_box(std::span<const double, 4> t, const PriorBox& prior, const SsdConfig& cfg) {
  const double cx = prior.cx + t[0] * cfg.center_variance * prior.w;
  const double cy = prior.cy + t[1] * cfg.center_variance * prior.h;
  const double w = prior.w * std::exp(t[2] * cfg.size_variance);
  const double h = prior.h * std::exp(t[3] * cfg.size_variance);
  return {cx - 0.5 * w, cy - 0.5 * h, w, h};
}

std::vector<int> match_priors(std::span<const PriorBox> priors, std::span<const BoundingBox> truth,
                              const SsdConfig& cfg) {
  std::vector<int> matches(priors.size(), -1);
  std::vector<double> best_iou(priors.size(), 0.0);
  for (std::size_t p = 0; p < priors.size(); ++p) {
    const BoundingBox pb = prior_as_box(priors[p]);
    for (std::size_t g = 0; g < truth.size(); ++g) {
      const double o = iou(pb, truth[g]);
      if (o > best_iou[p]) {
        best_iou[p] = o;
        if (o >= cfg.match_iou) matches[p] = static_cast<int>(g);
      }
    }
  }
  for (std::size_t g = 0; g < truth.size(); ++g) {
    std::size_t best = 0;
    double best_o = -1.0;
    for (std::size_t p = 0; p < priors.size(); ++p) {
      const double o = iou(prior_as_box(priors[p]), truth[g]);
      if (o > best_o) {
        best_o = o;
        best = p;
      }
    }
    if (best_o > 0.0) matches[best] = static_cast<int>(g);
  }
  return matches;
}

template <typename T>
SsdTargets<T> build_targets(std::span<const PriorBox> priors, std::span<const BoundingBox> truth,
                            const SsdConfig& cfg) {
  SsdTargets<T> t;
  t.matches = match_priors(priors, truth, cfg);
  t.classes.assign(priors.size() * 2, T{});
  t.offsets.assign(priors.size() * 4, T{});
  for (std::size_t p = 0; p < priors.size(); ++p) {
    const int g = t.matches[p];
    if (g < 0) {
      t.classes[p * 2 + kBackgroundClass] = T{1};
      continue;
    }
    ++t.positives;
    t.classes[p * 2 + kPersonClass] = T{1};
    const auto enc = encode_box(truth[g], priors[p], cfg);
    for (int k = 0; k < 4; ++k) t.offsets[p * 4 + k] = static_cast<T>(enc[k]);
  }
  return t;
}

template <typename T>
SsdLoss ssd_loss(std::span<const T> logits, std::span<const T> offsets,
                 const SsdTargets<T>& targets, const SsdLossOptions& opts,
                 std::vector<T>* grad_logits, std::vector<T>* grad_offsets) {
  if (logits.size() != targets.classes.size() || offsets.size() != targets.offsets.size() ||
      targets.matches.size() * 2 != logits.size())
    throw ShapeError("SSD prediction count does not match targets");
  const std::size_t priors = targets.matches.size();
  SsdLoss loss;

  // Positives plus the negatives with the highest person score.
  std::vector<std::size_t> rows;
  std::vector<std::size_t> negatives;
  for (std::size_t p = 0; p < priors; ++p)
    (targets.matches[p] >= 0 ? rows : negatives).push_back(p);
  if (opts.negative_ratio > 0.0) {
    const auto scores = softmax_rows<T>(logits, 2);
    const auto keep = std::min(
        negatives.size(),
        static_cast<std::size_t>(std::ceil(opts.negative_ratio * std::max(1, targets.positives))));
    std::stable_sort(negatives.begin(), negatives.end(), [&](std::size_t a, std::size_t b) {
      return scores[a * 2 + kPersonClass] > scores[b * 2 + kPersonClass];
    });
    negatives.resize(keep);
  }
  rows.insert(rows.end(), negatives.begin(), negatives.end());
  std::sort(rows.begin(), rows.end());
  loss.selected = rows.size();

  std::vector<T> sel_logits;
  std::vector<T> sel_targets;
  for (std::size_t p : rows)
    for (int c = 0; c < 2; ++c) {
      sel_logits.push_back(logits[p * 2 + c]);
      sel_targets.push_back(targets.classes[p * 2 + c]);
    }
  std::vector<T> gsel;
  loss.classification =
      rows.empty() ? 0.0 : softmax_mse<T>(sel_logits, sel_targets, 2, grad_logits ? &gsel : nullptr);
  if (grad_logits) {
    grad_logits->assign(logits.size(), T{});
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (int c = 0; c < 2; ++c) (*grad_logits)[rows[i] * 2 + c] = gsel[i * 2 + c];
  }

  std::vector<T> pred, goal;
  std::vector<std::size_t> where;
  for (std::size_t p = 0; p < priors; ++p) {
    if (targets.matches[p] < 0) continue;
    for (int k = 0; k < 4; ++k) {
      pred.push_back(offsets[p * 4 + k]);
      goal.push_back(targets.offsets[p * 4 + k]);
      where.push_back(p * 4 + k);
    }
  }
  const double norm = std::max(1, targets.positives);
  std::vector<T> g;
  loss.localization = smooth_l1<T>(pred, goal, grad_offsets ? &g : nullptr) / norm;
  if (grad_offsets) {
    grad_offsets->assign(offsets.size(), T{});
    const T scale = static_cast<T>(opts.loc_weight / norm);
    for (std::size_t i = 0; i < where.size(); ++i) (*grad_offsets)[where[i]] = g[i] * scale;
  }
  loss.total = loss.classification + opts.loc_weight * loss.localization;
  return loss;
}

#define EDGEDET_INSTANTIATE_SSD(T)                                                             \
  template SsdTargets<T> build_targets(std::span<const PriorBox>, std::span<const BoundingBox>, \
                                       const SsdConfig&);                                      \
  template SsdLoss ssd_loss(std::span<const T>, std::span<const T>, const SsdTargets<T>&,      \
                            const SsdLossOptions&, std::vector<T>*, std::vector<T>*);

EDGEDET_INSTANTIATE_SSD(float)
EDGEDET_INSTANTIATE_SSD(double)

#undef EDGEDET_INSTANTIATE_SSD

}  // namespace edgedet::lcnn
