#include "edgedet/eval/match.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "edgedet/errors.hpp"

namespace edgedet::eval {

MatchCounts match_detections(std::span<const Detection> preds, std::span<const BoundingBox> gt,
                             double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
    throw ConfigError("IoU threshold must lie in (0, 1)");
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

  std::vector<bool> taken(gt.size(), false);
  MatchCounts c;
  for (std::size_t p : order) {
    double best = -1.0;
    std::size_t best_gt = gt.size();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (taken[g]) continue;
      const double o = iou(preds[p].box, gt[g]);
      if (o > best) {
        best = o;
        best_gt = g;
      }
    }
    if (best_gt < gt.size() && best >= iou_threshold) {
      taken[best_gt] = true;
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = gt.size() - c.tp;
  return c;
}

Rates rates(const MatchCounts& c) {
  Rates r;
  if (c.tp + c.fp > 0) r.fpr = 100.0 * static_cast<double>(c.fp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.fnr = 100.0 * static_cast<double>(c.fn) / static_cast<double>(c.tp + c.fn);
  return r;
}

MatchCounts evaluate_set(const AnnotationSet& predictions, const AnnotationSet& truth,
                         double iou_threshold, const std::string& label) {
  std::set<std::string> ids;
  for (const auto& [id, _] : predictions) ids.insert(id);
  for (const auto& [id, _] : truth) ids.insert(id);

  MatchCounts total;
  for (const auto& id : ids) {
    std::vector<Detection> preds;
    std::vector<BoundingBox> gt;
    if (auto it = predictions.find(id); it != predictions.end())
      for (const auto& a : it->second)
        if (label.empty() || a.label == label) preds.push_back({a.box, a.label, a.score.value_or(1.0)});
    if (auto it = truth.find(id); it != truth.end())
      for (const auto& a : it->second)
        if (label.empty() || a.label == label) gt.push_back(a.box);
    total += match_detections(preds, gt, iou_threshold);
  }
  return total;
}

}  // namespace edgedet::eval
