#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "edgedet/annotations.hpp"
#include "edgedet/geometry.hpp"

namespace edgedet::eval {

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

/// Greedy matching in descending score order (ties keep input order). A
/// prediction claims the unmatched ground-truth box it overlaps most, if
/// that IoU reaches the threshold. ConfigError unless 0 < threshold < 1.
MatchCounts match_detections(std::span<const Detection> preds, std::span<const BoundingBox> gt,
                             double iou_threshold = 0.5);

/// Percentages; std::nullopt where the denominator is zero.
struct Rates {
  std::optional<double> fpr;  // fp / (tp + fp)
  std::optional<double> fnr;  // fn / (tp + fn)
};

Rates rates(const MatchCounts& counts);

/// Per-object totals over every image id present in either set. Only boxes
/// whose label equals `label` take part; an empty label keeps everything.
MatchCounts evaluate_set(const AnnotationSet& predictions, const AnnotationSet& truth,
                         double iou_threshold = 0.5, const std::string& label = "");

}  // namespace edgedet::eval
