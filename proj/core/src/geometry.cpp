#include "edgedet/geometry.hpp"

#include <algorithm>
#include <numeric>

namespace edgedet {

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

BoundingBox clamp_box(const BoundingBox& box, double width, double height) {
  const double x0 = std::clamp(box.x, 0.0, width);
  const double y0 = std::clamp(box.y, 0.0, height);
  const double x1 = std::clamp(box.right(), 0.0, width);
  const double y1 = std::clamp(box.bottom(), 0.0, height);
  return {x0, y0, std::max(0.0, x1 - x0), std::max(0.0, y1 - y0)};
}

namespace {

template <typename Key>
std::vector<Detection> greedy_suppress(std::vector<Detection> dets, double iou_threshold,
                                       Key key) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return key(dets[a]) > key(dets[b]);
  });

  std::vector<Detection> kept;
  std::vector<bool> removed(dets.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t a = order[i];
    if (removed[a]) continue;
    kept.push_back(dets[a]);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t b = order[j];
      if (!removed[b] && iou(dets[a].box, dets[b].box) > iou_threshold) removed[b] = true;
    }
  }
  return kept;
}

}  // namespace

std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold) {
  return greedy_suppress(std::move(detections), iou_threshold,
                         [](const Detection& d) { return d.score; });
}

std::vector<Detection> merge_biggest_box(std::vector<Detection> detections,
                                         double iou_threshold) {
  // Clusters are the connected components of the overlap graph.
  std::vector<std::size_t> parent(detections.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto root = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t a = 0; a < detections.size(); ++a)
    for (std::size_t b = a + 1; b < detections.size(); ++b)
      if (iou(detections[a].box, detections[b].box) > iou_threshold) parent[root(a)] = root(b);

  std::vector<std::size_t> best(detections.size(), detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    std::size_t& r = best[root(i)];
    if (r == detections.size() || detections[i].box.area() > detections[r].box.area()) r = i;
  }
  std::vector<Detection> kept;
  for (std::size_t r : best)
    if (r < detections.size()) kept.push_back(detections[r]);
  std::stable_sort(kept.begin(), kept.end(), [](const Detection& a, const Detection& b) {
    return a.box.area() > b.box.area();
  });
  return kept;
}

}  // namespace edgedet
