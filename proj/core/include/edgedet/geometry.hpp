#pragma once

#include <string>
#include <vector>

namespace edgedet {

/// Axis-aligned rectangle in pixel units, (x, y) being the top-left corner.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Detection {
  BoundingBox box;
  std::string label;
  double score = 0.0;
};

double intersection_area(const BoundingBox& a, const BoundingBox& b);
double iou(const BoundingBox& a, const BoundingBox& b);

/// Clip to [0, width] x [0, height]. The result may have zero extent when
/// the box lies fully outside.
BoundingBox clamp_box(const BoundingBox& box, double width, double height);

/// Greedy non-maximum suppression: visit detections by descending score,
/// keep one and drop every later detection whose IoU with a kept box is
/// strictly above `iou_threshold`. Ties keep input order.
std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold);

/// Groups boxes into clusters (connected components of the IoU >
/// iou_threshold graph) and keeps the largest-area box of each cluster,
/// ordered by decreasing area.
std::vector<Detection> merge_biggest_box(std::vector<Detection> detections,
                                         double iou_threshold);

}  // namespace edgedet
