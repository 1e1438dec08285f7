#pragma once

#include <vector>

#include "edgedet/geometry.hpp"
#include "edgedet/image.hpp"
#include "edgedet/lcnn/network.hpp"

namespace edgedet::lcnn {

struct SsdDetectOptions {
  double conf_threshold = 0.5;
  double nms_iou = 0.45;
  std::string label = "person";
};

/// RGB image -> 3-channel tensor scaled to [-1, 1]. Grayscale input is
/// replicated across channels.
Tensor image_to_tensor(const Image& img);

/// Nearest-neighbour resize to the model input, then image_to_tensor.
Tensor prepare_input(const Image& img, int input_size);

/// Decodes every default box of a forward pass into input-pixel
/// coordinates, clamped to the input square. Scores are the person
/// probability after the two-way softmax.
std::vector<Detection> decode_predictions(const CnnModel& model, const ForwardPass<float>& pass,
                                          const std::string& label = "person");

/// One forward pass on an input_size x input_size image (ShapeError
/// otherwise); boxes with score >= conf_threshold survive NMS.
std::vector<Detection> ssd_detect(const CnnModel& model, const Image& img,
                                  const SsdDetectOptions& opts = {});

/// Resizes any image to the model input, detects, and maps boxes back to
/// the original image coordinates.
std::vector<Detection> detect_image(const CnnModel& model, const Image& img,
                                    const SsdDetectOptions& opts = {});

}  // namespace edgedet::lcnn
