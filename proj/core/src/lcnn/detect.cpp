#include "edgedet/lcnn/detect.hpp"

#include <array>
#include <cmath>

#include "edgedet/errors.hpp"

namespace edgedet::lcnn {

Tensor image_to_tensor(const Image& img) {
  const Image rgb = to_rgb(img);
  Tensor t(3, rgb.height(), rgb.width());
  for (int y = 0; y < rgb.height(); ++y)
    for (int x = 0; x < rgb.width(); ++x)
      for (int c = 0; c < 3; ++c) t.at(c, y, x) = (rgb.at(x, y, c) - 127.5f) / 127.5f;
  return t;
}

Tensor prepare_input(const Image& img, int input_size) {
  if (img.width() == input_size && img.height() == input_size) return image_to_tensor(img);
  return image_to_tensor(resize_nearest(img, input_size, input_size));
}

std::vector<Detection> decode_predictions(const CnnModel& model, const ForwardPass<float>& pass,
                                          const std::string& label) {
  const auto sides = model.tap_sides();
  const auto priors = default_boxes(model.ssd, sides);
  if (priors.size() * 2 != pass.logits.size() || priors.size() * 4 != pass.offsets.size())
    throw ShapeError("prediction count does not match default boxes");
  const auto scores = softmax_rows<float>(pass.logits, 2);
  const double side = model.input_size;

  std::vector<Detection> out;
  out.reserve(priors.size());
  for (std::size_t i = 0; i < priors.size(); ++i) {
    std::array<double, 4> off{};
    for (int k = 0; k < 4; ++k) off[k] = pass.offsets[i * 4 + k];
    const BoundingBox b = decode_box(off, priors[i], model.ssd);
    const BoundingBox px{b.x * side, b.y * side, b.w * side, b.h * side};
    out.push_back({clamp_box(px, side, side), label, scores[i * 2 + kPersonClass]});
  }
  return out;
}

std::vector<Detection> ssd_detect(const CnnModel& model, const Image& img,
                                  const SsdDetectOptions& opts) {
  if (img.width() != model.input_size || img.height() != model.input_size)
    throw ShapeError("detector expects a " + std::to_string(model.input_size) + "x" +
                     std::to_string(model.input_size) + " image");
  const auto pass = forward(model, image_to_tensor(img));
  std::vector<Detection> kept;
  for (auto& d : decode_predictions(model, pass, opts.label))
    if (d.score >= opts.conf_threshold && d.box.w > 0.0 && d.box.h > 0.0) kept.push_back(std::move(d));
  return nms(std::move(kept), opts.nms_iou);
}

std::vector<Detection> detect_image(const CnnModel& model, const Image& img,
                                    const SsdDetectOptions& opts) {
  const int s = model.input_size;
  const Image resized = img.width() == s && img.height() == s ? img : resize_nearest(img, s, s);
  auto dets = ssd_detect(model, resized, opts);
  const double sx = static_cast<double>(img.width()) / s;
  const double sy = static_cast<double>(img.height()) / s;
  for (auto& d : dets) d.box = {d.box.x * sx, d.box.y * sy, d.box.w * sx, d.box.h * sy};
  return dets;
}

}  // namespace edgedet::lcnn
