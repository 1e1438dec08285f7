#include "detectors.hpp"

#include <filesystem>
#include <memory>

#include "edgedet/errors.hpp"
#include "edgedet/haar.hpp"
#include "edgedet/hog.hpp"
#include "edgedet/lcnn/detect.hpp"
#include "edgedet/lcnn/model_io.hpp"

namespace edgedet::cli {

DetectFn load_detector(const RunConfig& cfg) {
  if (cfg.model.empty()) throw ConfigError("--model is required for detector " + cfg.detector);
  if (!std::filesystem::is_regular_file(cfg.model))
    throw FormatError("model file not found: " + cfg.model);

  if (cfg.detector == "haar") {
    auto model = std::make_shared<haar::CascadeModel>(haar::load_cascade(cfg.model));
    haar::CascadeDetectOptions opts;
    opts.nms_iou = cfg.nms_iou.value_or(opts.nms_iou);
    const int step = cfg.step;
    const double factor = cfg.scale_factor;
    return [model, opts, step, factor](const Image& img) {
      return haar::cascade_detect(*model, img, step, factor, opts);
    };
  }
  if (cfg.detector == "hogsvm") {
    auto model = std::make_shared<hog::HogSvmModel>(hog::load_hogsvm(cfg.model));
    hog::MultiscaleOptions opts;
    opts.step = cfg.step;
    opts.scale_factor = cfg.scale_factor;
    opts.merge = hog::merge_rule_from_string(cfg.merge);
    opts.merge_iou = cfg.nms_iou.value_or(opts.merge_iou);
    opts.score_threshold = cfg.score_threshold;
    return [model, opts](const Image& img) { return hog::detect_multiscale(*model, img, opts); };
  }
  if (cfg.detector == "lcnn") {
    auto model = std::make_shared<lcnn::CnnModel>(lcnn::load_model(cfg.model));
    lcnn::SsdDetectOptions opts;
    opts.conf_threshold = cfg.conf;
    opts.nms_iou = cfg.nms_iou.value_or(opts.nms_iou);
    return [model, opts](const Image& img) { return lcnn::detect_image(*model, img, opts); };
  }
  throw ConfigError("unknown detector '" + cfg.detector + "'");
}

}  // namespace edgedet::cli
