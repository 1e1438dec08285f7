#include <cmath>
#include <iostream>

#include "commands.hpp"
#include "dataset.hpp"
#include "edgedet/errors.hpp"
#include "edgedet/haar.hpp"
#include "edgedet/hog.hpp"
#include "edgedet/lcnn/detect.hpp"
#include "edgedet/lcnn/model_io.hpp"
#include "edgedet/lcnn/train.hpp"

namespace edgedet::cli {

namespace {

constexpr const char* kPositiveLabel = "person";

struct Crop {
  Image window;
  int label = 1;
};

// Every annotated box cropped and resized to the detector window; boxes
// labelled "person" are positives, any other label is background.
std::vector<Crop> window_crops(const std::vector<LabelledImage>& data, int w, int h, bool gray) {
  std::vector<Crop> out;
  for (const auto& li : data) {
    const Image src = gray ? to_grayscale(li.image) : li.image;
    for (const auto& a : li.boxes) {
      const int x0 = std::max(0, static_cast<int>(std::lround(a.box.x)));
      const int y0 = std::max(0, static_cast<int>(std::lround(a.box.y)));
      const int x1 = std::min(src.width(), static_cast<int>(std::lround(a.box.right())));
      const int y1 = std::min(src.height(), static_cast<int>(std::lround(a.box.bottom())));
      if (x1 - x0 < 1 || y1 - y0 < 1)
        throw InputError("annotation outside its image: " + a.image_id);
      out.push_back({resize_nearest(crop(src, x0, y0, x1 - x0, y1 - y0), w, h),
                     a.label == kPositiveLabel ? 1 : -1});
    }
  }
  std::size_t pos = 0;
  for (const auto& c : out) pos += c.label == 1;
  if (pos == 0 || pos == out.size())
    throw InputError("training needs both person and background boxes");
  return out;
}

int train_haar(const RunConfig& cfg, const std::vector<LabelledImage>& data) {
  if (cfg.rounds < 1 || cfg.stages < 1) throw ConfigError("rounds and stages must be >= 1");
  haar::CascadeModel shape;
  std::vector<haar::Sample> pos;
  std::vector<haar::Sample> neg;
  for (auto& c : window_crops(data, shape.window_w, shape.window_h, true))
    (c.label == 1 ? pos : neg).push_back({integral(c.window), c.label});

  const auto candidates = haar::enumerate_features(shape.window_w, shape.window_h);
  haar::CascadeTrainOptions opts;
  opts.stage_rounds.assign(cfg.stages, cfg.rounds);
  const auto model = haar::train_cascade(pos, neg, candidates, opts);
  haar::save_cascade(model, cfg.output);

  std::size_t errors = 0;
  auto accepted = [&](const haar::Sample& s) {
    const BoundingBox window{0, 0, static_cast<double>(model.window_w),
                             static_cast<double>(model.window_h)};
    for (const auto& st : model.stages)
      if (haar::stage_score(st, s.ii, window, 1.0) < st.threshold) return false;
    return true;
  };
  for (const auto& s : pos) errors += !accepted(s);
  for (const auto& s : neg) errors += accepted(s);
  std::size_t learners = 0;
  for (const auto& st : model.stages) learners += st.learners.size();
  std::cout << "stages " << model.stages.size() << "\nlearners " << learners
            << "\ntraining_error " << static_cast<double>(errors) / (pos.size() + neg.size())
            << '\n';
  return kOk;
}

int train_hogsvm(const RunConfig& cfg, const std::vector<LabelledImage>& data) {
  hog::HogConfig hc;
  std::vector<hog::HogDescriptor> descriptors;
  std::vector<int> labels;
  for (const auto& c : window_crops(data, hc.window_w, hc.window_h, false)) {
    descriptors.push_back(hog::hog_descriptor(c.window, hc));
    labels.push_back(c.label);
  }
  hog::SvmTrainOptions opts;
  opts.lambda = cfg.lambda;
  opts.epochs = cfg.epochs;
  opts.seed = cfg.seed;
  hog::SvmTrainReport report;
  const auto model = hog::svm_train(descriptors, labels, hc, opts, &report);
  hog::save_hogsvm(model, cfg.output);
  std::cout << "samples " << descriptors.size() << "\nobjective " << report.objective.back()
            << "\ntraining_accuracy " << report.training_accuracy << '\n';
  return kOk;
}

int train_lcnn(const RunConfig& cfg, const std::vector<LabelledImage>& data) {
  lcnn::LcnnConfig lc;
  lc.width_multiplier = cfg.width;
  lc.input_size = cfg.input_size;
  lc.seed = cfg.seed;
  auto model = lcnn::build_lcnn(lc);

  std::vector<lcnn::TrainSample> samples;
  for (const auto& li : data) {
    lcnn::TrainSample s{lcnn::prepare_input(li.image, cfg.input_size), {}};
    const double w = li.image.width();
    const double h = li.image.height();
    for (const auto& a : li.boxes)
      if (a.label == kPositiveLabel)
        s.boxes.push_back({a.box.x / w, a.box.y / h, a.box.w / w, a.box.h / h});
    samples.push_back(std::move(s));
  }

  lcnn::TrainOptions opts;
  opts.steps = cfg.steps;
  opts.learning_rate = cfg.lr;
  opts.seed = cfg.seed;
  opts.validation_fraction = cfg.validation;
  const auto report = lcnn::train_toy(model, samples, opts);
  lcnn::save_model(model, cfg.output);
  std::cout << "train_images " << report.train_count << "\nvalidation_images "
            << report.validation_count << "\ninitial_loss " << report.initial_loss
            << "\nfinal_loss " << report.final_loss << '\n';
  if (report.validation_loss) std::cout << "validation_loss " << *report.validation_loss << '\n';
  return kOk;
}

}  // namespace

int cmd_train(const RunConfig& cfg) {
  if (cfg.inputs.size() != 1) throw ConfigError("train takes exactly one --input directory");
  if (cfg.output.empty()) throw ConfigError("--output model path is required");
  const auto data = load_dataset(cfg.inputs.front(), cfg.annotations);
  if (cfg.detector == "haar") return train_haar(cfg, data);
  if (cfg.detector == "hogsvm") return train_hogsvm(cfg, data);
  return train_lcnn(cfg, data);
}

}  // namespace edgedet::cli
