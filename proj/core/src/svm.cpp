#include <algorithm>
#include <numeric>
#include <random>

#include "edgedet/errors.hpp"
#include "edgedet/hog.hpp"

namespace edgedet::hog {

namespace {

double dot(std::span<const double> w, std::span<const double> x) {
  return std::inner_product(w.begin(), w.end(), x.begin(), 0.0);
}

}  // namespace

double svm_objective(std::span<const double> w, double b,
                     const std::vector<HogDescriptor>& descriptors, std::span<const int> labels,
                     double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < descriptors.size(); ++i)
    hinge += std::max(0.0, 1.0 - labels[i] * (dot(w, descriptors[i]) + b));
  const double reg = 0.5 * lambda * (dot(w, w) + b * b);
  return reg + hinge / static_cast<double>(descriptors.size());
}

HogSvmModel svm_train(const std::vector<HogDescriptor>& descriptors, std::span<const int> labels,
                      const HogConfig& cfg, const SvmTrainOptions& options,
                      SvmTrainReport* report) {
  if (descriptors.empty()) throw InputError("no training descriptors");
  if (labels.size() != descriptors.size()) throw InputError("one label per descriptor required");
  if (!(options.lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (options.epochs < 1) throw ConfigError("epochs must be >= 1");
  const std::size_t dim = descriptors.front().size();
  for (const auto& d : descriptors)
    if (d.size() != dim) throw ShapeError("descriptors differ in length");
  const bool has_pos = std::count(labels.begin(), labels.end(), 1) > 0;
  const bool has_neg = std::count(labels.begin(), labels.end(), -1) > 0;
  if (!has_pos || !has_neg) throw InputError("SVM training needs both classes");
  if (std::count_if(labels.begin(), labels.end(), [](int y) { return y != 1 && y != -1; }))
    throw InputError("labels must be +1 or -1");

  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(descriptors.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  SvmTrainReport local;
  local.objective.push_back(svm_objective(w, b, descriptors, labels, options.lambda));
  // Each epoch reports and ends on the average of its iterates; the last
  // Pegasos iterate alone moves in steps of 1/(lambda t) and is too coarse
  // at small lambda.
  std::vector<double> w_avg(dim, 0.0);
  double b_avg = 0.0;
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::fill(w_avg.begin(), w_avg.end(), 0.0);
    b_avg = 0.0;
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (options.lambda * static_cast<double>(t));
      const double margin = labels[i] * (dot(w, descriptors[i]) + b);
      const double shrink = 1.0 - eta * options.lambda;
      for (double& v : w) v *= shrink;
      b *= shrink;
      if (margin < 1.0) {
        const double step = eta * labels[i];
        for (std::size_t k = 0; k < dim; ++k) w[k] += step * descriptors[i][k];
        b += step;
      }
      for (std::size_t k = 0; k < dim; ++k) w_avg[k] += w[k];
      b_avg += b;
    }
    const double n = static_cast<double>(order.size());
    for (double& v : w_avg) v /= n;
    b_avg /= n;
    local.objective.push_back(svm_objective(w_avg, b_avg, descriptors, labels, options.lambda));
  }
  w = std::move(w_avg);
  b = b_avg;

  HogSvmModel model;
  model.config = cfg;
  model.weights.assign(w.begin(), w.end());
  model.bias = b;

  std::size_t correct = 0;
  for (std::size_t i = 0; i < descriptors.size(); ++i)
    if ((svm_score(model, descriptors[i]) > 0.0 ? 1 : -1) == labels[i]) ++correct;
  local.training_accuracy = static_cast<double>(correct) / static_cast<double>(descriptors.size());
  if (report) *report = std::move(local);
  return model;
}

double svm_score(const HogSvmModel& model, std::span<const double> descriptor) {
  if (descriptor.size() != model.weights.size())
    throw ConfigError("descriptor length does not match SVM weights");
  double s = model.bias;
  for (std::size_t i = 0; i < descriptor.size(); ++i) s += model.weights[i] * descriptor[i];
  return s;
}

}  // namespace edgedet::hog
