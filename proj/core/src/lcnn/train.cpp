#include "edgedet/lcnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "edgedet/errors.hpp"

namespace edgedet::lcnn {

namespace {

struct SampleResult {
  double loss = 0.0;
  std::vector<LayerGrads<float>> grads;
};

SampleResult evaluate(const CnnModel& model, const TrainSample& s,
                      std::span<const PriorBox> priors, const SsdLossOptions& opts, bool with_grads) {
  const auto pass = forward(model, s.input);
  const auto targets = build_targets<float>(priors, s.boxes, model.ssd);
  std::vector<float> gl;
  std::vector<float> go;
  const auto loss = ssd_loss<float>(pass.logits, pass.offsets, targets, opts,
                                    with_grads ? &gl : nullptr, with_grads ? &go : nullptr);
  SampleResult r{loss.total, {}};
  if (with_grads) r.grads = backward<float>(model, s.input, pass, gl, go);
  return r;
}

template <typename F>
void for_each_param(CnnModel& model, std::vector<LayerGrads<float>>& grads, F&& f) {
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    auto& l = model.layers[i];
    auto& g = grads[i];
    if (l.op == LayerOp::batchnorm) {
      f(std::span<float>(l.bn.gamma), std::span<float>(g.gamma));
      f(std::span<float>(l.bn.beta), std::span<float>(g.beta));
    } else if (l.op != LayerOp::relu) {
      f(std::span<float>(l.kernel.weights), std::span<float>(g.weights));
      f(std::span<float>(l.kernel.bias), std::span<float>(g.bias));
    }
  }
}

}  // namespace

double dataset_loss(const CnnModel& model, std::span<const TrainSample> samples,
                    const SsdLossOptions& loss) {
  if (samples.empty()) throw InputError("dataset is empty");
  const auto priors = default_boxes(model.ssd, model.tap_sides());
  double sum = 0.0;
  for (const auto& s : samples) sum += evaluate(model, s, priors, loss, false).loss;
  return sum / static_cast<double>(samples.size());
}

TrainReport train_toy(CnnModel& model, std::span<const TrainSample> samples,
                      const TrainOptions& opts) {
  if (!(opts.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (opts.steps < 0) throw ConfigError("step count must not be negative");
  if (opts.momentum < 0.0 || opts.momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  if (opts.validation_fraction < 0.0 || opts.validation_fraction >= 1.0)
    throw ConfigError("validation fraction must be in [0, 1)");
  if (samples.empty()) throw InputError("dataset is empty");

  std::mt19937_64 rng(opts.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  TrainReport report;
  report.validation_count =
      static_cast<std::size_t>(std::floor(samples.size() * opts.validation_fraction));
  report.train_count = samples.size() - report.validation_count;
  if (report.train_count == 0) throw InputError("validation split leaves no training samples");
  std::vector<std::size_t> train(order.begin(), order.begin() + report.train_count);
  std::vector<std::size_t> validation(order.begin() + report.train_count, order.end());

  const auto priors = default_boxes(model.ssd, model.tap_sides());
  const std::size_t batch =
      opts.batch_size > 0 ? std::min<std::size_t>(opts.batch_size, train.size()) : train.size();

  std::vector<std::vector<float>> velocity;
  {
    std::vector<LayerGrads<float>> shape(model.layers.size());
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      const auto& l = model.layers[i];
      shape[i].weights.resize(l.kernel.weights.size());
      shape[i].bias.resize(l.kernel.bias.size());
      shape[i].gamma.resize(l.bn.gamma.size());
      shape[i].beta.resize(l.bn.beta.size());
    }
    for_each_param(model, shape, [&](std::span<float> p, std::span<float>) {
      velocity.emplace_back(p.size(), 0.0f);
    });
  }

  std::size_t cursor = 0;
  for (int step = 0; step < opts.steps; ++step) {
    if (cursor + batch > train.size()) {
      std::shuffle(train.begin(), train.end(), rng);
      cursor = 0;
    }
    std::vector<LayerGrads<float>> total;
    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      auto r = evaluate(model, samples[train[cursor + b]], priors, opts.loss, true);
      loss += r.loss;
      if (total.empty()) {
        total = std::move(r.grads);
        continue;
      }
      for (std::size_t i = 0; i < total.size(); ++i) {
        auto add = [](std::vector<float>& a, const std::vector<float>& g) {
          for (std::size_t k = 0; k < a.size(); ++k) a[k] += g[k];
        };
        add(total[i].weights, r.grads[i].weights);
        add(total[i].bias, r.grads[i].bias);
        add(total[i].gamma, r.grads[i].gamma);
        add(total[i].beta, r.grads[i].beta);
      }
    }
    cursor += batch;
    report.loss.push_back(loss / batch);

    double norm2 = 0.0;
    for_each_param(model, total, [&](std::span<float>, std::span<float> g) {
      for (float v : g) norm2 += static_cast<double>(v) * v;
    });
    double scale = 1.0 / batch;
    const double norm = std::sqrt(norm2) * scale;
    if (opts.clip_norm > 0.0 && norm > opts.clip_norm) scale *= opts.clip_norm / norm;

    std::size_t slot = 0;
    for_each_param(model, total, [&](std::span<float> p, std::span<float> g) {
      auto& v = velocity[slot++];
      for (std::size_t k = 0; k < p.size(); ++k) {
        v[k] = static_cast<float>(opts.momentum * v[k] + g[k] * scale);
        p[k] -= static_cast<float>(opts.learning_rate * v[k]);
      }
    });
  }

  std::vector<TrainSample> subset;
  auto collect = [&](const std::vector<std::size_t>& idx) {
    subset.clear();
    for (auto i : idx) subset.push_back(samples[i]);
    return std::span<const TrainSample>(subset);
  };
  report.initial_loss = report.loss.empty() ? dataset_loss(model, collect(train), opts.loss)
                                            : report.loss.front();
  report.final_loss = dataset_loss(model, collect(train), opts.loss);
  if (!validation.empty()) report.validation_loss = dataset_loss(model, collect(validation), opts.loss);
  return report;
}

}  // namespace edgedet::lcnn
