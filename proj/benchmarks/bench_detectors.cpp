#include <benchmark/benchmark.h>

#include <random>

#include "edgedet/haar.hpp"
#include "edgedet/hog.hpp"
#include "edgedet/image.hpp"

using namespace edgedet;

namespace {

Image noise_image(int w, int h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  Image img(w, h, 1);
  for (float& v : img.pixels()) v = static_cast<float>(d(rng));
  return img;
}

void BM_IntegralImage(benchmark::State& state) {
  const auto img = noise_image(320, 240, 1);
  for (auto _ : state) benchmark::DoNotOptimize(integral(img));
}
BENCHMARK(BM_IntegralImage);

void BM_HogDescriptor(benchmark::State& state) {
  const auto img = noise_image(64, 128, 2);
  const hog::HogConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(hog::hog_descriptor(img, cfg));
}
BENCHMARK(BM_HogDescriptor);

void BM_CascadeDetect(benchmark::State& state) {
  haar::CascadeModel model;
  haar::Stage stage;
  const auto features = haar::enumerate_features();
  for (std::size_t i = 0; i < 10; ++i)
    stage.learners.push_back({features[i * features.size() / 10], 0.0, 1, 0.5});
  model.stages.push_back(stage);
  const auto img = noise_image(320, 240, 3);
  for (auto _ : state) benchmark::DoNotOptimize(haar::cascade_detect(model, img, 4, 1.25));
}
BENCHMARK(BM_CascadeDetect)->Unit(benchmark::kMillisecond);

}  // namespace
