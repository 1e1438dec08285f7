#include <benchmark/benchmark.h>

#include <random>

#include "edgedet/lcnn/conv.hpp"
#include "edgedet/lcnn/network.hpp"

using namespace edgedet::lcnn;

namespace {

Tensor random_tensor(int c, int h, int w, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  Tensor t(c, h, w);
  for (float& v : t.data()) v = d(rng);
  return t;
}

void fill(std::vector<float>& w, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(-0.1f, 0.1f);
  for (float& v : w) v = d(rng);
}

// Args: channels M = N, side D_f.
void BM_Conventional3x3(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int side = static_cast<int>(state.range(1));
  const auto input = random_tensor(m, side, side, 1);
  auto k = ConvKernel::conventional(m, m, 3, 1, 1);
  fill(k.weights, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(input, k));
  state.counters["MACs"] = benchmark::Counter(9.0 * m * m * side * side,
                                              benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conventional3x3)->Args({32, 56})->Args({64, 28})->Args({128, 14});

void BM_Separable3x3(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int side = static_cast<int>(state.range(1));
  const auto input = random_tensor(m, side, side, 1);
  auto d = ConvKernel::depthwise(m, 3, 1, 1);
  auto p = ConvKernel::pointwise(m, m);
  fill(d.weights, 3);
  fill(p.weights, 4);
  for (auto _ : state) benchmark::DoNotOptimize(pointwise_conv(depthwise_conv(input, d), p));
  state.counters["MACs"] = benchmark::Counter((9.0 * m + 1.0 * m * m) * side * side,
                                              benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Separable3x3)->Args({32, 56})->Args({64, 28})->Args({128, 14});

void BM_Conventional3x3Direct(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int side = static_cast<int>(state.range(1));
  const auto input = random_tensor(m, side, side, 1);
  auto k = ConvKernel::conventional(m, m, 3, 1, 1);
  fill(k.weights, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_direct(input, k));
}
BENCHMARK(BM_Conventional3x3Direct)->Args({32, 56});

void BM_LcnnForward(benchmark::State& state) {
  LcnnConfig cfg;
  cfg.width_multiplier = static_cast<double>(state.range(0)) / 100.0;
  const auto model = build_lcnn(cfg);
  const auto input = random_tensor(3, 224, 224, 5);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, input));
}
BENCHMARK(BM_LcnnForward)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
