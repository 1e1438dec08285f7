#include <gtest/gtest.h>

#include <random>

#include "edgedet/errors.hpp"
#include "edgedet/lcnn/complexity.hpp"
#include "edgedet/lcnn/model_io.hpp"

using namespace edgedet;
using namespace edgedet::lcnn;

TEST(Complexity, HandArithmetic) {
  const auto c = complexity(3, 32, 64, 112);
  EXPECT_EQ(c.conventional, 231211008u);  // 9 * 32 * 64 * 112^2
  EXPECT_EQ(c.separable, 29302784u);      // 9 * 32 * 112^2 + 32 * 64 * 112^2
  EXPECT_NEAR(c.reduction, 1.0 / 64 + 1.0 / 9, 1e-12);
  EXPECT_NEAR(c.reduction, 0.126736, 1e-6);
}

TEST(Complexity, SeparableCanCostMore) {
  const auto c = complexity(1, 8, 1, 10);
  EXPECT_DOUBLE_EQ(c.reduction, 2.0);
  EXPECT_GT(c.separable, c.conventional);
}

TEST(Complexity, RandomTuplesFollowClosedForm) {
  std::mt19937 rng(91);
  std::uniform_int_distribution<int> k(1, 7), ch(1, 512), side(1, 224);
  for (int t = 0; t < 1000; ++t) {
    const int dk = k(rng), n = ch(rng);
    EXPECT_NEAR(complexity(dk, ch(rng), n, side(rng)).reduction, 1.0 / n + 1.0 / (dk * dk), 1e-12);
  }
}

TEST(Complexity, LayerSpecs) {
  LayerSpec conv{LayerOp::conv, 3, 32, 3, 2, 1, 224, 112};
  EXPECT_EQ(layer_macs(conv), 9u * 3u * 32u * 112u * 112u);
  EXPECT_EQ(layer_params(conv), 9u * 3u * 32u);
  EXPECT_NEAR(complexity(conv).reduction, 1.0 / 32 + 1.0 / 9, 1e-12);
  LayerSpec dw{LayerOp::depthwise, 32, 32, 3, 1, 1, 112, 112};
  EXPECT_EQ(layer_macs(dw), 9u * 32u * 112u * 112u);
  EXPECT_THROW(complexity(dw), LayerTypeError);
  LayerSpec bn{LayerOp::batchnorm, 32, 32, 1, 1, 0, 112, 112};
  EXPECT_THROW(layer_macs(bn), LayerTypeError);
  EXPECT_THROW(complexity(bn), LayerTypeError);
}

TEST(Analysis, DefaultNetwork) {
  const auto arch = architecture_of(build_lcnn());
  const auto a = analyze(arch.layers);
  ASSERT_EQ(a.rows.size(), 23u);
  EXPECT_EQ(a.rows[0].op, LayerOp::conv);
  // Second row is the first depthwise layer, its cost is booked on the pointwise row.
  EXPECT_EQ(a.rows[1].conventional_macs, 0u);
  EXPECT_FALSE(a.rows[1].reduction.has_value());
  EXPECT_EQ(a.rows[2].conventional_macs, complexity(3, 32, 64, 112).conventional);
  EXPECT_NEAR(*a.rows[2].reduction, 1.0 / 64 + 1.0 / 9, 1e-12);
  std::uint64_t sum = 0;
  for (const auto& r : a.rows) sum += r.macs;
  EXPECT_EQ(sum, a.total_macs);
  EXPECT_LT(a.overall_reduction, 0.2);
}

TEST(Analysis, FootprintAgainstAllConventional) {
  const auto arch = architecture_of(build_lcnn());
  const auto ours = backbone_conv_params(arch.layers);
  const auto conventional = all_conventional_params(arch.layers);
  EXPECT_GE(static_cast<double>(conventional) / static_cast<double>(ours), 5.0);
}
