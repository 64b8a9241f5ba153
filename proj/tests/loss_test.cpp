#include <cmath>

#include <gtest/gtest.h>

#include "dsf/errors.hpp"
#include "dsf/loss.hpp"
#include "test_util.hpp"

namespace dsf {
namespace {

using test::random_tensor;

Tensor random_mask(const Shape& s, Rng& rng, double p = 0.4) {
  Tensor g(s);
  for (double& v : g.values()) v = rng.bernoulli(p) ? 1.0 : 0.0;
  return g;
}

TEST(Bce, OneHalfGivesLn2) {
  Rng rng(1);
  const LossConfig cfg;
  EXPECT_NEAR(bce_loss(Tensor(Shape{2, 1, 4, 4}, 0.5), random_mask({2, 1, 4, 4}, rng), cfg), std::log(2.0), 1e-12);
}

TEST(Bce, PerfectPredictionHitsClampFloor) {
  Rng rng(2);
  const LossConfig cfg;
  const Tensor g = random_mask({1, 1, 4, 4}, rng);
  EXPECT_NEAR(bce_loss(g, g, cfg), -std::log(1.0 - cfg.prob_clamp), 1e-18);
}

TEST(Bce, MatchesPerPixelSum) {
  Rng rng(3);
  const LossConfig cfg;
  const Tensor p = random_tensor({1, 1, 4, 4}, rng, 0.01, 0.99);
  const Tensor g = random_mask({1, 1, 4, 4}, rng);
  double s = 0.0;
  for (std::size_t i = 0; i < 16; ++i) s -= g[i] * std::log(p[i]) + (1.0 - g[i]) * std::log(1.0 - p[i]);
  EXPECT_NEAR(bce_loss(p, g, cfg), s / 16.0, 1e-12);
}

TEST(Bce, ClampedPixelsCarryNoGradient) {
  const LossConfig cfg;
  const Tensor p(Shape{1, 1, 1, 2}, {0.0, 1.0});
  const Tensor g(Shape{1, 1, 1, 2}, {1.0, 0.0});
  const double v = bce_loss(p, g, cfg);
  EXPECT_TRUE(std::isfinite(v));
  const Tensor d = bce_loss_grad(p, g, cfg);
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d[1], 0.0);
}

TEST(Dice, PerfectOverlapIsZero) {
  Rng rng(4);
  const LossConfig cfg;
  const Tensor g = random_mask({3, 1, 8, 8}, rng);
  EXPECT_EQ(dice_loss(g, g, cfg), 0.0);
}

TEST(Dice, EmptyPredictionAndMaskIsZero) {
  const LossConfig cfg;
  const Tensor z(Shape{2, 1, 4, 4});
  EXPECT_EQ(dice_loss(z, z, cfg), 0.0);
}

TEST(Dice, AllOnesAgainstEmptyMask) {
  const LossConfig cfg;
  const Tensor p(Shape{1, 1, 10, 10}, 1.0);
  const Tensor g(Shape{1, 1, 10, 10});
  EXPECT_NEAR(dice_loss(p, g, cfg), 1.0 - 1.0 / 101.0, 1e-15);
}

TEST(Dice, AveragesPerItemScores) {
  Rng rng(5);
  const LossConfig cfg;
  const Tensor p = random_tensor({3, 1, 4, 4}, rng, 0.0, 1.0);
  const Tensor g = random_mask({3, 1, 4, 4}, rng);
  double mean = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    double pg = 0.0, sp = 0.0, sg = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
      pg += p.plane(b, 0)[i] * g.plane(b, 0)[i];
      sp += p.plane(b, 0)[i];
      sg += g.plane(b, 0)[i];
    }
    mean += 1.0 - (2.0 * pg + 1.0) / (sp + sg + 1.0);
  }
  EXPECT_NEAR(dice_loss(p, g, cfg), mean / 3.0, 1e-14);
}

TEST(TotalLoss, EndpointsAndMidpoint) {
  Rng rng(6);
  const Tensor p = random_tensor({2, 1, 6, 6}, rng, 0.0, 1.0);
  const Tensor g = random_mask({2, 1, 6, 6}, rng);
  LossConfig cfg;
  const double b = bce_loss(p, g, cfg);
  const double d = dice_loss(p, g, cfg);
  cfg.alpha = 1.0;
  EXPECT_NEAR(total_loss(p, g, cfg), b, 1e-15);
  cfg.alpha = 0.0;
  EXPECT_NEAR(total_loss(p, g, cfg), d, 1e-15);
  cfg.alpha = 0.5;
  EXPECT_NEAR(total_loss(p, g, cfg), 0.5 * (b + d), 1e-15);
}

TEST(TotalLoss, AffineInAlpha) {
  Rng rng(7);
  const Tensor p = random_tensor({1, 1, 6, 6}, rng, 0.0, 1.0);
  const Tensor g = random_mask({1, 1, 6, 6}, rng);
  LossConfig cfg;
  cfg.alpha = 0.0;
  const double l0 = total_loss(p, g, cfg);
  cfg.alpha = 1.0;
  const double l1 = total_loss(p, g, cfg);
  for (double a = 0.0; a <= 1.0; a += 0.125) {
    cfg.alpha = a;
    const double v = total_loss(p, g, cfg);
    EXPECT_NEAR(v, (1.0 - a) * l0 + a * l1, 1e-14);
    EXPECT_GE(v, std::min(l0, l1) - 1e-15);
    EXPECT_LE(v, std::max(l0, l1) + 1e-15);
  }
}

TEST(Losses, RangesAndMonotoneTowardTarget) {
  Rng rng(8);
  const LossConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor g = random_mask({1, 1, 8, 8}, rng);
    Tensor p = random_tensor({1, 1, 8, 8}, rng, 0.05, 0.95);
    double prev_b = bce_loss(p, g, cfg);
    double prev_d = dice_loss(p, g, cfg);
    EXPECT_GE(prev_b, 0.0);
    EXPECT_GE(prev_d, 0.0);
    EXPECT_LT(prev_d, 1.0);
    for (int step = 0; step < 5; ++step) {
      for (std::size_t i = 0; i < p.size(); ++i) p[i] += 0.3 * (g[i] - p[i]);
      const double b = bce_loss(p, g, cfg);
      const double d = dice_loss(p, g, cfg);
      EXPECT_LT(b, prev_b);
      EXPECT_LE(d, prev_d);
      prev_b = b;
      prev_d = d;
    }
  }
}

TEST(Losses, RejectShapeMismatchAndBadConfig) {
  const LossConfig cfg;
  EXPECT_THROW(bce_loss(Tensor(Shape{1, 1, 2, 2}), Tensor(Shape{1, 1, 2, 3}), cfg), ShapeError);
  EXPECT_THROW(dice_loss(Tensor(Shape{1, 1, 2, 2}), Tensor(Shape{2, 1, 2, 2}), cfg), ShapeError);
  LossConfig bad;
  bad.alpha = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = LossConfig{};
  bad.prob_clamp = 0.5;
  EXPECT_THROW(bad.validate(), ConfigError);
}

}  // namespace
}  // namespace dsf
