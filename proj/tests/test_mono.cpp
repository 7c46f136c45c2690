#include <gtest/gtest.h>

#include <cmath>

#include "depthbench/mono/losses.hpp"
#include "depthbench/mono/model.hpp"
#include "oracles.hpp"

using namespace depthbench;
using oracle::random_tensor;

namespace {

Tensor ones(Shape s) { return Tensor::full(std::move(s), 1.0); }

}  // namespace

// ------------------------------------------------------------------- model

TEST(MonoModel, BottleneckExtents) {
  mono::MonoDepthModel big(mono::MonoModelConfig::variant_414());
  mono::MonoDepthModel small(mono::MonoModelConfig::variant_313());
  EXPECT_EQ(big.bottleneck_shape(1, 256, 256), (Shape{1, 256, 16, 16}));
  EXPECT_EQ(small.bottleneck_shape(1, 256, 256), (Shape{1, 128, 32, 32}));
  EXPECT_EQ(big.config().structure(), "4-1-4");
  EXPECT_EQ(small.config().structure(), "3-1-3");
}

TEST(MonoModel, FullResolutionForwardOfLargeVariant) {
  mono::MonoDepthModel model(mono::MonoModelConfig::variant_414());
  nn::init_parameters(model.params(), 1);
  std::mt19937_64 rng(1);
  const Tensor y = mono::predict_depth(model, random_tensor(rng, {3, 256, 256}, 0, 1));
  EXPECT_EQ(y.shape(), (Shape{1, 1, 256, 256}));
  for (double v : y.data()) ASSERT_TRUE(v >= 0 && v <= 1);
}

TEST(MonoModel, RejectsIndivisibleInputAndBadConfig) {
  auto cfg = mono::MonoModelConfig::variant_414();
  cfg.input_size = 100;
  EXPECT_THROW(mono::MonoDepthModel{cfg}, ConfigError);
  cfg = mono::MonoModelConfig::variant_313();
  cfg.encoder_filters = {16, 16, 64};
  EXPECT_THROW(mono::MonoDepthModel{cfg}, ConfigError);
  cfg = mono::MonoModelConfig::variant_313();
  cfg.head_kernel = 5;
  EXPECT_THROW(mono::MonoDepthModel{cfg}, ConfigError);
  mono::MonoDepthModel model(mono::MonoModelConfig::variant_313());
  EXPECT_THROW(model.forward(Tensor::zeros({1, 3, 20, 20}), false), ShapeError);
}

TEST(MonoModel, PredictDepthContract) {
  auto cfg = mono::MonoModelConfig::variant_313();
  cfg.input_size = 64;
  mono::MonoDepthModel model(cfg);
  nn::init_parameters(model.params(), 2);
  std::mt19937_64 rng(2);
  const Tensor img = random_tensor(rng, {3, 64, 64}, 0, 1);
  const Tensor a = mono::predict_depth(model, img), b = mono::predict_depth(model, img);
  EXPECT_EQ(a.shape(), (Shape{1, 1, 64, 64}));
  EXPECT_EQ(a.values(), b.values());
  double mean = 0, sq = 0;
  for (double v : a.data()) {
    ASSERT_TRUE(v >= 0 && v <= 1);
    mean += v;
  }
  mean /= static_cast<double>(a.numel());
  for (double v : a.data()) sq += (v - mean) * (v - mean);
  EXPECT_LT(std::sqrt(sq / static_cast<double>(a.numel())), 0.2);
  EXPECT_THROW(mono::predict_depth(model, Tensor::zeros({3, 32, 32})), ShapeError);
}

TEST(MonoModel, SkipConnectionsAreOptional) {
  auto cfg = mono::MonoModelConfig::variant_313();
  cfg.input_size = 32;
  cfg.use_skip_connections = false;
  mono::MonoDepthModel model(cfg);
  nn::init_parameters(model.params(), 3);
  EXPECT_EQ(mono::predict_depth(model, Tensor::full({3, 32, 32}, 0.5)).shape(), (Shape{1, 1, 32, 32}));
}

// ---------------------------------------------------------------------- L1

TEST(L1Loss, Examples) {
  std::mt19937_64 rng(3);
  const Tensor t = random_tensor(rng, {1, 1, 4, 4}, 0, 1);
  EXPECT_EQ(mono::l1_depth_loss(t, t, ones({1, 1, 4, 4})).item(), 0.0);
  EXPECT_NEAR(mono::l1_depth_loss(add_scalar(t, 0.1), t, ones({1, 1, 4, 4})).item(), 0.1, 1e-15);
  std::vector<double> pv(t.values()), mv(16);
  for (std::size_t i = 0; i < 16; ++i) {
    mv[i] = i % 2 ? 1.0 : 0.0;
    if (i % 2 == 0) pv[i] += 1.0;
  }
  EXPECT_EQ(mono::l1_depth_loss(Tensor::from(t.shape(), pv), t, Tensor::from(t.shape(), mv)).item(), 0.0);
  EXPECT_THROW(mono::l1_depth_loss(t, t, Tensor::zeros({1, 1, 4, 4})), ShapeError);
}

// -------------------------------------------------------------------- SSIM

TEST(Ssim, IdentityIsOne) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor(rng, {2, 1, 16, 16}, 0, 1);
  EXPECT_NEAR(mono::ssim(x, x).item(), 1.0, 1e-9);
}

TEST(Ssim, ConstantZeroVersusOneClosedForm) {
  const double c1 = 1e-4;
  const double v = mono::ssim(Tensor::zeros({1, 1, 16, 16}), ones({1, 1, 16, 16})).item();
  EXPECT_NEAR(v, c1 / (1 + c1), 1e-7);
  EXPECT_NEAR(v, 9.999e-5, 1e-7);
}

TEST(Ssim, SymmetricAndBounded) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const Tensor x = random_tensor(rng, {1, 1, 13, 14}, 0, 1), y = random_tensor(rng, {1, 1, 13, 14}, 0, 1);
    const double a = mono::ssim(x, y).item(), b = mono::ssim(y, x).item();
    EXPECT_NEAR(a, b, 1e-12);
    EXPECT_LE(std::abs(a), 1.0);
    const double n = mono::ssim(x, scale(add_scalar(x, -0.5), -1.0)).item();
    EXPECT_GE(n, -1.0);
    EXPECT_LE(n, 1.0);
  }
}

// The full index is not invariant to a common offset (the luminance factor
// depends on the means), but its contrast-structure factor is.
TEST(Ssim, ContrastStructureInvariantUnderCommonOffset) {
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor(rng, {1, 1, 15, 15}, 0.1, 0.6), y = random_tensor(rng, {1, 1, 15, 15}, 0.1, 0.6);
  const auto a = mono::ssim_maps(x, y, 1.0), b = mono::ssim_maps(add_scalar(x, 0.3), add_scalar(y, 0.3), 1.0);
  EXPECT_LE(oracle::max_abs_diff(a.contrast_structure, b.contrast_structure.values()), 1e-9);
}

TEST(Ssim, RejectsWindowLargerThanImage) {
  EXPECT_THROW(mono::ssim(Tensor::zeros({1, 1, 10, 20}), Tensor::zeros({1, 1, 10, 20})), ShapeError);
  EXPECT_THROW(mono::ssim(Tensor::zeros({1, 1, 12, 12}), Tensor::zeros({1, 1, 12, 13})), ShapeError);
  EXPECT_THROW(mono::ssim(Tensor::zeros({1, 1, 12, 12}), Tensor::zeros({1, 1, 12, 12}), 0.0), ConfigError);
}

// -------------------------------------------------------------- smoothness

TEST(Smoothness, ConstantDepthIsZero) {
  std::mt19937_64 rng(7);
  EXPECT_EQ(mono::depth_smoothness_loss(Tensor::full({1, 1, 6, 7}, 0.4), random_tensor(rng, {1, 3, 6, 7}, 0, 1)).item(),
            0.0);
}

TEST(Smoothness, HorizontalRampOnConstantImage) {
  const double s = 0.125;
  std::vector<double> d(6 * 7);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = s * static_cast<double>(i % 7);
  // dx term averages |s| over H x (W-1); the y term vanishes.
  EXPECT_NEAR(mono::depth_smoothness_loss(Tensor::from({1, 1, 6, 7}, d), Tensor::full({1, 3, 6, 7}, 0.3)).item(), s,
              1e-15);
}

TEST(Smoothness, RejectsMismatchedExtents) {
  EXPECT_THROW(mono::depth_smoothness_loss(Tensor::zeros({1, 1, 6, 7}), Tensor::zeros({1, 3, 6, 8})), ShapeError);
}

// ------------------------------------------------------------- total loss

TEST(MonoTotalLoss, WeightsSelectTerms) {
  std::mt19937_64 rng(8);
  const Tensor p = random_tensor(rng, {2, 1, 12, 12}, 0, 1), t = random_tensor(rng, {2, 1, 12, 12}, 0, 1);
  const Tensor img = random_tensor(rng, {2, 3, 12, 12}, 0, 1), m = ones({2, 1, 12, 12});
  const double s = mono::ssim(p, t).item();
  EXPECT_NEAR(mono::mono_total_loss(p, t, m, img, {1, 0, 0}).item(), (1 - s) / 2, 1e-15);
  EXPECT_EQ(mono::mono_total_loss(p, t, m, img, {0, 0, 0}).item(), 0.0);
  EXPECT_THROW(mono::mono_total_loss(p, t, m, img, {-1, 0, 0}), ConfigError);
}

TEST(MonoTotalLoss, EqualsManualComposition) {
  std::mt19937_64 rng(9);
  const Tensor p = random_tensor(rng, {1, 1, 14, 12}, 0, 1), t = random_tensor(rng, {1, 1, 14, 12}, 0, 1);
  const Tensor img = random_tensor(rng, {1, 3, 14, 12}, 0, 1), m = ones({1, 1, 14, 12});
  const mono::LossWeights w{0.85, 0.1, 0.9};
  const double manual = w.ssim * (1 - mono::ssim(p, t).item()) / 2 + w.l1 * mono::l1_depth_loss(p, t, m).item() +
                        w.smooth * mono::depth_smoothness_loss(p, img).item();
  EXPECT_NEAR(mono::mono_total_loss(p, t, m, img, w).item(), manual, 1e-14);
}

TEST(MonoTotalLoss, NonNegativeAndZeroAtConstantTarget) {
  std::mt19937_64 rng(10);
  const Tensor t = Tensor::full({1, 1, 12, 12}, 0.3), img = random_tensor(rng, {1, 3, 12, 12}, 0, 1);
  EXPECT_NEAR(mono::mono_total_loss(t, t, ones(t.shape()), img, {}).item(), 0.0, 1e-12);
  for (int k = 0; k < 10; ++k) {
    const Tensor p = random_tensor(rng, {1, 1, 12, 12}, 0, 1);
    EXPECT_GE(mono::mono_total_loss(p, t, ones(t.shape()), img, {}).item(), 0.0);
  }
}
