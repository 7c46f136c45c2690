#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "depthbench/core/batchnorm.hpp"
#include "depthbench/core/conv.hpp"
#include "depthbench/core/ops.hpp"
#include "depthbench/core/resample.hpp"
#include "depthbench/mono/losses.hpp"
#include "depthbench/stereo/cost_volume.hpp"
#include "oracles.hpp"

using namespace depthbench;
using oracle::max_abs_diff;
using oracle::rand_int;
using oracle::random_tensor;

namespace {

constexpr int kTrials = 100;
constexpr double kOracleTol = 1e-12;

}  // namespace

// ------------------------------------------------------------------ conv2d

TEST(Conv2d, AllOnesCountsOverlap) {
  const Tensor x = Tensor::full({1, 1, 3, 3}, 1.0), w = Tensor::full({1, 1, 3, 3}, 1.0), b = Tensor::zeros({1});
  const Tensor y = conv2d(x, w, b, 1, 1);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 3, 3}));
  EXPECT_DOUBLE_EQ(y[4], 9.0);
  for (std::size_t corner : {0, 2, 6, 8}) EXPECT_DOUBLE_EQ(y[corner], 4.0);
  EXPECT_DOUBLE_EQ(y[1], 6.0);
}

TEST(Conv2d, CenterTapIsIdentity) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(rng, {2, 1, 5, 7});
  std::vector<double> k(9, 0.0);
  k[4] = 1.0;
  const Tensor y = conv2d(x, Tensor::from({1, 1, 3, 3}, k), 1, 1);
  EXPECT_EQ(y.values(), x.values());
}

TEST(Conv2d, MatchesLoopOracleOnReferenceShape) {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor(rng, {2, 3, 8, 8}), w = random_tensor(rng, {4, 3, 3, 3}), b = random_tensor(rng, {4});
  std::size_t oh, ow;
  const auto ref = oracle::conv2d(x.values(), 2, 3, 8, 8, w.values(), 4, 3, &b.values(), 1, 1, oh, ow);
  EXPECT_LE(max_abs_diff(conv2d(x, w, b, 1, 1), ref), kOracleTol);
}

TEST(Conv2d, MatchesLoopOracleOnRandomShapes) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t N = rand_int(rng, 1, 2), C = rand_int(rng, 1, 4), O = rand_int(rng, 1, 4);
    const std::size_t K = rand_int(rng, 0, 1) ? 3 : 1, s = rand_int(rng, 1, 2), p = rand_int(rng, 0, K / 2 + 1);
    const std::size_t H = rand_int(rng, K, 9), W = rand_int(rng, K, 9);
    const Tensor x = random_tensor(rng, {N, C, H, W}), w = random_tensor(rng, {O, C, K, K}), b = random_tensor(rng, {O});
    std::size_t oh, ow;
    const auto ref = oracle::conv2d(x.values(), N, C, H, W, w.values(), O, K, &b.values(), s, p, oh, ow);
    const Tensor y = conv2d(x, w, b, s, p);
    ASSERT_EQ(y.shape(), (Shape{N, O, oh, ow}));
    ASSERT_LE(max_abs_diff(y, ref), kOracleTol) << "trial " << t;
  }
}

TEST(Conv2d, RejectsBadShapes) {
  const Tensor x = Tensor::zeros({1, 2, 4, 4});
  EXPECT_THROW(conv2d(x, Tensor::zeros({1, 3, 3, 3}), 1, 1), ShapeError);
  EXPECT_THROW(conv2d(x, Tensor::zeros({1, 2, 7, 7}), 1, 0), ShapeError);
  EXPECT_THROW(conv2d(x, Tensor::zeros({1, 2, 3, 3}), Tensor::zeros({2}), 1, 1), ShapeError);
}

TEST(Conv3d, MatchesLoopOracleOnRandomShapes) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t N = rand_int(rng, 1, 2), C = rand_int(rng, 1, 3), O = rand_int(rng, 1, 3);
    const std::size_t D = rand_int(rng, 1, 5), H = rand_int(rng, 1, 5), W = rand_int(rng, 1, 6);
    const Tensor x = random_tensor(rng, {N, C, D, H, W}), w = random_tensor(rng, {O, C, 3, 3, 3});
    const Tensor b = random_tensor(rng, {O});
    const auto ref = oracle::conv3d(x.values(), N, C, D, H, W, w.values(), O, 3, &b.values(), 1);
    ASSERT_LE(max_abs_diff(conv3d(x, w, b, 1, 1), ref), kOracleTol) << "trial " << t;
  }
}

// ---------------------------------------------------------------- resample

TEST(Pool, MaxOfTwoByTwo) {
  const Tensor y = max_pool2x2(Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4}));
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y[0], 4.0);
}

TEST(Pool, RejectsOddExtents) {
  EXPECT_THROW(max_pool2x2(Tensor::zeros({1, 1, 3, 4})), ShapeError);
  EXPECT_THROW(pool_and_resample(Tensor::zeros({1, 1, 4, 5}), ResampleMode::maxpool2x2), ShapeError);
}

TEST(Pool, MatchesLoopOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t N = rand_int(rng, 1, 2), C = rand_int(rng, 1, 3);
    const std::size_t H = 2 * rand_int(rng, 1, 5), W = 2 * rand_int(rng, 1, 5);
    const Tensor x = random_tensor(rng, {N, C, H, W});
    ASSERT_LE(max_abs_diff(pool_and_resample(x, ResampleMode::maxpool2x2), oracle::maxpool2x2(x.values(), N * C, H, W)),
              kOracleTol);
  }
}

TEST(Upsample, ConstantStaysConstant) {
  const Tensor y = pool_and_resample(Tensor::full({1, 2, 3, 5}, 0.7), ResampleMode::upsample_bilinear2x);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 6, 10}));
  for (double v : y.data()) EXPECT_NEAR(v, 0.7, 1e-15);
}

TEST(Upsample, BilinearMatchesPerPixelOracleOnReferenceShape) {
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor(rng, {1, 1, 4, 4});
  EXPECT_LE(max_abs_diff(upsample_bilinear2x(x), oracle::bilinear(x.values(), 1, 4, 4, 8, 8)), kOracleTol);
}

TEST(Upsample, BilinearMatchesOracleOnRandomShapes) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t P = rand_int(rng, 1, 3), H = rand_int(rng, 1, 7), W = rand_int(rng, 1, 7);
    const std::size_t OH = rand_int(rng, 1, 12), OW = rand_int(rng, 1, 12);
    const Tensor x = random_tensor(rng, {1, P, H, W});
    ASSERT_LE(max_abs_diff(resize_bilinear(x, OH, OW), oracle::bilinear(x.values(), P, H, W, OH, OW)), kOracleTol);
  }
}

TEST(Upsample, NearestMatchesOracle) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t P = rand_int(rng, 1, 3), H = rand_int(rng, 1, 6), W = rand_int(rng, 1, 6);
    const Tensor x = random_tensor(rng, {1, P, H, W});
    ASSERT_LE(max_abs_diff(pool_and_resample(x, ResampleMode::upsample_nearest2x), oracle::nearest2x(x.values(), P, H, W)),
              kOracleTol);
  }
}

// --------------------------------------------------------------- batchnorm

TEST(BatchNorm, StandardizedBatchIsNearlyUnchanged) {
  // Two values per channel at +-1: mean 0, biased variance 1.
  const Tensor x = Tensor::from({2, 2, 1, 1}, {1, -1, -1, 1});
  Tensor rm = Tensor::zeros({2}), rv = Tensor::full({2}, 1.0);
  const Tensor y = batchnorm(x, Tensor::full({2}, 1.0), Tensor::zeros({2}), rm, rv);
  const double f = 1.0 / std::sqrt(1.0 + 1e-5);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(y[i], x[i] * f, 1e-15);
}

TEST(BatchNorm, AffineOnNormalizedInput) {
  const Tensor x = Tensor::from({2, 1, 1, 2}, {1, -1, 1, -1});
  Tensor rm = Tensor::zeros({1}), rv = Tensor::full({1}, 1.0);
  const Tensor y = batchnorm(x, Tensor::full({1}, 2.0), Tensor::full({1}, 1.0), rm, rv);
  const double f = 1.0 / std::sqrt(1.0 + 1e-5);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(y[i], 2 * x[i] * f + 1, 1e-15);
}

TEST(BatchNorm, TrainingMatchesOracleAndUpdatesRunningStats) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t N = rand_int(rng, 1, 3), C = rand_int(rng, 1, 4), H = rand_int(rng, 1, 4), W = rand_int(rng, 2, 5);
    const Tensor x = random_tensor(rng, {N, C, H, W}, -2, 3), g = random_tensor(rng, {C}), b = random_tensor(rng, {C});
    Tensor rm = random_tensor(rng, {C}), rv = random_tensor(rng, {C}, 0.5, 2.0);
    const auto rm0 = rm.values(), rv0 = rv.values();
    oracle::Vec mean, var;
    const auto ref = oracle::batchnorm_train(x.values(), N, C, H * W, g.values(), b.values(), 1e-5, &mean, &var);
    ASSERT_LE(max_abs_diff(batchnorm(x, g, b, rm, rv), ref), kOracleTol);
    for (std::size_t c = 0; c < C; ++c) {
      ASSERT_NEAR(rm[c], 0.9 * rm0[c] + 0.1 * mean[c], kOracleTol);
      ASSERT_NEAR(rv[c], 0.9 * rv0[c] + 0.1 * var[c], kOracleTol);
    }
  }
}

TEST(BatchNorm, EvalMatchesDirectFormula) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t N = rand_int(rng, 1, 3), C = rand_int(rng, 1, 4), S = rand_int(rng, 1, 12);
    const Tensor x = random_tensor(rng, {N, C, S}), g = random_tensor(rng, {C}), b = random_tensor(rng, {C});
    Tensor rm = random_tensor(rng, {C}), rv = random_tensor(rng, {C}, 0.1, 3.0);
    const auto rm0 = rm.values(), rv0 = rv.values();
    const auto ref = oracle::batchnorm_eval(x.values(), N, C, S, g.values(), b.values(), rm0, rv0, 1e-5);
    ASSERT_LE(max_abs_diff(batchnorm(x, g, b, rm, rv, {.training = false}), ref), kOracleTol);
    ASSERT_EQ(rm.values(), rm0);
    ASSERT_EQ(rv.values(), rv0);
  }
}

TEST(BatchNorm, RejectsChannelMismatch) {
  Tensor rm = Tensor::zeros({3}), rv = Tensor::full({3}, 1.0);
  EXPECT_THROW(batchnorm(Tensor::zeros({2, 2, 2, 2}), Tensor::zeros({3}), Tensor::zeros({3}), rm, rv), ShapeError);
}

// -------------------------------------------------------------- activations

TEST(Activation, LeakyRelu) {
  const Tensor y = activation(Tensor::from({2}, {-1, 3}), Activation::leaky_relu(0.2));
  EXPECT_DOUBLE_EQ(y[0], -0.2);
  EXPECT_DOUBLE_EQ(y[1], 3.0);
}

TEST(Activation, Swish) {
  const Tensor y = activation(Tensor::from({2}, {0, 1}), Activation::swish());
  EXPECT_EQ(y[0], 0.0);
  EXPECT_NEAR(y[1], 0.7310585786300049, 1e-15);
  EXPECT_NEAR(y[1], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(Activation, ReluAndSigmoid) {
  const Tensor r = activation(Tensor::from({3}, {-2, 0, 2}), Activation::relu());
  EXPECT_EQ(r.values(), (std::vector<double>{0, 0, 2}));
  const Tensor s = activation(Tensor::from({3}, {-800, 0, 800}), Activation::sigmoid());
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[1], 0.5);
  EXPECT_EQ(s[2], 1.0);
}

TEST(Activation, KinkUsesPositiveBranchDerivative) {
  Tensor x = Tensor::from({1}, {0.0}, true);
  sum(activation(x, Activation::leaky_relu(0.2))).backward();
  EXPECT_EQ(x.grad()[0], 1.0);
  Tensor a = Tensor::from({1}, {0.0}, true);
  sum(abs(a)).backward();
  EXPECT_EQ(a.grad()[0], 0.0);
}

// ----------------------------------------------------------------- algebra

TEST(Algebra, SoftmaxOfEqualLogits) {
  const Tensor y = softmax(Tensor::full({1, 4}, 3.0), 1);
  for (double v : y.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Algebra, SoftmaxSumsToOneAndIsShiftInvariant) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t A = rand_int(rng, 1, 3), D = rand_int(rng, 1, 7), B = rand_int(rng, 1, 4);
    const Tensor x = random_tensor(rng, {A, D, B}, -20, 20);
    const Tensor y = softmax(x, 1), ys = softmax(add_scalar(x, 123.25), 1);
    ASSERT_LE(max_abs_diff(y, ys.values()), 1e-12);
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t b = 0; b < B; ++b) {
        double s = 0;
        for (std::size_t d = 0; d < D; ++d) s += y[(a * D + d) * B + b];
        ASSERT_NEAR(s, 1.0, 1e-12);
      }
  }
}

TEST(Algebra, Reductions) {
  EXPECT_DOUBLE_EQ(mean(Tensor::from({3}, {1, 2, 3})).item(), 2.0);
  EXPECT_DOUBLE_EQ(sum(Tensor::from({3}, {1, 2, 3})).item(), 6.0);
  EXPECT_DOUBLE_EQ(masked_mean(Tensor::from({2}, {5, 9}), Tensor::from({2}, {1, 0})).item(), 5.0);
  EXPECT_THROW(masked_mean(Tensor::from({2}, {5, 9}), Tensor::zeros({2})), ShapeError);
}

TEST(Algebra, ElementwiseAndConcat) {
  const Tensor a = Tensor::from({1, 2}, {1, -2}), b = Tensor::from({1, 2}, {3, 4});
  EXPECT_EQ(add(a, b).values(), (std::vector<double>{4, 2}));
  EXPECT_EQ(sub(a, b).values(), (std::vector<double>{-2, -6}));
  EXPECT_EQ(mul(a, b).values(), (std::vector<double>{3, -8}));
  EXPECT_EQ(scale(a, 2).values(), (std::vector<double>{2, -4}));
  EXPECT_EQ(neg(a).values(), (std::vector<double>{-1, 2}));
  EXPECT_EQ(abs(a).values(), (std::vector<double>{1, 2}));
  const Tensor c = concat({a, b}, 0);
  EXPECT_EQ(c.shape(), (Shape{2, 2}));
  EXPECT_EQ(c.values(), (std::vector<double>{1, -2, 3, 4}));
  EXPECT_EQ(concat({a, b}, 1).values(), (std::vector<double>{1, -2, 3, 4}));
  EXPECT_THROW(add(a, Tensor::zeros({2, 1})), ShapeError);
  EXPECT_THROW(concat({a, Tensor::zeros({1, 3})}, 0), ShapeError);
}

TEST(Algebra, NonFiniteResultIsAnError) {
  EXPECT_THROW(div(Tensor::from({1}, {1.0}), Tensor::from({1}, {0.0})), NumericError);
  EXPECT_THROW(exp(Tensor::from({1}, {1000.0})), NumericError);
}

// ---------------------------------------------------------------- backward

TEST(Backward, SumOfSquaresGivesTwoX) {
  std::mt19937_64 rng(12);
  Tensor x = random_tensor(rng, {3, 4}, -1, 1, true);
  sum(mul(x, x)).backward();
  const auto g = x.grad();
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(g[i], 2 * x[i]);
}

TEST(Backward, UnusedLeafHasZeroGrad) {
  Tensor x = Tensor::from({2}, {1, 2}, true), unused = Tensor::from({3}, {1, 2, 3}, true);
  sum(x).backward();
  EXPECT_EQ(unused.grad(), (std::vector<double>{0, 0, 0}));
}

TEST(Backward, RepeatedCallsAccumulate) {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  const Tensor loss = sum(scale(x, 3));
  loss.backward();
  loss.backward();
  EXPECT_EQ(x.grad(), (std::vector<double>{6, 6}));
}

TEST(Backward, FanOutAccumulates) {
  Tensor x = Tensor::from({1}, {2.0}, true);
  sum(add(mul(x, x), x)).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 5.0);
}

TEST(Backward, NonScalarIsAnError) {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  EXPECT_THROW(scale(x, 2).backward(), ShapeError);
}

TEST(Backward, NoGradGuardRecordsNothing) {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  NoGradGuard guard;
  EXPECT_FALSE(scale(x, 2).requires_grad());
}

TEST(Determinism, ForwardIsBitwiseRepeatable) {
  std::mt19937_64 rng(13);
  const Tensor x = random_tensor(rng, {2, 3, 9, 7}), w = random_tensor(rng, {5, 3, 3, 3});
  EXPECT_EQ(conv2d(x, w, 1, 1).values(), conv2d(x, w, 1, 1).values());
}

// ------------------------------------------------------------ stereo oracles

TEST(CostVolumeOracle, FullMatchesLoopOracle) {
  std::mt19937_64 rng(14);
  {
    const Tensor l = random_tensor(rng, {1, 4, 6, 10}), r = random_tensor(rng, {1, 4, 6, 10});
    std::vector<int> shifts{0, 1, 2, 3, 4};
    EXPECT_LE(max_abs_diff(stereo::cost_volume_full(l, r, 5).cost, oracle::cost_volume(l.values(), r.values(), 1, 4, 6, 10, shifts)),
              kOracleTol);
  }
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t N = rand_int(rng, 1, 2), C = rand_int(rng, 1, 4), H = rand_int(rng, 1, 5), W = rand_int(rng, 1, 10);
    const std::size_t D = rand_int(rng, 1, W);
    const Tensor l = random_tensor(rng, {N, C, H, W}), r = random_tensor(rng, {N, C, H, W});
    std::vector<int> shifts;
    for (std::size_t i = 0; i < D; ++i) shifts.push_back(static_cast<int>(i));
    ASSERT_LE(max_abs_diff(stereo::cost_volume_full(l, r, D).cost,
                           oracle::cost_volume(l.values(), r.values(), N, C, H, W, shifts)),
              kOracleTol);
  }
}

TEST(CostVolumeOracle, ResidualMatchesLoopOracle) {
  std::mt19937_64 rng(15);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t N = rand_int(rng, 1, 2), C = rand_int(rng, 1, 4), H = rand_int(rng, 1, 5), W = rand_int(rng, 3, 10);
    const int k = static_cast<int>(rand_int(rng, 1, 2));
    const Tensor l = random_tensor(rng, {N, C, H, W}), r = random_tensor(rng, {N, C, H, W});
    std::vector<int> shifts;
    for (int o = -k; o <= k; ++o) shifts.push_back(o);
    const auto cv = stereo::cost_volume_residual(l, r, k);
    ASSERT_EQ(cv.candidates(), static_cast<std::size_t>(2 * k + 1));
    ASSERT_LE(max_abs_diff(cv.cost, oracle::cost_volume(l.values(), r.values(), N, C, H, W, shifts)), kOracleTol);
  }
}

TEST(WarpOracle, MatchesLoopOracle) {
  std::mt19937_64 rng(16);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t N = rand_int(rng, 1, 2), C = rand_int(rng, 1, 3), H = rand_int(rng, 1, 5), W = rand_int(rng, 2, 9);
    const Tensor r = random_tensor(rng, {N, C, H, W});
    const Tensor d = random_tensor(rng, {N, 1, H, W}, -2.0, static_cast<double>(W) + 1);
    ASSERT_LE(max_abs_diff(stereo::warp_with_disparity(r, d), oracle::warp(r.values(), d.values(), N, C, H, W)), kOracleTol);
  }
}

TEST(SoftArgminOracle, MatchesWeightedSum) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t N = rand_int(rng, 1, 2), D = rand_int(rng, 1, 8), H = rand_int(rng, 1, 4), W = rand_int(rng, 1, 5);
    const Tensor c = random_tensor(rng, {N, D, H, W}, -5, 5);
    const double base = oracle::random_tensor(rng, {1}, -3, 3)[0], step = t % 2 ? 1.0 : 0.5;
    const auto ref = oracle::soft_argmin(c.values(), N, D, H * W, base, step);
    ASSERT_LE(max_abs_diff(stereo::soft_argmin({c, base, step, std::nullopt}), ref), kOracleTol);
  }
}

TEST(SmoothnessOracle, MatchesPerPixelLoop) {
  std::mt19937_64 rng(18);
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t N = rand_int(rng, 1, 2), C = rand_int(rng, 1, 3), H = rand_int(rng, 2, 7), W = rand_int(rng, 2, 7);
    const Tensor d = random_tensor(rng, {N, 1, H, W}), img = random_tensor(rng, {N, C, H, W}, 0, 1);
    ASSERT_NEAR(mono::depth_smoothness_loss(d, img).item(), oracle::smoothness(d.values(), img.values(), N, C, H, W),
                kOracleTol);
  }
}

TEST(SsimOracle, MatchesWindowLoop) {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 20; ++t) {
    const std::size_t C = rand_int(rng, 1, 2), H = rand_int(rng, 11, 15), W = rand_int(rng, 11, 15);
    const Tensor a = random_tensor(rng, {1, C, H, W}, 0, 1), b = random_tensor(rng, {1, C, H, W}, 0, 1);
    ASSERT_NEAR(mono::ssim(a, b, 1.0).item(), oracle::ssim(a.values(), b.values(), C, H, W, 1.0), 1e-12);
  }
}
