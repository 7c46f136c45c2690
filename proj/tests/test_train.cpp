#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "depthbench/train/checkpoint.hpp"
#include "oracles.hpp"

using namespace depthbench;
using namespace depthbench::train;

namespace {

stereo::AnyNetConfig desk_stereo() {
  stereo::AnyNetConfig c;
  c.max_disparity = 32;
  return c;
}

mono::MonoModelConfig small_mono() {
  auto c = mono::MonoModelConfig::variant_313();
  c.input_size = 32;
  return c;
}

TrainOptions options(std::size_t steps, double lr = 5e-4, std::size_t batch = 4) {
  TrainOptions o;
  o.optimizer.max_steps = steps;
  o.optimizer.lr = lr;
  o.optimizer.batch_size = batch;
  o.optimizer.seed = 1;
  o.eval_every_epochs = 0;
  return o;
}

std::vector<double> flat_params(const nn::ParamStore& store) {
  std::vector<double> out;
  for (const auto& e : store.entries()) out.insert(out.end(), e.tensor.data().begin(), e.tensor.data().end());
  return out;
}

// Mean of the last 20 recorded values of part `k` relative to its first value.
double tail_ratio(const TrainHistory& h, std::size_t k) {
  const std::size_t n = h.part_loss.size();
  double sum = 0;
  for (std::size_t s = n - 20; s < n; ++s) sum += h.part_loss[s][k];
  return sum / 20 / h.part_loss[0][k];
}

double type7_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

// ---------------------------------------------------------------- optimizer

TEST(Optimizer, SgdStep) {
  std::vector<Tensor> p{Tensor::full({1}, 1.0)};
  OptimizerState st;
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::sgd;
  cfg.lr = 0.1;
  optimizer_step(p, {{0.5}}, st, cfg);
  EXPECT_EQ(p[0][0], 0.95);
  EXPECT_EQ(st.step, 1u);
}

TEST(Optimizer, ZeroGradientLeavesParametersUnchanged) {
  std::mt19937_64 rng(1);
  for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
    std::vector<Tensor> p{oracle::random_tensor(rng, {3, 4}), oracle::random_tensor(rng, {5})};
    const auto before = std::vector<std::vector<double>>{p[0].values(), p[1].values()};
    OptimizerState st;
    OptimizerConfig cfg;
    cfg.kind = kind;
    for (int i = 0; i < 3; ++i) optimizer_step(p, {std::vector<double>(12, 0.0), std::vector<double>(5, 0.0)}, st, cfg);
    EXPECT_EQ(p[0].values(), before[0]);
    EXPECT_EQ(p[1].values(), before[1]);
  }
}

TEST(Optimizer, AdamFirstStepMovesByLearningRate) {
  for (double g : {0.3, -2.0, 1e-3, 50.0}) {
    std::vector<Tensor> p{Tensor::full({4}, 0.25)};
    OptimizerState st;
    OptimizerConfig cfg;
    cfg.lr = 1e-3;
    optimizer_step(p, {std::vector<double>(4, g)}, st, cfg);
    for (double w : p[0].data()) EXPECT_NEAR(std::abs(w - 0.25), cfg.lr, 1e-6);
    EXPECT_LT((p[0][0] - 0.25) * g, 0.0);
  }
}

TEST(Optimizer, ShapeAndConfigErrors) {
  std::vector<Tensor> p{Tensor::zeros({2})};
  OptimizerState st;
  OptimizerConfig cfg;
  EXPECT_THROW(optimizer_step(p, {{1.0}}, st, cfg), ShapeError);
  EXPECT_THROW(optimizer_step(p, {}, st, cfg), ShapeError);
  cfg.lr = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.lr = 1e-3;
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(parse_optimizer_kind("rmsprop"), ConfigError);
}

// ----------------------------------------------------------------- training

TEST(Training, SameSeedGivesBitwiseIdenticalRuns) {
  const auto data = data::gen_synthetic_stereo(2, 6);
  auto run = [&] {
    stereo::AnyNet net(desk_stereo());
    nn::init_parameters(net.params(), 5);
    Trainer<stereo::AnyNet, data::StereoSample> t(net, data, nullptr, options(12));
    t.run();
    return std::make_pair(t.history(), flat_params(net.params()));
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first.step_loss, b.first.step_loss);
  EXPECT_EQ(a.first.part_loss, b.first.part_loss);
  EXPECT_EQ(a.first.epoch_end_step, b.first.epoch_end_step);
  EXPECT_EQ(a.second, b.second);
}

TEST(Training, HistoryLengthsAndShortLastBatch) {
  const auto train_set = data::gen_synthetic_mono(2, 5, 32, 32), val = data::gen_synthetic_mono(3, 2, 32, 32);
  mono::MonoDepthModel model(small_mono());
  nn::init_parameters(model.params(), 1);
  auto opt = options(7, 1e-3, 2);
  opt.eval_every_epochs = 1;
  Trainer<mono::MonoDepthModel, data::MonoSample> t(model, train_set, &val, opt);
  t.run();
  const auto& h = t.history();
  // 5 samples in batches of 2: epochs end after steps 3 and 6.
  EXPECT_EQ(h.step_loss.size(), 7u);
  EXPECT_EQ(h.part_loss.size(), 7u);
  EXPECT_EQ(h.part_names, (std::vector<std::string>{"ssim", "l1", "smoothness"}));
  EXPECT_EQ(h.epoch_end_step, (std::vector<std::size_t>{3, 6}));
  EXPECT_EQ(h.epoch_seconds.size(), 2u);
  EXPECT_EQ(h.val_step, (std::vector<std::size_t>{3, 6}));
  EXPECT_EQ(h.val_metric.size(), 2u);
  EXPECT_TRUE(t.finished());
}

TEST(Training, ZeroLearningRateKeepsLossConstant) {
  const auto data = data::gen_synthetic_stereo(4, 4);
  stereo::AnyNet net(desk_stereo());
  nn::init_parameters(net.params(), 6);
  // The batch is the whole set, so every step sees the same samples.
  Trainer<stereo::AnyNet, data::StereoSample> t(net, data, nullptr, options(5, 0.0, 4));
  const auto before = flat_params(net.params());
  t.run();
  for (double l : t.history().step_loss) EXPECT_NEAR(l, t.history().step_loss[0], 1e-12 * t.history().step_loss[0]);
  // Only BN running statistics move; trainable weights stay put.
  const auto after = flat_params(net.params());
  std::size_t off = 0;
  for (const auto& e : net.params().entries()) {
    if (e.trainable) {
      for (std::size_t i = 0; i < e.tensor.numel(); ++i) EXPECT_EQ(after[off + i], before[off + i]);
    }
    off += e.tensor.numel();
  }
}

TEST(Training, DivergenceAbortsWithNumericError) {
  const auto data = data::gen_synthetic_stereo(4, 4);
  stereo::AnyNet net(desk_stereo());
  nn::init_parameters(net.params(), 6);
  auto opt = options(20, 1e300);
  opt.optimizer.kind = OptimizerKind::sgd;
  Trainer<stereo::AnyNet, data::StereoSample> t(net, data, nullptr, opt);
  EXPECT_THROW(t.run(), NumericError);
}

TEST(Training, RejectsEmptyDataset) {
  stereo::AnyNet net(desk_stereo());
  const std::vector<data::StereoSample> none;
  EXPECT_THROW((Trainer<stereo::AnyNet, data::StereoSample>(net, none, nullptr, options(1))), ConfigError);
  EXPECT_THROW(evaluate_model(net, none), ConfigError);
}

TEST(Training, StereoOverfitsSixteenPairs) {
  const auto data = data::gen_synthetic_stereo(3, 16);
  stereo::AnyNet net(desk_stereo());
  nn::init_parameters(net.params(), 7);
  const double before = evaluate_model(net, data).get("three_pixel_error").stats.mean;
  Trainer<stereo::AnyNet, data::StereoSample> t(net, data, nullptr, options(500));
  t.run();
  const auto& h = t.history();
  ASSERT_EQ(h.part_names.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_LT(tail_ratio(h, k), 0.5) << h.part_names[k];
  EXPECT_LT(tail_ratio(h, 2), 0.3);
  const double after = evaluate_model(net, data).get("three_pixel_error").stats.mean;
  EXPECT_GE(before, 2 * after);
}

TEST(Training, MonoOverfitsSixteenSamples) {
  const auto data = data::gen_synthetic_mono(3, 16, 32, 32);
  mono::MonoDepthModel model(small_mono());
  nn::init_parameters(model.params(), 7);
  Trainer<mono::MonoDepthModel, data::MonoSample> t(model, data, nullptr, options(500, 1e-3));
  t.run();
  const auto& h = t.history();
  double tail = 0;
  for (std::size_t s = 480; s < 500; ++s) tail += h.step_loss[s];
  EXPECT_LT(tail / 20, 0.3 * h.step_loss[0]);
}

// --------------------------------------------------------------- evaluation

TEST(Evaluate, PerSampleVectorsAndAggregates) {
  const auto data = data::gen_synthetic_stereo(5, 7);
  stereo::AnyNet net(desk_stereo());
  nn::init_parameters(net.params(), 8);
  const auto r = evaluate_model(net, data);
  for (const char* name : {"three_pixel_error", "three_pixel_error_stage1", "three_pixel_error_stage2",
                           "three_pixel_error_stage3", "three_pixel_error_stage4", "loss"}) {
    const auto& s = r.get(name);
    ASSERT_EQ(s.per_sample.size(), 7u) << name;
    double sum = 0;
    for (double v : s.per_sample) sum += v;
    EXPECT_NEAR(s.stats.mean, sum / 7, 1e-15);
    EXPECT_EQ(s.stats.min, *std::min_element(s.per_sample.begin(), s.per_sample.end()));
    EXPECT_EQ(s.stats.max, *std::max_element(s.per_sample.begin(), s.per_sample.end()));
    EXPECT_NEAR(s.stats.median, type7_quantile(s.per_sample, 0.5), 1e-15);
    EXPECT_NEAR(s.stats.q25, type7_quantile(s.per_sample, 0.25), 1e-15);
    EXPECT_NEAR(s.stats.q75, type7_quantile(s.per_sample, 0.75), 1e-15);
  }
  EXPECT_EQ(r.get("three_pixel_error").per_sample, r.get("three_pixel_error_stage4").per_sample);
  EXPECT_THROW(r.get("ssim"), ConfigError);
}

TEST(Evaluate, ExactPredictionScoresZero) {
  auto data = data::gen_synthetic_stereo(5, 3);
  stereo::AnyNet net(desk_stereo());
  nn::init_parameters(net.params(), 9);
  for (auto& s : data) {
    NoGradGuard no_grad;
    const auto out = net.forward(data::stack({s.left}), data::stack({s.right}), 4, false);
    s.disparity = Tensor::from(s.disparity.shape(), out.full_res[3].values());
  }
  const auto r = evaluate_model(net, data);
  for (double v : r.get("three_pixel_error").per_sample) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.get("three_pixel_error").stats.max, 0.0);
}

TEST(Evaluate, MonoReportsSsimAndL1) {
  const auto data = data::gen_synthetic_mono(5, 3, 32, 32);
  mono::MonoDepthModel model(small_mono());
  nn::init_parameters(model.params(), 9);
  const auto r = evaluate_model(model, data);
  EXPECT_EQ(r.get("ssim").per_sample.size(), 3u);
  EXPECT_EQ(r.get("l1").per_sample.size(), 3u);
  for (double v : r.get("ssim").per_sample) EXPECT_TRUE(v >= -1 && v <= 1);
}

// --------------------------------------------------------------- checkpoint

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const auto data = data::gen_synthetic_mono(6, 4, 32, 32);
  mono::MonoDepthModel a(small_mono());
  nn::init_parameters(a.params(), 1);
  Trainer<mono::MonoDepthModel, data::MonoSample> ta(a, data, nullptr, options(20, 1e-3, 3));
  ta.run(5);
  const std::string bytes = save_checkpoint(a, ta);
  EXPECT_EQ(bytes.substr(0, 8), "DPBENCH1");

  mono::MonoDepthModel b(small_mono());
  nn::init_parameters(b.params(), 2);
  Trainer<mono::MonoDepthModel, data::MonoSample> tb(b, data, nullptr, options(20, 1e-3, 3));
  load_checkpoint(bytes, b, tb);
  EXPECT_EQ(flat_params(b.params()), flat_params(a.params()));
  EXPECT_EQ(save_checkpoint(b, tb), bytes);
  EXPECT_EQ(read_checkpoint_header(bytes).at("step").get<int>(), 5);
}

TEST(Checkpoint, ResumeMatchesUninterruptedTraining) {
  const auto data = data::gen_synthetic_stereo(7, 6);
  stereo::AnyNet full(desk_stereo());
  nn::init_parameters(full.params(), 3);
  Trainer<stereo::AnyNet, data::StereoSample> tf(full, data, nullptr, options(100));
  tf.run();

  std::string bytes;
  {
    stereo::AnyNet first(desk_stereo());
    nn::init_parameters(first.params(), 3);
    Trainer<stereo::AnyNet, data::StereoSample> t1(first, data, nullptr, options(100));
    t1.run(50);
    bytes = save_checkpoint(first, t1);
  }
  stereo::AnyNet resumed(desk_stereo());
  nn::init_parameters(resumed.params(), 99);
  Trainer<stereo::AnyNet, data::StereoSample> t2(resumed, data, nullptr, options(100));
  load_checkpoint(bytes, resumed, t2);
  t2.run();

  EXPECT_EQ(t2.history().step_loss, tf.history().step_loss);
  EXPECT_EQ(t2.history().part_loss, tf.history().part_loss);
  EXPECT_EQ(t2.history().epoch_end_step, tf.history().epoch_end_step);
  EXPECT_EQ(flat_params(resumed.params()), flat_params(full.params()));
}

TEST(Checkpoint, CorruptionIsDetected) {
  const auto data = data::gen_synthetic_stereo(7, 4);
  stereo::AnyNet net(desk_stereo());
  nn::init_parameters(net.params(), 3);
  Trainer<stereo::AnyNet, data::StereoSample> t(net, data, nullptr, options(2));
  t.run();
  const std::string good = save_checkpoint(net, t);

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(load_checkpoint(bad_magic, net, t), FormatError);
  std::string bad_version = good;
  bad_version[8] = 2;
  EXPECT_THROW(load_checkpoint(bad_version, net, t), FormatError);
  EXPECT_THROW(load_checkpoint(good.substr(0, good.size() - 3), net, t), FormatError);
  EXPECT_THROW(load_checkpoint(good.substr(0, 30), net, t), FormatError);
  EXPECT_THROW(load_checkpoint(good + "x", net, t), FormatError);

  mono::MonoDepthModel other(small_mono());
  const auto mono_data = data::gen_synthetic_mono(1, 2, 32, 32);
  Trainer<mono::MonoDepthModel, data::MonoSample> tm(other, mono_data, nullptr, options(1));
  EXPECT_THROW(load_checkpoint(good, other, tm), FormatError);

  auto wider = desk_stereo();
  wider.spn_channels = 1;
  stereo::AnyNet mismatched(wider);
  Trainer<stereo::AnyNet, data::StereoSample> tw(mismatched, data, nullptr, options(1));
  EXPECT_THROW(load_checkpoint(good, mismatched, tw), FormatError);
}
