#pragma once

#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "depthbench/core/random.hpp"
#include "depthbench/data/dataset.hpp"
#include "depthbench/mono/losses.hpp"
#include "depthbench/mono/model.hpp"
#include "depthbench/stereo/anynet.hpp"
#include "depthbench/train/metrics.hpp"
#include "depthbench/train/optimizer.hpp"

namespace depthbench::train {

struct TrainOptions {
  OptimizerConfig optimizer;
  std::size_t eval_every_epochs = 1;  // 0 disables per-epoch validation
  double stereo_beta = 1.0;           // smooth-L1 knee
  mono::LossWeights mono_weights;
};

struct TrainHistory {
  std::vector<std::string> part_names;         // loss components recorded per step
  std::vector<double> step_loss;               // total training loss per step
  std::vector<std::vector<double>> part_loss;  // [step][part]
  std::vector<std::size_t> epoch_end_step;     // steps completed at each epoch end
  std::vector<double> epoch_seconds;           // wall clock (not part of determinism)
  std::vector<std::size_t> val_step;           // steps completed at each validation
  std::vector<double> val_loss;
  std::vector<double> val_metric;  // mean of the task's primary metric
};

/// Loss of one mini-batch, the differentiable total plus its recorded parts.
struct BatchLoss {
  Tensor total;
  std::vector<double> parts;
};

// ----------------------------------------------------------------- stereo

inline std::vector<std::string> loss_part_names(const stereo::AnyNet&) {
  return {"stage1", "stage2", "stage3", "stage4"};
}

inline const char* primary_metric(const stereo::AnyNet&) { return "three_pixel_error"; }

inline BatchLoss batch_loss(stereo::AnyNet& model, const std::vector<const data::StereoSample*>& batch, bool training,
                            const TrainOptions& opt) {
  std::vector<Tensor> l, r, d, m;
  for (const auto* s : batch) {
    l.push_back(s->left);
    r.push_back(s->right);
    d.push_back(s->disparity);
    m.push_back(s->mask);
  }
  const auto out = model.forward(data::stack(l), data::stack(r), 4, training);
  auto loss = model.loss(out, data::stack(d), data::stack(m), opt.stereo_beta);
  BatchLoss b{loss.total, {}};
  for (const auto& p : loss.per_stage) b.parts.push_back(p.item());
  return b;
}

/// Per-sample three-pixel error of every stage (final stage under the plain
/// name) and the final-stage smooth-L1, in eval mode.
inline MetricsReport evaluate_model(stereo::AnyNet& model, const std::vector<data::StereoSample>& samples,
                                    const TrainOptions& opt = {}) {
  if (samples.empty()) throw ConfigError("evaluate_model: empty dataset");
  NoGradGuard no_grad;
  std::vector<std::vector<double>> per_stage(4);
  std::vector<double> loss;
  for (const auto& s : samples) {
    const auto out = model.forward(data::stack({s.left}), data::stack({s.right}), 4, false);
    const Tensor target = data::stack({s.disparity}), mask = data::stack({s.mask});
    for (std::size_t k = 0; k < 4; ++k)
      per_stage[k].push_back(stereo::three_pixel_error(out.full_res[k], target, mask));
    loss.push_back(model.loss(out, target, mask, opt.stereo_beta).total.item());
  }
  MetricsReport report;
  report.add("three_pixel_error", per_stage[3]);
  for (std::size_t k = 0; k < 4; ++k) report.add("three_pixel_error_stage" + std::to_string(k + 1), per_stage[k]);
  report.add("loss", loss);
  return report;
}

// ------------------------------------------------------------------- mono

inline std::vector<std::string> loss_part_names(const mono::MonoDepthModel&) { return {"ssim", "l1", "smoothness"}; }

inline const char* primary_metric(const mono::MonoDepthModel&) { return "ssim"; }

inline BatchLoss batch_loss(mono::MonoDepthModel& model, const std::vector<const data::MonoSample*>& batch,
                            bool training, const TrainOptions& opt) {
  std::vector<Tensor> x, d, m;
  for (const auto* s : batch) {
    x.push_back(s->rgb);
    d.push_back(s->depth);
    m.push_back(s->mask);
  }
  const Tensor rgb = data::stack(x);
  const Tensor pred = model.forward(rgb, training);
  auto t = mono::mono_loss_terms(pred, data::stack(d), data::stack(m), rgb, opt.mono_weights);
  return {t.total, {t.ssim.item(), t.l1.item(), t.smoothness.item()}};
}

/// Per-sample SSIM and L1 of the predicted depth, plus the training loss, in eval mode.
inline MetricsReport evaluate_model(mono::MonoDepthModel& model, const std::vector<data::MonoSample>& samples,
                                    const TrainOptions& opt = {}) {
  if (samples.empty()) throw ConfigError("evaluate_model: empty dataset");
  NoGradGuard no_grad;
  std::vector<double> ssim, l1, loss;
  for (const auto& s : samples) {
    const Tensor rgb = data::stack({s.rgb});
    const Tensor pred = model.forward(rgb, false);
    const auto t = mono::mono_loss_terms(pred, data::stack({s.depth}), data::stack({s.mask}), rgb, opt.mono_weights);
    ssim.push_back(t.ssim.item());
    l1.push_back(t.l1.item());
    loss.push_back(t.total.item());
  }
  MetricsReport report;
  report.add("ssim", ssim);
  report.add("l1", l1);
  report.add("loss", loss);
  return report;
}

// ---------------------------------------------------------------- trainer

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::uint64_t cursor = 0;                // position inside the epoch permutation
  std::vector<std::uint64_t> permutation;  // sample order of the current epoch
  std::mt19937_64 rng;
  OptimizerState optimizer;
  TrainHistory history;
};

/// Mini-batch training of `Model` over in-memory samples. Each epoch visits
/// the training set in a freshly shuffled order (the last batch may be
/// short); the shuffle RNG, cursor and optimizer moments live in TrainState
/// so a run can be checkpointed after any step and resumed bitwise.
template <class Model, class Sample>
class Trainer {
 public:
  Trainer(Model& model, const std::vector<Sample>& train, const std::vector<Sample>* validation, TrainOptions opt)
      : model_(model), train_(train), validation_(validation), opt_(std::move(opt)) {
    opt_.optimizer.validate();
    if (train_.empty()) throw ConfigError("training set is empty");
    state_.rng.seed(opt_.optimizer.seed);
    state_.history.part_names = loss_part_names(model_);
    reshuffle();
  }

  const TrainOptions& options() const { return opt_; }
  TrainState& state() { return state_; }
  const TrainState& state() const { return state_; }
  const TrainHistory& history() const { return state_.history; }
  bool finished() const { return state_.step >= opt_.optimizer.max_steps; }

  /// Runs until `until_step` steps have been taken in total (capped at max_steps).
  void run(std::size_t until_step) {
    until_step = std::min<std::size_t>(until_step, opt_.optimizer.max_steps);
    while (state_.step < until_step) step();
  }

  void run() { run(opt_.optimizer.max_steps); }

  void step() {
    const std::size_t n = train_.size();
    const std::size_t take = std::min<std::size_t>(opt_.optimizer.batch_size, n - state_.cursor);
    std::vector<const Sample*> batch;
    for (std::size_t i = 0; i < take; ++i) batch.push_back(&train_[state_.permutation[state_.cursor + i]]);
    if (!epoch_started_) {
      epoch_clock_ = std::chrono::steady_clock::now();
      epoch_started_ = true;
    }

    auto& store = model_.params();
    store.zero_grad();
    BatchLoss loss = batch_loss(model_, batch, true, opt_);
    const double value = loss.total.item();
    if (!std::isfinite(value))
      throw NumericError("training diverged: non-finite loss at step " + std::to_string(state_.step));
    loss.total.backward();
    auto params = store.trainable();
    optimizer_step(params, state_.optimizer, opt_.optimizer);

    state_.history.step_loss.push_back(value);
    state_.history.part_loss.push_back(std::move(loss.parts));
    state_.step += 1;
    state_.cursor += take;
    if (state_.cursor >= n) end_epoch();
  }

 private:
  void reshuffle() {
    state_.permutation.resize(train_.size());
    for (std::size_t i = 0; i < train_.size(); ++i) state_.permutation[i] = i;
    shuffle(state_.permutation, state_.rng);
    state_.cursor = 0;
  }

  void end_epoch() {
    auto& h = state_.history;
    h.epoch_end_step.push_back(state_.step);
    const auto now = std::chrono::steady_clock::now();
    h.epoch_seconds.push_back(epoch_started_ ? std::chrono::duration<double>(now - epoch_clock_).count() : 0.0);
    epoch_started_ = false;
    state_.epoch += 1;
    if (validation_ && !validation_->empty() && opt_.eval_every_epochs && state_.epoch % opt_.eval_every_epochs == 0) {
      const MetricsReport r = evaluate_model(model_, *validation_, opt_);
      h.val_step.push_back(state_.step);
      h.val_loss.push_back(r.get("loss").stats.mean);
      h.val_metric.push_back(r.get(primary_metric(model_)).stats.mean);
    }
    reshuffle();
  }

  Model& model_;
  const std::vector<Sample>& train_;
  const std::vector<Sample>* validation_;
  TrainOptions opt_;
  TrainState state_;
  bool epoch_started_ = false;
  std::chrono::steady_clock::time_point epoch_clock_;
};

/// Convenience wrapper: a full run from a fresh state.
template <class Model, class Sample>
TrainHistory train_model(Model& model, const std::vector<Sample>& train, const std::vector<Sample>* validation,
                         const TrainOptions& opt) {
  Trainer<Model, Sample> trainer(model, train, validation, opt);
  trainer.run();
  return trainer.history();
}

}  // namespace depthbench::train
