#pragma once

// End-to-end experiment: load or generate data, build and initialize the
// variant, record untrained and constant-prediction baselines, train, evaluate
// on the held-out split, and write report.json / history.csv / samples.csv
// (plus model.ckpt and the resolved config.ini) under <out>/<experiment id>/.

#include <chrono>
#include <filesystem>
#include <ostream>

#include "depthbench/bench/config.hpp"
#include "depthbench/bench/report.hpp"
#include "depthbench/data/files.hpp"
#include "depthbench/train/checkpoint.hpp"

namespace depthbench::bench {

template <class Sample>
struct SplitData {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

namespace detail {

inline data::DatasetIndex read_manifest_file(const ExperimentConfig& cfg) {
  const auto idx = data::read_manifest(data::read_file(cfg.data.manifest));
  if (idx.kind != cfg.task)
    throw ConfigError("manifest '" + cfg.data.manifest + "' holds " + data::to_string(idx.kind) + " data, not " +
                      data::to_string(cfg.task));
  return idx;
}

inline data::LoadOptions manifest_load_options(const ExperimentConfig& cfg) {
  data::LoadOptions opt;
  opt.base_dir = std::filesystem::path(cfg.data.manifest).parent_path();
  if (cfg.task == TaskKind::mono) {
    opt.height = opt.width = cfg.input_size;
  } else {
    opt.height = cfg.data.height;
    opt.width = cfg.data.width;
  }
  return opt;
}

}  // namespace detail

inline SplitData<data::StereoSample> load_stereo_data(const ExperimentConfig& cfg) {
  if (cfg.data.source == "synthetic")
    return {data::gen_synthetic_stereo(cfg.data.seed, cfg.data.count, cfg.image_height(), cfg.image_width(),
                                       cfg.data.max_disp),
            data::gen_synthetic_stereo(cfg.data.test_seed, cfg.data.test_count, cfg.image_height(), cfg.image_width(),
                                       cfg.data.max_disp)};
  const auto [train_idx, test_idx] =
      data::split_dataset(detail::read_manifest_file(cfg), cfg.data.split, cfg.data.split_seed);
  const auto opt = detail::manifest_load_options(cfg);
  return {data::load_stereo(train_idx, opt), data::load_stereo(test_idx, opt)};
}

inline SplitData<data::MonoSample> load_mono_data(const ExperimentConfig& cfg) {
  if (cfg.data.source == "synthetic")
    return {data::gen_synthetic_mono(cfg.data.seed, cfg.data.count, cfg.input_size, cfg.input_size),
            data::gen_synthetic_mono(cfg.data.test_seed, cfg.data.test_count, cfg.input_size, cfg.input_size)};
  const auto [train_idx, test_idx] =
      data::split_dataset(detail::read_manifest_file(cfg), cfg.data.split, cfg.data.split_seed);
  const auto opt = detail::manifest_load_options(cfg);
  return {data::load_mono(train_idx, opt), data::load_mono(test_idx, opt)};
}

// ------------------------------------------------------------- baselines

/// Predicts the training set's mean valid depth everywhere; per-sample SSIM.
inline std::vector<double> constant_depth_ssim(const std::vector<data::MonoSample>& train,
                                               const std::vector<data::MonoSample>& test) {
  double sum = 0, count = 0;
  for (const auto& s : train)
    for (std::size_t i = 0; i < s.depth.numel(); ++i)
      if (s.mask[i] != 0) {
        sum += s.depth[i];
        count += 1;
      }
  const double mean = count > 0 ? sum / count : 0.5;
  NoGradGuard no_grad;
  std::vector<double> out;
  for (const auto& s : test) {
    const Tensor target = data::stack({s.depth});
    out.push_back(mono::ssim(Tensor::full(target.shape(), mean), target).item());
  }
  return out;
}

/// Predicts the training set's mean valid disparity everywhere; per-sample three-pixel error.
inline std::vector<double> constant_disparity_error(const std::vector<data::StereoSample>& train,
                                                    const std::vector<data::StereoSample>& test) {
  double sum = 0, count = 0;
  for (const auto& s : train)
    for (std::size_t i = 0; i < s.disparity.numel(); ++i)
      if (s.mask[i] != 0) {
        sum += s.disparity[i];
        count += 1;
      }
  const double mean = count > 0 ? sum / count : 0.0;
  std::vector<double> out;
  for (const auto& s : test)
    out.push_back(stereo::three_pixel_error(Tensor::full(s.disparity.shape(), mean), s.disparity, s.mask));
  return out;
}

// ------------------------------------------------------------- profiling

inline std::vector<StageMacs> stage_macs(stereo::AnyNet& model, std::size_t h, std::size_t w) {
  std::vector<StageMacs> out;
  std::uint64_t prev = 0;
  for (int k = 1; k <= 4; ++k) {
    const auto total = stereo::count_flops(model, 1, h, w, k).total();
    out.push_back({"stage" + std::to_string(k), total, total - prev});
    prev = total;
  }
  return out;
}

inline std::vector<StageMacs> stage_macs(mono::MonoDepthModel& model, std::size_t h, std::size_t w) {
  const auto total = mono::count_flops(model, 1, h, w).total();
  return {{"forward", total, total}};
}

// ------------------------------------------------------------- experiment

struct ExperimentOutputs {
  ExperimentReport report;
  train::TrainHistory history;
  std::filesystem::path directory;  // empty when nothing was written
};

namespace detail {

inline Json data_json(const ExperimentConfig& cfg) {
  const auto& d = cfg.data;
  Json j{{"source", d.source}};
  if (d.source == "synthetic")
    j.update({{"seed", d.seed},
              {"count", d.count},
              {"test_seed", d.test_seed},
              {"test_count", d.test_count},
              {"height", cfg.image_height()},
              {"width", cfg.image_width()}});
  else
    j.update({{"manifest", d.manifest}, {"split", d.split}, {"split_seed", d.split_seed}});
  if (cfg.task == TaskKind::stereo && d.source == "synthetic") j["max_disp"] = d.max_disp;
  return j;
}

inline std::optional<PublishedReference> published_for(const ExperimentConfig& cfg) {
  return cfg.task == TaskKind::mono ? published_mono(parse_mono_variant(cfg.variant))
                                    : published_stereo(parse_spn_variant(cfg.variant));
}

template <class Model, class Sample>
ExperimentOutputs run(const ExperimentConfig& cfg, Model& model, const SplitData<Sample>& split,
                      const std::vector<double>& constant_baseline, const char* constant_name, std::ostream* log) {
  if (split.train.empty() || split.test.empty()) throw ConfigError("experiment needs non-empty train and test splits");
  train::TrainOptions opt = cfg.train;
  opt.optimizer.seed = cfg.seed;
  nn::init_parameters(model.params(), cfg.seed);

  ExperimentOutputs out;
  auto& r = out.report;
  r.id = cfg.experiment_id();
  r.task = cfg.task;
  r.variant = cfg.variant;
  r.params = nn::count_parameters(model.params());
  r.primary_metric = train::primary_metric(model);
  r.published = published_for(cfg);
  r.config = {{"model", train::to_json(model.config())},
              {"train", train::to_json(opt)},
              {"data", data_json(cfg)},
              {"seed", cfg.seed},
              {"deterministic", cfg.deterministic}};
  const auto& probe = split.test.front();
  if constexpr (std::is_same_v<Sample, data::StereoSample>) {
    r.mac_height = probe.left.dim(1);
    r.mac_width = probe.left.dim(2);
  } else {
    r.mac_height = probe.rgb.dim(1);
    r.mac_width = probe.rgb.dim(2);
  }
  r.macs = stage_macs(model, r.mac_height, r.mac_width);

  r.baselines["untrained"] = train::evaluate_model(model, split.test, opt).get(r.primary_metric).stats;
  r.baselines[constant_name] = train::aggregate(constant_baseline);
  if (log)
    *log << r.id << ": " << split.train.size() << " train / " << split.test.size() << " test samples, "
         << r.params.trainable << " trainable parameters\n";

  train::Trainer<Model, Sample> trainer(model, split.train, &split.test, opt);
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t chunk = 50;
  while (!trainer.finished()) {
    trainer.run(trainer.state().step + chunk);
    if (log)
      *log << r.id << ": step " << trainer.state().step << "/" << opt.optimizer.max_steps << " loss "
           << fmt9(trainer.history().step_loss.back()) << "\n";
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.history = trainer.history();
  r.training = summarize(out.history, seconds);
  r.metrics = train::evaluate_model(model, split.test, opt);
  r.history_csv = "history.csv";
  r.samples_csv = "samples.csv";

  if (!cfg.out_dir.empty()) {
    out.directory = cfg.out_dir / r.id;
    data::write_file_atomic(out.directory / "report.json", emit_report(r, "json"));
    data::write_file_atomic(out.directory / "samples.csv", emit_report(r, "csv"));
    data::write_file_atomic(out.directory / "history.csv", history_csv(out.history));
    data::write_file_atomic(out.directory / "config.ini", to_ini(cfg));
    if (cfg.save_checkpoint) data::write_file_atomic(out.directory / "model.ckpt", train::save_checkpoint(model, trainer));
  }
  if (log)
    *log << r.id << ": " << r.primary_metric << " mean " << fmt9(r.primary().stats.mean) << " (untrained "
         << fmt9(r.baselines["untrained"].mean) << ", " << constant_name << " " << fmt9(r.baselines[constant_name].mean)
         << "), " << fmt9(seconds) << " s\n";
  return out;
}

}  // namespace detail

/// Runs one experiment. With an empty cfg.out_dir nothing is written to disk.
inline ExperimentOutputs run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  if (cfg.task == TaskKind::mono) {
    mono::MonoDepthModel model(cfg.mono_model());
    const auto split = load_mono_data(cfg);
    return detail::run(cfg, model, split, constant_depth_ssim(split.train, split.test), "constant_mean_depth", log);
  }
  stereo::AnyNet model(cfg.stereo_model());
  const auto split = load_stereo_data(cfg);
  return detail::run(cfg, model, split, constant_disparity_error(split.train, split.test), "constant_mean_disparity",
                     log);
}

// ------------------------------------------------------------- evaluation

/// Evaluates a saved checkpoint on the held-out split described by `cfg`
/// (the model configuration comes from the checkpoint). No training.
inline ExperimentReport evaluate_checkpoint(std::string_view bytes, ExperimentConfig cfg) {
  const Json header = train::read_checkpoint_header(bytes);
  cfg.task = data::parse_task_kind(header.at("task").get<std::string>());
  const auto opt = train::train_options_from_json(header.at("train"));
  ExperimentReport r;
  r.task = cfg.task;
  r.history_csv = "";
  r.samples_csv = "samples.csv";
  auto fill = [&](auto& model, const auto& split) {
    train::load_model_parameters(bytes, model);
    r.params = nn::count_parameters(model.params());
    r.primary_metric = train::primary_metric(model);
    r.config = {{"model", train::to_json(model.config())}, {"train", train::to_json(opt)}, {"data", detail::data_json(cfg)}};
    if (split.test.empty()) throw ConfigError("evaluation split is empty");
    r.metrics = train::evaluate_model(model, split.test, opt);
    r.training.steps = header.at("step").get<std::size_t>();
  };
  if (cfg.task == TaskKind::mono) {
    const auto mc = train::mono_config_from_json(header.at("model"));
    cfg.input_size = mc.input_size;
    mono::MonoDepthModel model(mc);
    r.variant = mc.structure() + (mc.activation.kind == ActivationKind::leaky_relu ? "" : "-" + mc.activation.name());
    fill(model, load_mono_data(cfg));
    r.mac_height = r.mac_width = mc.input_size;
    r.macs = stage_macs(model, mc.input_size, mc.input_size);
    r.published = published_mono(parse_mono_variant(r.variant));
  } else {
    const auto sc = train::stereo_config_from_json(header.at("model"));
    stereo::AnyNet model(sc);
    r.variant = spn_variant_name(sc.spn_channels);
    const auto split = load_stereo_data(cfg);
    fill(model, split);
    r.mac_height = split.test.front().left.dim(1);
    r.mac_width = split.test.front().left.dim(2);
    r.macs = stage_macs(model, r.mac_height, r.mac_width);
    r.published = published_stereo(sc.spn_channels);
  }
  r.id = cfg.id.empty() ? data::to_string(cfg.task) + "-" + r.variant + "-eval" : cfg.id;
  return r;
}

}  // namespace depthbench::bench
