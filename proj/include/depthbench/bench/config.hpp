#pragma once

// Experiment configuration: INI text ("[section]" + "key = value"), parsed
// with Boost.PropertyTree. Every key is addressed as "section.key"; the same
// setter table serves config files and command-line overrides. Unknown keys
// are rejected so a typo never silently falls back to a default.

#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "depthbench/bench/variants.hpp"
#include "depthbench/train/trainer.hpp"

namespace depthbench::bench {

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "manifest"
  std::string manifest;              // manifest path (source = manifest)
  std::uint64_t seed = 11;           // synthetic training scenes
  std::size_t count = 128;
  std::uint64_t test_seed = 12;  // synthetic held-out scenes
  std::size_t test_count = 32;
  std::size_t height = 0;  // 0 = task default
  std::size_t width = 0;
  std::size_t max_disp = 20;     // synthetic stereo disparity range
  double split = 0.8;            // manifest train fraction
  std::uint64_t split_seed = 0;  // manifest split shuffle
};

struct ExperimentConfig {
  std::string id;  // empty = derived from task and variant
  TaskKind task = TaskKind::mono;
  std::string variant;  // mono: 4-1-4 | 3-1-3 | 3-1-3-swish ...; stereo: none | 1 | 2 | 4 | 8
  std::uint64_t seed = 1;  // parameter init and per-epoch shuffle
  bool deterministic = true;
  bool save_checkpoint = true;
  std::filesystem::path out_dir = "runs";

  // Model fields beyond the variant name.
  double leaky_alpha = 0.2;
  std::size_t input_size = 64;  // mono, square
  bool skip_connections = true;
  std::size_t head_kernel = 1;
  std::size_t max_disparity = 32;  // stereo

  DataConfig data;
  train::TrainOptions train;

  std::string experiment_id() const {
    return id.empty() ? data::to_string(task) + "-" + (task == TaskKind::mono ? variant : "spn-" + variant) : id;
  }

  std::size_t image_height() const { return data.height ? data.height : (task == TaskKind::mono ? input_size : 48); }
  std::size_t image_width() const { return data.width ? data.width : (task == TaskKind::mono ? input_size : 96); }

  mono::MonoModelConfig mono_model() const {
    auto c = mono_config(parse_mono_variant(variant), leaky_alpha);
    c.input_size = input_size;
    c.use_skip_connections = skip_connections;
    c.head_kernel = head_kernel;
    return c;
  }

  stereo::AnyNetConfig stereo_model() const {
    stereo::AnyNetConfig c;
    c.max_disparity = max_disparity;
    c.spn_channels = parse_spn_variant(variant);
    return c;
  }

  /// Throws ConfigError for variant fields that do not fit the task and for
  /// invalid model, data or optimizer settings.
  void validate() const {
    if (task == TaskKind::mono) {
      mono_model().validate();
      if (image_height() != input_size || image_width() != input_size)
        throw ConfigError("mono images must be input_size x input_size (" + std::to_string(input_size) + ")");
    } else {
      stereo_model().validate();
    }
    if (data.source != "synthetic" && data.source != "manifest")
      throw ConfigError("data.source must be synthetic or manifest, got '" + data.source + "'");
    if (data.source == "manifest" && data.manifest.empty()) throw ConfigError("data.manifest is required");
    if (data.source == "synthetic" && (data.count == 0 || data.test_count == 0))
      throw ConfigError("synthetic data needs positive count and test_count");
    if (!(data.split > 0 && data.split < 1)) throw ConfigError("data.split must lie in (0, 1)");
    train.optimizer.validate();
    const auto& w = train.mono_weights;
    if (w.ssim < 0 || w.l1 < 0 || w.smooth < 0) throw ConfigError("loss weights must be non-negative");
    if (task == TaskKind::mono && w.ssim + w.l1 + w.smooth <= 0) throw ConfigError("at least one loss weight must be positive");
    if (!(train.stereo_beta > 0)) throw ConfigError("train.smooth_l1_beta must be positive");
  }
};

/// Desk-scale defaults per task.
inline ExperimentConfig default_config(TaskKind task) {
  ExperimentConfig c;
  c.task = task;
  c.variant = task == TaskKind::mono ? "3-1-3" : "none";
  c.train.optimizer.lr = 1e-3;
  c.train.optimizer.batch_size = 4;
  c.train.optimizer.max_steps = 500;
  c.train.eval_every_epochs = 1;
  return c;
}

namespace detail {

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "off" || text == "no") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
  } else if constexpr (std::is_same_v<T, std::string>) {
    return text;
  } else {
    std::istringstream in(text);
    if constexpr (std::is_unsigned_v<T>) {
      if (!text.empty() && text[0] == '-') throw ConfigError("config key '" + key + "': must be non-negative");
    }
    in >> v;
    if (!in || !(in >> std::ws).eof())
      throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
    return v;
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <class T, class Fn>
Setter field(Fn access) {
  return [access](ExperimentConfig& c, const std::string& key, const std::string& text) {
    access(c) = parse_value<T>(key, text);
  };
}

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"experiment.id", field<std::string>([](ExperimentConfig& c) -> auto& { return c.id; })},
      {"experiment.task",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.task = data::parse_task_kind(v); }},
      {"experiment.variant", field<std::string>([](ExperimentConfig& c) -> auto& { return c.variant; })},
      {"experiment.seed", field<std::uint64_t>([](ExperimentConfig& c) -> auto& { return c.seed; })},
      {"experiment.deterministic", field<bool>([](ExperimentConfig& c) -> auto& { return c.deterministic; })},
      {"experiment.checkpoint", field<bool>([](ExperimentConfig& c) -> auto& { return c.save_checkpoint; })},
      {"experiment.out",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = std::filesystem::path(v); }},
      {"model.alpha", field<double>([](ExperimentConfig& c) -> auto& { return c.leaky_alpha; })},
      {"model.input_size", field<std::size_t>([](ExperimentConfig& c) -> auto& { return c.input_size; })},
      {"model.skip_connections", field<bool>([](ExperimentConfig& c) -> auto& { return c.skip_connections; })},
      {"model.head_kernel", field<std::size_t>([](ExperimentConfig& c) -> auto& { return c.head_kernel; })},
      {"model.max_disparity", field<std::size_t>([](ExperimentConfig& c) -> auto& { return c.max_disparity; })},
      {"data.source", field<std::string>([](ExperimentConfig& c) -> auto& { return c.data.source; })},
      {"data.manifest", field<std::string>([](ExperimentConfig& c) -> auto& { return c.data.manifest; })},
      {"data.seed", field<std::uint64_t>([](ExperimentConfig& c) -> auto& { return c.data.seed; })},
      {"data.count", field<std::size_t>([](ExperimentConfig& c) -> auto& { return c.data.count; })},
      {"data.test_seed", field<std::uint64_t>([](ExperimentConfig& c) -> auto& { return c.data.test_seed; })},
      {"data.test_count", field<std::size_t>([](ExperimentConfig& c) -> auto& { return c.data.test_count; })},
      {"data.height", field<std::size_t>([](ExperimentConfig& c) -> auto& { return c.data.height; })},
      {"data.width", field<std::size_t>([](ExperimentConfig& c) -> auto& { return c.data.width; })},
      {"data.max_disp", field<std::size_t>([](ExperimentConfig& c) -> auto& { return c.data.max_disp; })},
      {"data.split", field<double>([](ExperimentConfig& c) -> auto& { return c.data.split; })},
      {"data.split_seed", field<std::uint64_t>([](ExperimentConfig& c) -> auto& { return c.data.split_seed; })},
      {"train.optimizer",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.train.optimizer.kind = train::parse_optimizer_kind(v);
       }},
      {"train.lr", field<double>([](ExperimentConfig& c) -> auto& { return c.train.optimizer.lr; })},
      {"train.beta1", field<double>([](ExperimentConfig& c) -> auto& { return c.train.optimizer.beta1; })},
      {"train.beta2", field<double>([](ExperimentConfig& c) -> auto& { return c.train.optimizer.beta2; })},
      {"train.epsilon", field<double>([](ExperimentConfig& c) -> auto& { return c.train.optimizer.epsilon; })},
      {"train.batch_size", field<std::size_t>([](ExperimentConfig& c) -> auto& { return c.train.optimizer.batch_size; })},
      {"train.steps", field<std::size_t>([](ExperimentConfig& c) -> auto& { return c.train.optimizer.max_steps; })},
      {"train.eval_every_epochs", field<std::size_t>([](ExperimentConfig& c) -> auto& { return c.train.eval_every_epochs; })},
      {"train.smooth_l1_beta", field<double>([](ExperimentConfig& c) -> auto& { return c.train.stereo_beta; })},
      {"train.w_ssim", field<double>([](ExperimentConfig& c) -> auto& { return c.train.mono_weights.ssim; })},
      {"train.w_l1", field<double>([](ExperimentConfig& c) -> auto& { return c.train.mono_weights.l1; })},
      {"train.w_smooth", field<double>([](ExperimentConfig& c) -> auto& { return c.train.mono_weights.smooth; })},
  };
  return table;
}

}  // namespace detail

/// Sets one "section.key" to a textual value.
inline void set_option(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = detail::setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

/// Known "section.key" names, sorted.
inline std::vector<std::string> option_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : detail::setters()) keys.push_back(k);
  return keys;
}

/// Parses INI text. The task is read first so its defaults apply to every
/// key not given (variant 3-1-3 for mono, none for stereo).
inline ExperimentConfig parse_config(std::string_view text) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  const auto task = tree.get_optional<std::string>("experiment.task");
  ExperimentConfig cfg = default_config(task ? data::parse_task_kind(*task) : TaskKind::mono);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' must be inside a [section]");
    for (const auto& [key, value] : body) set_option(cfg, section + "." + key, value.data());
  }
  return cfg;
}

/// INI rendering of a configuration (parse_config(to_ini(c)) reproduces c).
inline std::string to_ini(const ExperimentConfig& c) {
  std::ostringstream o;
  o.precision(17);
  const auto& p = c.train.optimizer;
  o << "[experiment]\n"
    << "id = " << c.id << "\ntask = " << data::to_string(c.task) << "\nvariant = " << c.variant
    << "\nseed = " << c.seed << "\ndeterministic = " << (c.deterministic ? "true" : "false")
    << "\ncheckpoint = " << (c.save_checkpoint ? "true" : "false") << "\nout = " << c.out_dir.string() << "\n\n"
    << "[model]\nalpha = " << c.leaky_alpha << "\ninput_size = " << c.input_size
    << "\nskip_connections = " << (c.skip_connections ? "true" : "false") << "\nhead_kernel = " << c.head_kernel
    << "\nmax_disparity = " << c.max_disparity << "\n\n"
    << "[data]\nsource = " << c.data.source << "\nmanifest = " << c.data.manifest << "\nseed = " << c.data.seed
    << "\ncount = " << c.data.count << "\ntest_seed = " << c.data.test_seed << "\ntest_count = " << c.data.test_count
    << "\nheight = " << c.data.height << "\nwidth = " << c.data.width << "\nmax_disp = " << c.data.max_disp
    << "\nsplit = " << c.data.split << "\nsplit_seed = " << c.data.split_seed << "\n\n"
    << "[train]\noptimizer = " << train::to_string(p.kind) << "\nlr = " << p.lr << "\nbeta1 = " << p.beta1
    << "\nbeta2 = " << p.beta2 << "\nepsilon = " << p.epsilon << "\nbatch_size = " << p.batch_size
    << "\nsteps = " << p.max_steps << "\neval_every_epochs = " << c.train.eval_every_epochs
    << "\nsmooth_l1_beta = " << c.train.stereo_beta << "\nw_ssim = " << c.train.mono_weights.ssim
    << "\nw_l1 = " << c.train.mono_weights.l1 << "\nw_smooth = " << c.train.mono_weights.smooth << "\n";
  return o.str();
}

}  // namespace depthbench::bench
