#pragma once

// Binary checkpoint:
//   "DPBENCH1" | u32 LE version | u64 LE header length | header (JSON text)
//   | f64 LE values of every parameter tensor in store order
//   | (adam only) f64 LE first moments, then second moments, per trainable tensor
// The header carries the task, model and training configuration, the step
// counter, shuffle RNG state, epoch permutation, history and the parameter table.

#include <bit>
#include <cstdint>
#include <cstring>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "depthbench/train/trainer.hpp"

namespace depthbench::train {

using Json = nlohmann::json;

inline constexpr std::string_view kCheckpointMagic = "DPBENCH1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

// ---------------------------------------------------------- config <-> JSON

inline Json activation_to_json(const Activation& a) {
  Json j{{"kind", a.name()}};
  if (a.kind == ActivationKind::leaky_relu) j["alpha"] = a.alpha;
  return j;
}

inline Activation parse_activation(const std::string& name, double alpha = 0.2) {
  if (name == "relu") return Activation::relu();
  if (name == "leaky_relu") return Activation::leaky_relu(alpha);
  if (name == "swish") return Activation::swish();
  if (name == "sigmoid") return Activation::sigmoid();
  throw ConfigError("unknown activation '" + name + "' (expected relu, leaky_relu, swish or sigmoid)");
}

inline Activation activation_from_json(const Json& j) {
  return parse_activation(j.at("kind").get<std::string>(), j.value("alpha", 0.2));
}

inline Json to_json(const mono::MonoModelConfig& c) {
  return {{"encoder_filters", c.encoder_filters},
          {"bottleneck_filters", c.bottleneck_filters},
          {"activation", activation_to_json(c.activation)},
          {"use_skip_connections", c.use_skip_connections},
          {"head_kernel", c.head_kernel},
          {"input_size", c.input_size}};
}

inline mono::MonoModelConfig mono_config_from_json(const Json& j) {
  mono::MonoModelConfig c;
  c.encoder_filters = j.at("encoder_filters").get<std::vector<std::size_t>>();
  c.bottleneck_filters = j.at("bottleneck_filters").get<std::size_t>();
  c.activation = activation_from_json(j.at("activation"));
  c.use_skip_connections = j.at("use_skip_connections").get<bool>();
  c.head_kernel = j.at("head_kernel").get<std::size_t>();
  c.input_size = j.at("input_size").get<std::size_t>();
  c.validate();
  return c;
}

inline Json to_json(const stereo::AnyNetConfig& c) {
  return {{"max_disparity", c.max_disparity},
          {"residual_range", c.residual_range},
          {"spn_channels", c.spn_channels},
          {"stage_loss_weights", c.stage_loss_weights},
          {"unet_base_channels", c.unet_base_channels},
          {"disparity_net_channels", c.disparity_net_channels},
          {"disparity_net_layers", c.disparity_net_layers}};
}

inline stereo::AnyNetConfig stereo_config_from_json(const Json& j) {
  stereo::AnyNetConfig c;
  c.max_disparity = j.at("max_disparity").get<std::size_t>();
  c.residual_range = j.at("residual_range").get<int>();
  c.spn_channels = j.at("spn_channels").get<std::size_t>();
  c.stage_loss_weights = j.at("stage_loss_weights").get<std::array<double, 4>>();
  c.unet_base_channels = j.at("unet_base_channels").get<std::size_t>();
  c.disparity_net_channels = j.at("disparity_net_channels").get<std::array<std::size_t, 3>>();
  c.disparity_net_layers = j.at("disparity_net_layers").get<std::size_t>();
  c.validate();
  return c;
}

inline Json to_json(const TrainOptions& o) {
  const auto& p = o.optimizer;
  return {{"optimizer",
           {{"kind", to_string(p.kind)},
            {"lr", p.lr},
            {"beta1", p.beta1},
            {"beta2", p.beta2},
            {"epsilon", p.epsilon},
            {"batch_size", p.batch_size},
            {"max_steps", p.max_steps},
            {"seed", p.seed}}},
          {"eval_every_epochs", o.eval_every_epochs},
          {"stereo_beta", o.stereo_beta},
          {"mono_weights", {{"ssim", o.mono_weights.ssim}, {"l1", o.mono_weights.l1}, {"smooth", o.mono_weights.smooth}}}};
}

inline TrainOptions train_options_from_json(const Json& j) {
  TrainOptions o;
  const auto& p = j.at("optimizer");
  o.optimizer.kind = parse_optimizer_kind(p.at("kind").get<std::string>());
  o.optimizer.lr = p.at("lr").get<double>();
  o.optimizer.beta1 = p.at("beta1").get<double>();
  o.optimizer.beta2 = p.at("beta2").get<double>();
  o.optimizer.epsilon = p.at("epsilon").get<double>();
  o.optimizer.batch_size = p.at("batch_size").get<std::size_t>();
  o.optimizer.max_steps = p.at("max_steps").get<std::size_t>();
  o.optimizer.seed = p.at("seed").get<std::uint64_t>();
  o.eval_every_epochs = j.at("eval_every_epochs").get<std::size_t>();
  o.stereo_beta = j.at("stereo_beta").get<double>();
  const auto& w = j.at("mono_weights");
  o.mono_weights = {w.at("ssim").get<double>(), w.at("l1").get<double>(), w.at("smooth").get<double>()};
  return o;
}

inline Json to_json(const TrainHistory& h) {
  return {{"part_names", h.part_names},       {"step_loss", h.step_loss},   {"part_loss", h.part_loss},
          {"epoch_end_step", h.epoch_end_step}, {"epoch_seconds", h.epoch_seconds}, {"val_step", h.val_step},
          {"val_loss", h.val_loss},           {"val_metric", h.val_metric}};
}

inline TrainHistory history_from_json(const Json& j) {
  TrainHistory h;
  h.part_names = j.at("part_names").get<std::vector<std::string>>();
  h.step_loss = j.at("step_loss").get<std::vector<double>>();
  h.part_loss = j.at("part_loss").get<std::vector<std::vector<double>>>();
  h.epoch_end_step = j.at("epoch_end_step").get<std::vector<std::size_t>>();
  h.epoch_seconds = j.at("epoch_seconds").get<std::vector<double>>();
  h.val_step = j.at("val_step").get<std::vector<std::size_t>>();
  h.val_loss = j.at("val_loss").get<std::vector<double>>();
  h.val_metric = j.at("val_metric").get<std::vector<double>>();
  return h;
}

// ------------------------------------------------------------- checkpoints

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64s(std::string& out, std::span<const double> values) {
  for (double d : values) put_u64(out, std::bit_cast<std::uint64_t>(d));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("checkpoint truncated while reading ") + what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint64_t u(std::size_t width, const char* what) {
    auto s = take(width, what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }

  void f64s(std::span<double> out, const char* what) {
    for (auto& d : out) d = std::bit_cast<double>(u(8, what));
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string task_name(const stereo::AnyNet&) { return "stereo"; }
inline std::string task_name(const mono::MonoDepthModel&) { return "mono"; }

/// Serializes model parameters plus the full trainer state.
template <class Model, class Sample>
std::string save_checkpoint(const Model& model, const Trainer<Model, Sample>& trainer) {
  const auto& st = trainer.state();
  std::ostringstream rng;
  rng << st.rng;
  Json params = Json::array();
  for (const auto& e : model.params().entries())
    params.push_back({{"name", e.name}, {"shape", e.tensor.shape()}, {"trainable", e.trainable}});
  const bool moments = !st.optimizer.m.empty();
  Json header{{"task", task_name(model)},
              {"model", to_json(model.config())},
              {"train", to_json(trainer.options())},
              {"step", st.step},
              {"epoch", st.epoch},
              {"cursor", st.cursor},
              {"permutation", st.permutation},
              {"rng", rng.str()},
              {"optimizer_step", st.optimizer.step},
              {"adam_moments", moments},
              {"history", to_json(st.history)},
              {"params", params}};
  const std::string text = header.dump();
  std::string out(kCheckpointMagic);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u64(out, text.size());
  out += text;
  for (const auto& e : model.params().entries()) detail::put_f64s(out, e.tensor.data());
  if (moments) {
    for (const auto& m : st.optimizer.m) detail::put_f64s(out, m);
    for (const auto& v : st.optimizer.v) detail::put_f64s(out, v);
  }
  return out;
}

/// Validates magic/version and returns the JSON header (used to rebuild the model).
inline Json read_checkpoint_header(std::string_view bytes) {
  detail::Reader r(bytes);
  if (r.take(kCheckpointMagic.size(), "magic") != kCheckpointMagic) throw FormatError("checkpoint: bad magic");
  const auto version = r.u(4, "version");
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  const auto len = r.u(8, "header length");
  const auto text = r.take(len, "header");
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header: ") + e.what());
  }
}

namespace detail {

// Checks the header's task and parameter table against `model`, copies the
// parameter values in, and returns a reader positioned after them.
template <class Model>
Reader restore_parameters(std::string_view bytes, const Json& header, Model& model) {
  if (header.at("task").get<std::string>() != task_name(model))
    throw FormatError("checkpoint: task mismatch (checkpoint is " + header.at("task").get<std::string>() + ")");
  const auto& table = header.at("params");
  const auto& entries = model.params().entries();
  if (table.size() != entries.size()) throw FormatError("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (table[i].at("name").get<std::string>() != entries[i].name ||
        table[i].at("shape").get<Shape>() != entries[i].tensor.shape())
      throw FormatError("checkpoint: parameter table mismatch at '" + entries[i].name + "'");

  Reader r(bytes);
  r.take(kCheckpointMagic.size() + 4, "magic");
  r.take(r.u(8, "header length"), "header");
  for (const auto& e : entries) {
    Tensor t = e.tensor;
    r.f64s(t.mutable_data(), "parameters");
  }
  return r;
}

}  // namespace detail

/// Restores only the parameter values (for evaluation) into a model built
/// from the checkpoint's configuration.
template <class Model>
void load_model_parameters(std::string_view bytes, Model& model) {
  const Json header = read_checkpoint_header(bytes);
  detail::restore_parameters(bytes, header, model);
}

/// Restores parameters and trainer state saved by save_checkpoint into a model
/// built from the same configuration.
template <class Model, class Sample>
void load_checkpoint(std::string_view bytes, Model& model, Trainer<Model, Sample>& trainer) {
  const Json header = read_checkpoint_header(bytes);
  auto r = detail::restore_parameters(bytes, header, model);
  auto& st = trainer.state();
  st.optimizer = {};
  st.optimizer.step = header.at("optimizer_step").get<std::uint64_t>();
  if (header.at("adam_moments").get<bool>()) {
    const auto params = model.params().trainable();
    st.optimizer.m.resize(params.size());
    st.optimizer.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) st.optimizer.m[i].resize(params[i].numel());
    for (std::size_t i = 0; i < params.size(); ++i) st.optimizer.v[i].resize(params[i].numel());
    for (auto& m : st.optimizer.m) r.f64s(m, "adam moments");
    for (auto& v : st.optimizer.v) r.f64s(v, "adam moments");
  }
  if (!r.at_end()) throw FormatError("checkpoint: trailing bytes after payload");
  st.step = header.at("step").get<std::uint64_t>();
  st.epoch = header.at("epoch").get<std::uint64_t>();
  st.cursor = header.at("cursor").get<std::uint64_t>();
  st.permutation = header.at("permutation").get<std::vector<std::uint64_t>>();
  std::istringstream rng(header.at("rng").get<std::string>());
  rng >> st.rng;
  if (!rng) throw FormatError("checkpoint: malformed RNG state");
  st.history = history_from_json(header.at("history"));
}

}  // namespace depthbench::train
