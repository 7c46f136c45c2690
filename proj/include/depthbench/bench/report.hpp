#pragma once

// Serialized experiment report. JSON objects keep their keys sorted, so field
// order is stable; every floating-point number is written with 9 significant
// digits, in JSON and CSV alike.

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "depthbench/bench/variants.hpp"
#include "depthbench/train/metrics.hpp"
#include "depthbench/train/trainer.hpp"

namespace depthbench::bench {

using Json = nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;

/// Rounds to 9 significant digits (the precision of every emitted number).
inline double sig9(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

inline std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Conv MACs of one forward pass at the reported input size.
struct StageMacs {
  std::string stage;
  std::uint64_t cumulative = 0;   // everything up to and including this stage
  std::uint64_t incremental = 0;  // this stage alone
};

struct TrainingSummary {
  std::size_t steps = 0;
  double seconds = 0;
  std::vector<std::string> part_names;
  double initial_loss = 0;               // first step
  double final_loss = 0;                 // mean of the last min(20, steps) steps
  std::vector<double> initial_parts;     // per part, first step
  std::vector<double> final_parts;       // per part, tail mean
  std::vector<std::size_t> val_step;     // per-epoch validation
  std::vector<double> val_loss;
  std::vector<double> val_metric;
};

inline TrainingSummary summarize(const train::TrainHistory& h, double seconds) {
  TrainingSummary s;
  s.steps = h.step_loss.size();
  s.seconds = seconds;
  s.part_names = h.part_names;
  s.val_step = h.val_step;
  s.val_loss = h.val_loss;
  s.val_metric = h.val_metric;
  if (s.steps == 0) return s;
  const std::size_t tail = std::min<std::size_t>(20, s.steps);
  s.initial_loss = h.step_loss.front();
  s.initial_parts = h.part_loss.front();
  s.final_parts.assign(h.part_names.size(), 0.0);
  for (std::size_t i = s.steps - tail; i < s.steps; ++i) {
    s.final_loss += h.step_loss[i] / static_cast<double>(tail);
    for (std::size_t k = 0; k < s.final_parts.size(); ++k)
      s.final_parts[k] += h.part_loss[i][k] / static_cast<double>(tail);
  }
  return s;
}

struct ExperimentReport {
  int schema_version = kReportSchemaVersion;
  std::string id;
  TaskKind task = TaskKind::mono;
  std::string variant;
  Json config;  // resolved model / data / training configuration
  nn::ParamCounts params;
  std::size_t mac_height = 0, mac_width = 0;
  std::vector<StageMacs> macs;
  std::string primary_metric;
  train::MetricsReport metrics;                      // held-out per-sample values
  std::map<std::string, train::Aggregates> baselines;  // primary-metric aggregates of reference predictors
  TrainingSummary training;
  std::optional<PublishedReference> published;
  std::string history_csv;  // file name, relative to the report
  std::string samples_csv;

  const train::MetricSeries& primary() const { return metrics.get(primary_metric); }
};

namespace detail {

inline Json aggregates_json(const train::Aggregates& a) {
  return {{"mean", sig9(a.mean)}, {"median", sig9(a.median)}, {"q25", sig9(a.q25)},
          {"q75", sig9(a.q75)},   {"min", sig9(a.min)},       {"max", sig9(a.max)}};
}

inline train::Aggregates aggregates_from_json(const Json& j) {
  return {j.at("mean").get<double>(), j.at("median").get<double>(), j.at("q25").get<double>(),
          j.at("q75").get<double>(),  j.at("min").get<double>(),    j.at("max").get<double>()};
}

inline std::vector<double> sig9(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = bench::sig9(v[i]);
  return out;
}

// Rounds every float inside a JSON value in place.
inline void round_floats(Json& j) {
  if (j.is_number_float())
    j = bench::sig9(j.get<double>());
  else if (j.is_structured())
    for (auto& e : j) round_floats(e);
}

}  // namespace detail

inline Json to_json(const ExperimentReport& r) {
  Json metrics = Json::object();
  for (const auto& m : r.metrics.metrics)
    metrics[m.name] = {{"per_sample", detail::sig9(m.per_sample)}, {"aggregates", detail::aggregates_json(m.stats)}};
  Json baselines = Json::object();
  for (const auto& [name, a] : r.baselines) baselines[name] = detail::aggregates_json(a);
  Json macs = Json::array();
  for (const auto& m : r.macs)
    macs.push_back({{"stage", m.stage}, {"cumulative", m.cumulative}, {"incremental", m.incremental}});
  const auto& t = r.training;
  Json config = r.config;
  detail::round_floats(config);
  Json j{{"schema_version", r.schema_version},
         {"experiment_id", r.id},
         {"task", data::to_string(r.task)},
         {"variant", r.variant},
         {"config", config},
         {"parameters", {{"trainable", r.params.trainable}, {"non_trainable", r.params.non_trainable}, {"total", r.params.total}}},
         {"macs", {{"input_height", r.mac_height}, {"input_width", r.mac_width}, {"per_stage", macs}}},
         {"primary_metric", r.primary_metric},
         {"metrics", metrics},
         {"baselines", baselines},
         {"training",
          {{"steps", t.steps},
           {"seconds", sig9(t.seconds)},
           {"part_names", t.part_names},
           {"initial_loss", sig9(t.initial_loss)},
           {"final_loss", sig9(t.final_loss)},
           {"initial_parts", detail::sig9(t.initial_parts)},
           {"final_parts", detail::sig9(t.final_parts)},
           {"validation", {{"step", t.val_step}, {"loss", detail::sig9(t.val_loss)}, {"metric", detail::sig9(t.val_metric)}}},
           {"history_csv", r.history_csv}}},
         {"samples_csv", r.samples_csv}};
  if (r.published)
    j["published_reference"] = {{"parameters", r.published->parameters},
                                {"metric_name", r.published->metric_name},
                                {"metric", r.published->metric},
                                {"note", "published after full-dataset training; reference annotation only, not "
                                         "reproduced at desk scale"}};
  else
    j["published_reference"] = nullptr;
  return j;
}

inline ExperimentReport report_from_json(const Json& j) {
  ExperimentReport r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion)
      throw FormatError("report: unsupported schema_version " + std::to_string(r.schema_version));
    r.id = j.at("experiment_id").get<std::string>();
    r.task = data::parse_task_kind(j.at("task").get<std::string>());
    r.variant = j.at("variant").get<std::string>();
    r.config = j.at("config");
    const auto& p = j.at("parameters");
    r.params = {p.at("trainable").get<std::uint64_t>(), p.at("non_trainable").get<std::uint64_t>(),
                p.at("total").get<std::uint64_t>()};
    const auto& macs = j.at("macs");
    r.mac_height = macs.at("input_height").get<std::size_t>();
    r.mac_width = macs.at("input_width").get<std::size_t>();
    for (const auto& m : macs.at("per_stage"))
      r.macs.push_back({m.at("stage").get<std::string>(), m.at("cumulative").get<std::uint64_t>(),
                        m.at("incremental").get<std::uint64_t>()});
    r.primary_metric = j.at("primary_metric").get<std::string>();
    for (const auto& [name, m] : j.at("metrics").items()) {
      r.metrics.add(name, m.at("per_sample").get<std::vector<double>>());
      r.metrics.metrics.back().stats = detail::aggregates_from_json(m.at("aggregates"));
    }
    for (const auto& [name, a] : j.at("baselines").items()) r.baselines[name] = detail::aggregates_from_json(a);
    const auto& t = j.at("training");
    r.training.steps = t.at("steps").get<std::size_t>();
    r.training.seconds = t.at("seconds").get<double>();
    r.training.part_names = t.at("part_names").get<std::vector<std::string>>();
    r.training.initial_loss = t.at("initial_loss").get<double>();
    r.training.final_loss = t.at("final_loss").get<double>();
    r.training.initial_parts = t.at("initial_parts").get<std::vector<double>>();
    r.training.final_parts = t.at("final_parts").get<std::vector<double>>();
    const auto& v = t.at("validation");
    r.training.val_step = v.at("step").get<std::vector<std::size_t>>();
    r.training.val_loss = v.at("loss").get<std::vector<double>>();
    r.training.val_metric = v.at("metric").get<std::vector<double>>();
    r.history_csv = t.at("history_csv").get<std::string>();
    r.samples_csv = j.at("samples_csv").get<std::string>();
    const auto& pub = j.at("published_reference");
    if (!pub.is_null()) {
      const auto metric_name = pub.at("metric_name").get<std::string>();
      r.published = PublishedReference{pub.at("parameters").get<std::uint64_t>(), pub.at("metric").get<double>(),
                                       metric_name == "ssim" ? "ssim" : "three_pixel_error"};
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
  return r;
}

inline ExperimentReport parse_report(std::string_view text) {
  try {
    return report_from_json(Json::parse(text));
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

/// Per-sample CSV: "sample,<metric>,..." with one row per held-out sample.
inline std::string samples_csv(const ExperimentReport& r) {
  std::string out = "sample";
  for (const auto& m : r.metrics.metrics) out += "," + m.name;
  out += "\n";
  const std::size_t n = r.metrics.metrics.empty() ? 0 : r.metrics.metrics.front().per_sample.size();
  for (std::size_t i = 0; i < n; ++i) {
    out += std::to_string(i);
    for (const auto& m : r.metrics.metrics) out += "," + fmt9(m.per_sample.at(i));
    out += "\n";
  }
  return out;
}

/// Training-curve CSV: "step,epoch,loss,<part>,..." with one row per optimizer step.
inline std::string history_csv(const train::TrainHistory& h) {
  std::string out = "step,epoch,loss";
  for (const auto& p : h.part_names) out += "," + p;
  out += "\n";
  std::size_t epoch = 0;
  for (std::size_t s = 0; s < h.step_loss.size(); ++s) {
    while (epoch < h.epoch_end_step.size() && h.epoch_end_step[epoch] <= s) ++epoch;
    out += std::to_string(s + 1) + "," + std::to_string(epoch) + "," + fmt9(h.step_loss[s]);
    for (double v : h.part_loss[s]) out += "," + fmt9(v);
    out += "\n";
  }
  return out;
}

/// Report bytes in `format` ("json" or "csv").
inline std::string emit_report(const ExperimentReport& r, const std::string& format) {
  if (format == "json") return to_json(r).dump(2) + "\n";
  if (format == "csv") return samples_csv(r);
  throw ConfigError("unknown report format '" + format + "' (expected json or csv)");
}

}  // namespace depthbench::bench
