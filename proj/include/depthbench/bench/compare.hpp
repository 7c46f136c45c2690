#pragma once

// Side-by-side comparison of experiment reports of one task: one row per
// model with its size, the size reduction against the largest model, and the
// box-plot statistics of the primary metric recomputed from the per-sample
// values. Rows are sorted by trainable parameter count (ties by id, then
// variant), so the table does not depend on the order of the inputs.

#include <algorithm>
#include <string>
#include <vector>

#include "depthbench/bench/report.hpp"

namespace depthbench::bench {

struct ComparisonRow {
  std::string id;
  std::string variant;
  nn::ParamCounts params;
  double reduction = 0;  // 1 - trainable / largest trainable
  std::size_t samples = 0;
  train::Aggregates stats;
  std::optional<PublishedReference> published;
};

struct Comparison {
  TaskKind task = TaskKind::mono;
  std::string metric;
  std::vector<ComparisonRow> rows;
};

inline Comparison compare_models(const std::vector<ExperimentReport>& reports) {
  if (reports.size() < 2) throw ConfigError("compare_models: need at least two reports");
  Comparison c;
  c.task = reports.front().task;
  c.metric = reports.front().primary_metric;
  std::uint64_t largest = 0;
  for (const auto& r : reports) {
    if (r.task != c.task) throw ConfigError("compare_models: cannot mix mono and stereo reports");
    largest = std::max(largest, r.params.trainable);
  }
  for (const auto& r : reports) {
    const auto& series = r.metrics.get(c.metric);
    ComparisonRow row{r.id, r.variant, r.params, 0, series.per_sample.size(), train::aggregate(series.per_sample),
                      r.published};
    row.reduction = largest ? 1.0 - static_cast<double>(r.params.trainable) / static_cast<double>(largest) : 0.0;
    c.rows.push_back(std::move(row));
  }
  std::sort(c.rows.begin(), c.rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.params.trainable != b.params.trainable) return a.params.trainable < b.params.trainable;
    if (a.id != b.id) return a.id < b.id;
    return a.variant < b.variant;
  });
  return c;
}

inline std::string comparison_csv(const Comparison& c) {
  std::string out =
      "id,variant,trainable_parameters,non_trainable_parameters,total_parameters,reduction,samples,metric,mean,median,"
      "q25,q75,min,max,published_parameters,published_metric\n";
  for (const auto& r : c.rows) {
    out += r.id + "," + r.variant + "," + std::to_string(r.params.trainable) + "," +
           std::to_string(r.params.non_trainable) + "," + std::to_string(r.params.total) + "," + fmt9(r.reduction) +
           "," + std::to_string(r.samples) + "," + c.metric + "," + fmt9(r.stats.mean) + "," + fmt9(r.stats.median) +
           "," + fmt9(r.stats.q25) + "," + fmt9(r.stats.q75) + "," + fmt9(r.stats.min) + "," + fmt9(r.stats.max) + ",";
    if (r.published) out += std::to_string(r.published->parameters) + "," + fmt9(r.published->metric);
    else out += ",";
    out += "\n";
  }
  return out;
}

inline Json comparison_json(const Comparison& c) {
  Json rows = Json::array();
  for (const auto& r : c.rows) {
    Json row{{"id", r.id},
             {"variant", r.variant},
             {"parameters", {{"trainable", r.params.trainable}, {"non_trainable", r.params.non_trainable}, {"total", r.params.total}}},
             {"reduction", sig9(r.reduction)},
             {"samples", r.samples},
             {"aggregates", detail::aggregates_json(r.stats)}};
    row["published_reference"] =
        r.published ? Json{{"parameters", r.published->parameters}, {"metric", r.published->metric}} : Json(nullptr);
    rows.push_back(std::move(row));
  }
  return {{"schema_version", kReportSchemaVersion}, {"task", data::to_string(c.task)}, {"metric", c.metric}, {"rows", rows}};
}

/// Fixed-width text table for terminals.
inline std::string comparison_table(const Comparison& c) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %-12s %10s %9s %10s %10s %10s %10s\n", "id", "variant", "params", "reduct.",
                c.metric == "ssim" ? "ssim" : "3px", "median", "q25", "q75");
  out += buf;
  for (const auto& r : c.rows) {
    std::snprintf(buf, sizeof buf, "%-22s %-12s %10llu %8.2f%% %10.4f %10.4f %10.4f %10.4f\n", r.id.c_str(),
                  r.variant.c_str(), static_cast<unsigned long long>(r.params.trainable), 100.0 * r.reduction,
                  r.stats.mean, r.stats.median, r.stats.q25, r.stats.q75);
    out += buf;
  }
  return out;
}

}  // namespace depthbench::bench
