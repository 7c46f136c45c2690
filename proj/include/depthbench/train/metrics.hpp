#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "depthbench/core/error.hpp"

namespace depthbench::train {

/// Box-plot statistics of a sample.
struct Aggregates {
  double mean = 0, median = 0, q25 = 0, q75 = 0, min = 0, max = 0;
};

/// Linear-interpolation quantile of sorted data (position p * (n - 1)).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw ConfigError("quantile of an empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline Aggregates aggregate(const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("aggregate of an empty sample");
  std::vector<double> s = values;
  std::sort(s.begin(), s.end());
  Aggregates a;
  double sum = 0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  a.median = quantile_sorted(s, 0.5);
  a.q25 = quantile_sorted(s, 0.25);
  a.q75 = quantile_sorted(s, 0.75);
  a.min = s.front();
  a.max = s.back();
  return a;
}

struct MetricSeries {
  std::string name;
  std::vector<double> per_sample;
  Aggregates stats;
};

struct MetricsReport {
  std::vector<MetricSeries> metrics;

  void add(std::string name, std::vector<double> per_sample) {
    Aggregates a = aggregate(per_sample);
    metrics.push_back({std::move(name), std::move(per_sample), a});
  }

  const MetricSeries& get(const std::string& name) const {
    for (const auto& m : metrics)
      if (m.name == name) return m;
    throw ConfigError("metrics report has no series '" + name + "'");
  }

  bool has(const std::string& name) const {
    return std::any_of(metrics.begin(), metrics.end(), [&](const MetricSeries& m) { return m.name == name; });
  }
};

}  // namespace depthbench::train
