#pragma once

// The experiment matrix: named model variants of both tasks, the values
// published for them after full-dataset training (carried in reports as
// reference annotations only), and the mono architecture search that picks
// the design matching the published parameter counts.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "depthbench/data/dataset.hpp"
#include "depthbench/mono/model.hpp"
#include "depthbench/nn/params.hpp"
#include "depthbench/stereo/anynet.hpp"
#include "depthbench/train/checkpoint.hpp"

namespace depthbench::bench {

using data::TaskKind;

/// Published values for one variant (trainable parameters and test metric).
struct PublishedReference {
  std::uint64_t parameters = 0;
  double metric = 0;
  const char* metric_name = "";
};

/// Mono variant: "<structure>" or "<structure>-<activation>", e.g. "3-1-3" or "3-1-3-swish".
struct MonoVariant {
  std::string structure = "3-1-3";
  std::string activation = "leaky_relu";

  std::string name() const { return activation == "leaky_relu" ? structure : structure + "-" + activation; }
};

inline MonoVariant parse_mono_variant(const std::string& text) {
  MonoVariant v;
  if (text.size() < 5) throw ConfigError("unknown mono variant '" + text + "' (expected 4-1-4 or 3-1-3[-swish])");
  v.structure = text.substr(0, 5);
  if (v.structure != "4-1-4" && v.structure != "3-1-3")
    throw ConfigError("unknown mono variant '" + text + "' (expected 4-1-4 or 3-1-3[-swish])");
  if (text.size() > 5) {
    if (text[5] != '-') throw ConfigError("unknown mono variant '" + text + "'");
    v.activation = text.substr(6);
    train::parse_activation(v.activation);
  }
  return v;
}

inline mono::MonoModelConfig mono_config(const MonoVariant& v, double alpha = 0.2) {
  const Activation act = train::parse_activation(v.activation, alpha);
  return v.structure == "4-1-4" ? mono::MonoModelConfig::variant_414(act) : mono::MonoModelConfig::variant_313(act);
}

/// Stereo variant: SPN width "none", "1", "2", "4" or "8".
inline std::size_t parse_spn_variant(const std::string& text) {
  if (text == "none" || text == "0") return 0;
  for (std::size_t c : {1, 2, 4, 8})
    if (text == std::to_string(c)) return c;
  throw ConfigError("unknown stereo variant '" + text + "' (expected none, 1, 2, 4 or 8)");
}

inline std::string spn_variant_name(std::size_t spn) { return spn == 0 ? "none" : std::to_string(spn); }

/// The full matrix: three mono rows and five stereo rows.
inline std::vector<std::string> mono_matrix() { return {"4-1-4", "3-1-3", "3-1-3-swish"}; }
inline std::vector<std::string> stereo_matrix() { return {"none", "1", "2", "4", "8"}; }

inline std::optional<PublishedReference> published_mono(const MonoVariant& v) {
  if (v.structure == "4-1-4" && v.activation == "leaky_relu") return PublishedReference{1966467, 0.9895, "ssim"};
  if (v.structure == "3-1-3" && v.activation == "leaky_relu") return PublishedReference{489091, 0.9903, "ssim"};
  if (v.structure == "3-1-3" && v.activation == "swish") return PublishedReference{489091, 0.9871, "ssim"};
  return std::nullopt;
}

inline std::optional<PublishedReference> published_stereo(std::size_t spn) {
  switch (spn) {
    case 0: return PublishedReference{34629, 0.2994, "three_pixel_error"};
    case 1: return PublishedReference{34827, 0.3048, "three_pixel_error"};
    case 2: return PublishedReference{35277, 0.3193, "three_pixel_error"};
    case 4: return PublishedReference{36933, 0.3264, "three_pixel_error"};
    case 8: return PublishedReference{43269, 0.3178, "three_pixel_error"};
    default: return std::nullopt;
  }
}

// ------------------------------------------------------ architecture search

/// One point of the mono design space scored against the published counts.
struct SearchCandidate {
  bool skip_connections = true;
  std::size_t head_kernel = 1;
  bool count_running_stats = false;  // score total (true) or trainable-only (false) counts
  std::uint64_t large = 0;           // 4-1-4 count
  std::uint64_t small = 0;           // 3-1-3 count
  double error = 0;                  // |large - published| + |small - published|
};

/// Enumerates {skip on/off} x {1x1, 3x3 head} x {trainable, total}, best first.
inline std::vector<SearchCandidate> mono_architecture_search() {
  const auto big_ref = published_mono({"4-1-4", "leaky_relu"})->parameters;
  const auto small_ref = published_mono({"3-1-3", "leaky_relu"})->parameters;
  std::vector<SearchCandidate> out;
  for (bool skip : {true, false})
    for (std::size_t head : {1, 3}) {
      auto big = mono::MonoModelConfig::variant_414(), small = mono::MonoModelConfig::variant_313();
      big.use_skip_connections = small.use_skip_connections = skip;
      big.head_kernel = small.head_kernel = head;
      const auto cb = nn::count_parameters(mono::MonoDepthModel(big).params());
      const auto cs = nn::count_parameters(mono::MonoDepthModel(small).params());
      for (bool total : {false, true}) {
        SearchCandidate c{skip, head, total, total ? cb.total : cb.trainable, total ? cs.total : cs.trainable, 0};
        c.error = std::abs(static_cast<double>(c.large) - static_cast<double>(big_ref)) +
                  std::abs(static_cast<double>(c.small) - static_cast<double>(small_ref));
        out.push_back(c);
      }
    }
  std::stable_sort(out.begin(), out.end(),
                   [](const SearchCandidate& a, const SearchCandidate& b) { return a.error < b.error; });
  return out;
}

}  // namespace depthbench::bench
