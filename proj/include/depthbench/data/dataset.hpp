#pragma once

// Dataset indices, deterministic splits, the text manifest, and sample loading.
//
// Manifest format (one item per line, '#' starts a comment):
//   kind stereo|mono
//   depth_range <min> <max>        (mono only; metric range mapped to [0, 1])
//   synthetic <seed> <index> <h> <w> [max_disp]
//   files <path> <path> <path> [<mask path>]
// File descriptors list left/right/disparity(.pfm) for stereo and rgb/depth(.pfm)
// for mono, relative to the manifest's directory. Loading applies geometric
// changes (resizing) first and depth normalization last.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "depthbench/core/ops.hpp"
#include "depthbench/data/files.hpp"
#include "depthbench/data/pfm.hpp"
#include "depthbench/data/pnm.hpp"
#include "depthbench/data/synthetic.hpp"
#include "depthbench/data/transform.hpp"

namespace depthbench::data {

enum class TaskKind { mono, stereo };

inline std::string to_string(TaskKind k) { return k == TaskKind::mono ? "mono" : "stereo"; }

inline TaskKind parse_task_kind(const std::string& s) {
  if (s == "mono") return TaskKind::mono;
  if (s == "stereo") return TaskKind::stereo;
  throw ConfigError("unknown task kind '" + s + "' (expected mono or stereo)");
}

struct DatasetIndex {
  TaskKind kind = TaskKind::stereo;
  std::vector<std::string> descriptors;
  double depth_min = kSyntheticDepthMin;
  double depth_max = kSyntheticDepthMax;

  std::size_t size() const { return descriptors.size(); }

  void validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& d : descriptors)
      if (!seen.insert(d).second) throw ConfigError("dataset: duplicate descriptor '" + d + "'");
    if (!(depth_max > depth_min)) throw ConfigError("dataset: depth_max must exceed depth_min");
  }

  DatasetIndex subset(const std::vector<std::size_t>& order) const {
    DatasetIndex out{kind, {}, depth_min, depth_max};
    for (auto i : order) out.descriptors.push_back(descriptors.at(i));
    return out;
  }
};

/// Descriptors "synthetic <seed> <i> <h> <w> [max_disp]" for i = first .. first+count-1.
inline DatasetIndex synthetic_index(TaskKind kind, std::uint64_t seed, std::size_t count, std::size_t h,
                                    std::size_t w, std::size_t max_disp = 20, std::size_t first = 0) {
  DatasetIndex idx;
  idx.kind = kind;
  for (std::size_t i = first; i < first + count; ++i) {
    std::string d = "synthetic " + std::to_string(seed) + " " + std::to_string(i) + " " + std::to_string(h) + " " +
                    std::to_string(w);
    if (kind == TaskKind::stereo) d += " " + std::to_string(max_disp);
    idx.descriptors.push_back(std::move(d));
  }
  return idx;
}

/// Seeded Fisher-Yates shuffle, then the first round(ratio * N) entries form
/// the training split. The training split is kept non-empty and the test split
/// too, so sizes are clamped to [1, N - 1].
inline std::pair<DatasetIndex, DatasetIndex> split_dataset(const DatasetIndex& index, double ratio,
                                                           std::uint64_t seed) {
  const std::size_t n = index.size();
  if (n < 2) throw ConfigError("split_dataset: need at least 2 samples, got " + std::to_string(n));
  if (!(ratio > 0 && ratio < 1)) throw ConfigError("split_dataset: ratio must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  shuffle(order, rng);
  auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  const std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {index.subset(train), index.subset(test)};
}

inline std::string write_manifest(const DatasetIndex& index) {
  std::ostringstream out;
  out << "# depthbench dataset manifest\n";
  out << "kind " << to_string(index.kind) << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "depth_range %.17g %.17g\n", index.depth_min, index.depth_max);
  out << buf;
  for (const auto& d : index.descriptors) out << d << "\n";
  return out.str();
}

inline DatasetIndex read_manifest(std::string_view text) {
  DatasetIndex idx;
  bool have_kind = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    line.erase(0, start);
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string head;
    fields >> head;
    if (head == "kind") {
      std::string k;
      fields >> k;
      idx.kind = parse_task_kind(k);
      have_kind = true;
    } else if (head == "depth_range") {
      if (!(fields >> idx.depth_min >> idx.depth_max))
        throw FormatError("manifest line " + std::to_string(line_no) + ": depth_range needs two numbers");
    } else if (head == "synthetic" || head == "files") {
      idx.descriptors.push_back(line);
    } else {
      throw FormatError("manifest line " + std::to_string(line_no) + ": unknown entry '" + head + "'");
    }
  }
  if (!have_kind) throw FormatError("manifest: missing 'kind' line");
  idx.validate();
  return idx;
}

struct LoadOptions {
  std::filesystem::path base_dir;  // resolves relative file descriptors
  std::size_t height = 0;          // 0 keeps the stored size
  std::size_t width = 0;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& descriptor) {
  std::istringstream in(descriptor);
  std::vector<std::string> out;
  for (std::string f; in >> f;) out.push_back(f);
  return out;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& descriptor) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("descriptor '" + descriptor + "': '" + s + "' is not an unsigned integer");
  return v;
}

inline Tensor load_image(const std::filesystem::path& p) { return read_pnm(read_file(p)); }

inline Tensor load_map(const std::filesystem::path& p) {
  Tensor t = to_tensor(read_pfm(read_file(p)));
  if (t.dim(0) != 1) throw FormatError("'" + p.string() + "' must be a single-channel PFM");
  return t;
}

inline Tensor load_mask(const std::filesystem::path& p) {
  Tensor m = load_image(p);
  if (m.dim(0) != 1) throw FormatError("mask '" + p.string() + "' must be a PGM");
  std::vector<double> v(m.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = m[i] >= 0.5 ? 1.0 : 0.0;
  return Tensor::from(m.shape(), std::move(v));
}

inline bool needs_resize(const Tensor& t, const LoadOptions& opt) {
  return opt.height && opt.width && (t.dim(1) != opt.height || t.dim(2) != opt.width);
}

}  // namespace detail

inline StereoSample load_stereo_sample(const std::string& descriptor, const LoadOptions& opt = {}) {
  const auto f = detail::split_fields(descriptor);
  StereoSample s;
  if (!f.empty() && f[0] == "synthetic") {
    if (f.size() != 6) throw FormatError("descriptor '" + descriptor + "': expected synthetic seed index h w max_disp");
    s = synthetic_stereo_sample(detail::parse_u64(f[1], descriptor), detail::parse_u64(f[2], descriptor),
                                detail::parse_u64(f[3], descriptor), detail::parse_u64(f[4], descriptor),
                                detail::parse_u64(f[5], descriptor));
  } else if (!f.empty() && f[0] == "files") {
    if (f.size() != 4 && f.size() != 5)
      throw FormatError("descriptor '" + descriptor + "': expected files left right disparity [mask]");
    s.left = detail::load_image(opt.base_dir / f[1]);
    s.right = detail::load_image(opt.base_dir / f[2]);
    s.disparity = detail::load_map(opt.base_dir / f[3]);
    s.mask = f.size() == 5 ? detail::load_mask(opt.base_dir / f[4]) : Tensor::full(s.disparity.shape(), 1.0);
    if (s.left.dim(0) != 3 || s.right.shape() != s.left.shape())
      throw FormatError("descriptor '" + descriptor + "': left/right must be matching PPM images");
  } else {
    throw FormatError("unrecognized descriptor '" + descriptor + "'");
  }
  if (detail::needs_resize(s.left, opt)) {
    s.left = resize_image(s.left, opt.height, opt.width);
    s.right = resize_image(s.right, opt.height, opt.width);
    s.disparity = resize_disparity(s.disparity, opt.height, opt.width);
    s.mask = resize_mask(s.mask, opt.height, opt.width);
  }
  return s;
}

inline MonoSample load_mono_sample(const std::string& descriptor, double depth_min, double depth_max,
                                   const LoadOptions& opt = {}) {
  const auto f = detail::split_fields(descriptor);
  MonoSample s;
  if (!f.empty() && f[0] == "synthetic") {
    if (f.size() != 5) throw FormatError("descriptor '" + descriptor + "': expected synthetic seed index h w");
    s = synthetic_mono_sample_metric(detail::parse_u64(f[1], descriptor), detail::parse_u64(f[2], descriptor),
                                     detail::parse_u64(f[3], descriptor), detail::parse_u64(f[4], descriptor));
  } else if (!f.empty() && f[0] == "files") {
    if (f.size() != 3 && f.size() != 4)
      throw FormatError("descriptor '" + descriptor + "': expected files rgb depth [mask]");
    s.rgb = detail::load_image(opt.base_dir / f[1]);
    s.depth = detail::load_map(opt.base_dir / f[2]);
    s.mask = f.size() == 4 ? detail::load_mask(opt.base_dir / f[3]) : Tensor::full(s.depth.shape(), 1.0);
    if (s.rgb.dim(0) != 3) throw FormatError("descriptor '" + descriptor + "': rgb must be a PPM image");
  } else {
    throw FormatError("unrecognized descriptor '" + descriptor + "'");
  }
  if (detail::needs_resize(s.rgb, opt)) {
    s.rgb = resize_image(s.rgb, opt.height, opt.width);
    s.depth = resize_image(s.depth, opt.height, opt.width);
    s.mask = resize_mask(s.mask, opt.height, opt.width);
  }
  s.depth = normalize_depth(s.depth, depth_min, depth_max);
  return s;
}

inline std::vector<StereoSample> load_stereo(const DatasetIndex& index, const LoadOptions& opt = {}) {
  if (index.kind != TaskKind::stereo) throw ConfigError("dataset is not a stereo dataset");
  std::vector<StereoSample> out;
  for (const auto& d : index.descriptors) out.push_back(load_stereo_sample(d, opt));
  return out;
}

inline std::vector<MonoSample> load_mono(const DatasetIndex& index, const LoadOptions& opt = {}) {
  if (index.kind != TaskKind::mono) throw ConfigError("dataset is not a mono dataset");
  std::vector<MonoSample> out;
  for (const auto& d : index.descriptors) out.push_back(load_mono_sample(d, index.depth_min, index.depth_max, opt));
  return out;
}

/// Stacks equally shaped C x H x W tensors into N x C x H x W.
inline Tensor stack(const std::vector<Tensor>& items) {
  if (items.empty()) throw ShapeError("stack: no tensors");
  std::vector<double> v;
  v.reserve(items.size() * items[0].numel());
  for (const auto& t : items) {
    if (t.shape() != items[0].shape()) throw ShapeError("stack: shape mismatch");
    v.insert(v.end(), t.values().begin(), t.values().end());
  }
  Shape shape{items.size()};
  shape.insert(shape.end(), items[0].shape().begin(), items[0].shape().end());
  return Tensor::from(std::move(shape), std::move(v));
}

}  // namespace depthbench::data
