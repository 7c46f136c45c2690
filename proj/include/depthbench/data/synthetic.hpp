#pragma once

// Procedural scenes with exact ground truth. Every sample is a pure function
// of (seed, index, size), so shards can be generated independently.

#include <algorithm>
#include <array>
#include <random>
#include <vector>

#include "depthbench/core/random.hpp"
#include "depthbench/core/tensor.hpp"

namespace depthbench::data {

struct StereoSample {
  Tensor left;       // 3 x H x W in [0, 1]
  Tensor right;      // 3 x H x W in [0, 1]
  Tensor disparity;  // 1 x H x W, left-view disparity in pixels
  Tensor mask;       // 1 x H x W, 1 where the ground truth is valid
};

struct MonoSample {
  Tensor rgb;    // 3 x H x W in [0, 1]
  Tensor depth;  // 1 x H x W, normalized to [0, 1]
  Tensor mask;   // 1 x H x W
};

/// Metric range of generated mono scenes before normalization.
inline constexpr double kSyntheticDepthMin = 1.0;
inline constexpr double kSyntheticDepthMax = 10.0;

namespace detail {

// 3 x H x U texture: base colour plus fine (blurred per-pixel) and coarse
// (4-pixel cell) noise, clipped to [0, 1].
inline std::vector<double> make_texture(std::mt19937_64& rng, std::size_t H, std::size_t U) {
  std::vector<double> tex(3 * H * U);
  const std::size_t cells_y = H / 4 + 1, cells_x = U / 4 + 1;
  for (std::size_t c = 0; c < 3; ++c) {
    const double base = uniform_real(rng, 0.25, 0.75);
    std::vector<double> fine(H * U), coarse(cells_y * cells_x);
    for (auto& v : fine) v = unit_uniform(rng) - 0.5;
    for (auto& v : coarse) v = unit_uniform(rng) - 0.5;
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t u = 0; u < U; ++u) {
        double s = 0, n = 0;
        for (std::size_t yy = y > 0 ? y - 1 : 0; yy <= std::min(H - 1, y + 1); ++yy)
          for (std::size_t uu = u > 0 ? u - 1 : 0; uu <= std::min(U - 1, u + 1); ++uu) {
            s += fine[yy * U + uu];
            n += 1;
          }
        const double v = base + 0.6 * s / n + 0.3 * coarse[(y / 4) * cells_x + u / 4];
        tex[(c * H + y) * U + u] = std::clamp(v, 0.0, 1.0);
      }
  }
  return tex;
}

}  // namespace detail

/// One layered stereo scene. Layer 0 is a background plane at a small
/// disparity; 3-8 rectangles at larger integer disparities are painted
/// back-to-front. Each layer owns a texture indexed by its surface coordinate
/// u, seen at u = x in the left view and at u = x_r + d in the right view, so
/// left(y, x) == right(y, x - d) exactly wherever the same layer is visible
/// in both views; the mask marks exactly those pixels.
inline StereoSample synthetic_stereo_sample(std::uint64_t seed, std::uint64_t index, std::size_t H, std::size_t W,
                                            std::size_t max_disp) {
  if (H == 0 || W == 0) throw ConfigError("synthetic stereo: image extents must be positive");
  if (4 * max_disp >= W)
    throw ConfigError("synthetic stereo: max_disp " + std::to_string(max_disp) + " must be below width/4");
  std::mt19937_64 rng(mix_seed(seed, index));

  struct Layer {
    std::int64_t x0 = 0, y0 = 0, w = 0, h = 0;
    std::int64_t d = 0;
    std::vector<double> tex;
  };
  const std::size_t U = W + max_disp;
  std::vector<Layer> layers;
  Layer bg;
  bg.d = uniform_int(rng, 0, std::min<std::int64_t>(2, static_cast<std::int64_t>(max_disp)));
  bg.x0 = -static_cast<std::int64_t>(max_disp) - 1;
  bg.w = static_cast<std::int64_t>(W + 2 * max_disp + 2);
  bg.h = static_cast<std::int64_t>(H);
  bg.tex = detail::make_texture(rng, H, U);
  layers.push_back(std::move(bg));

  const auto n_rects = uniform_int(rng, 3, 8);
  const auto iw = static_cast<std::int64_t>(W), ih = static_cast<std::int64_t>(H);
  for (std::int64_t r = 0; r < n_rects; ++r) {
    Layer l;
    l.w = uniform_int(rng, std::max<std::int64_t>(2, iw / 8), std::max<std::int64_t>(2, iw / 3));
    l.h = uniform_int(rng, std::max<std::int64_t>(2, ih / 6), std::max<std::int64_t>(2, ih / 2));
    l.x0 = uniform_int(rng, -l.w / 2, iw - l.w / 2);
    l.y0 = uniform_int(rng, -l.h / 4, ih - l.h / 2);
    l.d = uniform_int(rng, std::min<std::int64_t>(layers[0].d + 1, static_cast<std::int64_t>(max_disp)),
                      static_cast<std::int64_t>(max_disp));
    l.tex = detail::make_texture(rng, H, U);
    layers.push_back(std::move(l));
  }
  // Back-to-front: nearer (larger disparity) layers are painted last.
  std::stable_sort(layers.begin() + 1, layers.end(), [](const Layer& a, const Layer& b) { return a.d < b.d; });

  // Topmost layer covering left-view column x (right view: x_r + d inside the rectangle).
  auto top_layer = [&](std::int64_t y, std::int64_t x, bool right_view) {
    for (std::size_t k = layers.size(); k-- > 0;) {
      const auto& l = layers[k];
      const std::int64_t u = right_view ? x + l.d : x;
      if (y >= l.y0 && y < l.y0 + l.h && u >= l.x0 && u < l.x0 + l.w) return k;
    }
    return std::size_t{0};
  };

  std::vector<double> left(3 * H * W), right(3 * H * W), disp(H * W), mask(H * W);
  for (std::int64_t y = 0; y < ih; ++y)
    for (std::int64_t x = 0; x < iw; ++x) {
      const std::size_t p = static_cast<std::size_t>(y * iw + x);
      const std::size_t kl = top_layer(y, x, false);
      const std::size_t kr = top_layer(y, x, true);
      const auto& ll = layers[kl];
      const auto& lr = layers[kr];
      for (std::size_t c = 0; c < 3; ++c) {
        left[c * H * W + p] = ll.tex[(c * H + static_cast<std::size_t>(y)) * U + static_cast<std::size_t>(x)];
        right[c * H * W + p] = lr.tex[(c * H + static_cast<std::size_t>(y)) * U + static_cast<std::size_t>(x + lr.d)];
      }
      disp[p] = static_cast<double>(ll.d);
      const std::int64_t xr = x - ll.d;
      mask[p] = (xr >= 0 && top_layer(y, xr, true) == kl) ? 1.0 : 0.0;
    }
  return {Tensor::from({3, H, W}, std::move(left)), Tensor::from({3, H, W}, std::move(right)),
          Tensor::from({1, H, W}, std::move(disp)), Tensor::from({1, H, W}, std::move(mask))};
}

inline std::vector<StereoSample> gen_synthetic_stereo(std::uint64_t seed, std::size_t count, std::size_t H = 48,
                                                      std::size_t W = 96, std::size_t max_disp = 20) {
  std::vector<StereoSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(synthetic_stereo_sample(seed, i, H, W, max_disp));
  return out;
}

/// One mono scene: a receding floor/wall gradient (far at the top) with 2-6
/// rectangles at random depths in front. Shading falls off with depth, so
/// brightness tracks inverse depth; albedo texture and tint add variation.
/// Returns the metric depth in [kSyntheticDepthMin, kSyntheticDepthMax].
inline MonoSample synthetic_mono_sample_metric(std::uint64_t seed, std::uint64_t index, std::size_t H, std::size_t W) {
  if (H == 0 || W == 0) throw ConfigError("synthetic mono: image extents must be positive");
  std::mt19937_64 rng(mix_seed(seed ^ 0x6d6f6e6fULL, index));
  struct Rect {
    std::int64_t x0, y0, w, h;
    double z;
    std::array<double, 3> tint;
  };
  const auto iw = static_cast<std::int64_t>(W), ih = static_cast<std::int64_t>(H);
  const double far = uniform_real(rng, 8.0, kSyntheticDepthMax), near = uniform_real(rng, 3.0, 5.0);
  std::array<double, 3> bg_tint{};
  for (auto& t : bg_tint) t = uniform_real(rng, 0.75, 1.0);
  std::vector<Rect> rects(static_cast<std::size_t>(uniform_int(rng, 2, 6)));
  for (auto& r : rects) {
    r.w = uniform_int(rng, std::max<std::int64_t>(2, iw / 6), std::max<std::int64_t>(2, iw / 2));
    r.h = uniform_int(rng, std::max<std::int64_t>(2, ih / 6), std::max<std::int64_t>(2, ih / 2));
    r.x0 = uniform_int(rng, -r.w / 4, iw - r.w / 2);
    r.y0 = uniform_int(rng, -r.h / 4, ih - r.h / 2);
    r.z = uniform_real(rng, 1.5, 7.0);
    for (auto& t : r.tint) t = uniform_real(rng, 0.75, 1.0);
  }
  // Far to near so nearer rectangles overwrite.
  std::stable_sort(rects.begin(), rects.end(), [](const Rect& a, const Rect& b) { return a.z > b.z; });

  std::vector<double> albedo(H * W);
  for (auto& a : albedo) a = uniform_real(rng, 0.85, 1.0);
  std::vector<double> rgb(3 * H * W), depth(H * W);
  for (std::int64_t y = 0; y < ih; ++y)
    for (std::int64_t x = 0; x < iw; ++x) {
      const auto p = static_cast<std::size_t>(y * iw + x);
      double z = far + (near - far) * (static_cast<double>(y) + 0.5) / static_cast<double>(H);
      const std::array<double, 3>* tint = &bg_tint;
      for (const auto& r : rects)
        if (y >= r.y0 && y < r.y0 + r.h && x >= r.x0 && x < r.x0 + r.w) {
          z = r.z;
          tint = &r.tint;
        }
      depth[p] = z;
      const double shade = 1.05 - z / kSyntheticDepthMax;
      for (std::size_t c = 0; c < 3; ++c) rgb[c * H * W + p] = std::clamp(shade * albedo[p] * (*tint)[c], 0.0, 1.0);
    }
  return {Tensor::from({3, H, W}, std::move(rgb)), Tensor::from({1, H, W}, std::move(depth)),
          Tensor::full({1, H, W}, 1.0)};
}

/// Mono scene with depth normalized to [0, 1] over the generator's metric range.
inline MonoSample synthetic_mono_sample(std::uint64_t seed, std::uint64_t index, std::size_t H, std::size_t W) {
  MonoSample s = synthetic_mono_sample_metric(seed, index, H, W);
  std::vector<double> d(s.depth.numel());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = (s.depth[i] - kSyntheticDepthMin) / (kSyntheticDepthMax - kSyntheticDepthMin);
  s.depth = Tensor::from(s.depth.shape(), std::move(d));
  return s;
}

inline std::vector<MonoSample> gen_synthetic_mono(std::uint64_t seed, std::size_t count, std::size_t H = 64,
                                                  std::size_t W = 64) {
  std::vector<MonoSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(synthetic_mono_sample(seed, i, H, W));
  return out;
}

}  // namespace depthbench::data
