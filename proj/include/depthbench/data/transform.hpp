#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "depthbench/core/ops.hpp"
#include "depthbench/core/resample.hpp"

namespace depthbench::data {

/// Bilinear resize of an image (or any map) without touching its values.
inline Tensor resize_image(const Tensor& image, std::size_t out_h, std::size_t out_w) {
  NoGradGuard no_grad;
  return resize_bilinear(image, out_h, out_w);
}

/// Bilinear resize of a disparity map; values are multiplied by out_w / in_w
/// because disparities are measured in horizontal pixels.
inline Tensor resize_disparity(const Tensor& disparity, std::size_t out_h, std::size_t out_w) {
  NoGradGuard no_grad;
  const double in_w = static_cast<double>(disparity.dim(disparity.rank() - 1));
  return scale(resize_bilinear(disparity, out_h, out_w), static_cast<double>(out_w) / in_w);
}

/// Nearest-neighbour resize of a 0/1 validity mask (align-corners-false centres).
inline Tensor resize_mask(const Tensor& mask, std::size_t out_h, std::size_t out_w) {
  if (mask.rank() < 2) throw ShapeError("resize_mask: expected at least 2 axes");
  if (out_h == 0 || out_w == 0) throw ShapeError("resize_mask: target extents must be positive");
  const std::size_t H = mask.dim(mask.rank() - 2), W = mask.dim(mask.rank() - 1), planes = mask.numel() / (H * W);
  Shape shape = mask.shape();
  shape[shape.size() - 2] = out_h;
  shape[shape.size() - 1] = out_w;
  std::vector<double> out(planes * out_h * out_w);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t x = 0; x < out_w; ++x) {
        const std::size_t sy = std::min(H - 1, (2 * y + 1) * H / (2 * out_h));
        const std::size_t sx = std::min(W - 1, (2 * x + 1) * W / (2 * out_w));
        out[(p * out_h + y) * out_w + x] = mask[(p * H + sy) * W + sx] != 0 ? 1.0 : 0.0;
      }
  return Tensor::from(std::move(shape), std::move(out));
}

/// Clip to [d_min, d_max], then map affinely onto [0, 1].
inline Tensor normalize_depth(const Tensor& depth, double d_min, double d_max) {
  if (!(d_max > d_min)) throw ConfigError("normalize_depth: d_max must exceed d_min");
  std::vector<double> out(depth.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (std::clamp(depth[i], d_min, d_max) - d_min) / (d_max - d_min);
  return Tensor::from(depth.shape(), std::move(out));
}

struct CameraIntrinsics {
  double fx = 1, fy = 1, cx = 0, cy = 0;

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) throw ConfigError("camera focal lengths must be positive");
  }
};

struct Point3 {
  double x, y, z;
};

/// Pinhole back-projection of every valid pixel of an H x W map (leading
/// singleton axes allowed); points are emitted in row-major pixel order.
inline std::vector<Point3> depth_to_pointcloud(const Tensor& depth, const CameraIntrinsics& k, const Tensor& mask) {
  k.validate();
  if (depth.rank() < 2 || depth.numel() != depth.dim(depth.rank() - 2) * depth.dim(depth.rank() - 1))
    throw ShapeError("depth_to_pointcloud: expected a single H x W map, got " + shape_str(depth.shape()));
  if (mask.numel() != depth.numel()) throw ShapeError("depth_to_pointcloud: mask size mismatch");
  const std::size_t H = depth.dim(depth.rank() - 2), W = depth.dim(depth.rank() - 1);
  std::vector<Point3> points;
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      const std::size_t i = y * W + x;
      if (mask[i] == 0) continue;
      const double z = depth[i];
      if (!(z > 0)) throw NumericError("depth_to_pointcloud: non-positive depth at valid pixel");
      points.push_back({(static_cast<double>(x) - k.cx) * z / k.fx, (static_cast<double>(y) - k.cy) * z / k.fy, z});
    }
  return points;
}

/// ASCII PLY serialization of a point cloud.
inline std::string write_ply(const std::vector<Point3>& points) {
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(points.size()) +
                    "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  char buf[96];
  for (const auto& p : points) {
    const int n = std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", p.x, p.y, p.z);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

}  // namespace depthbench::data
