#pragma once

// 2-D and 3-D cross-correlation (no kernel flip) via im2col + GEMM.

#ifndef EIGEN_DONT_PARALLELIZE
#define EIGEN_DONT_PARALLELIZE
#endif
#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

#include "depthbench/core/profile.hpp"
#include "depthbench/core/tensor.hpp"

namespace depthbench {

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

// Geometry of an N-spatial-dimension convolution (N = 2 or 3).
template <std::size_t Dims>
struct ConvGeometry {
  std::size_t batch = 0, in_channels = 0, out_channels = 0;
  std::array<std::size_t, Dims> in{}, kernel{}, out{};
  std::size_t stride = 1, padding = 0;

  std::size_t in_plane() const {
    std::size_t n = 1;
    for (auto v : in) n *= v;
    return n;
  }
  std::size_t out_plane() const {
    std::size_t n = 1;
    for (auto v : out) n *= v;
    return n;
  }
  std::size_t kernel_volume() const {
    std::size_t n = 1;
    for (auto v : kernel) n *= v;
    return n;
  }
  std::size_t col_rows() const { return in_channels * kernel_volume(); }
};

template <std::size_t Dims>
ConvGeometry<Dims> conv_geometry(const Tensor& input, const Tensor& weight, std::size_t stride, std::size_t padding,
                                 const char* op) {
  if (input.rank() != Dims + 2 || weight.rank() != Dims + 2)
    throw ShapeError(std::string(op) + ": expected rank-" + std::to_string(Dims + 2) + " input and weight, got " +
                     shape_str(input.shape()) + " and " + shape_str(weight.shape()));
  if (stride == 0) throw ShapeError(std::string(op) + ": stride must be positive");
  ConvGeometry<Dims> g;
  g.batch = input.dim(0);
  g.in_channels = input.dim(1);
  g.out_channels = weight.dim(0);
  g.stride = stride;
  g.padding = padding;
  if (weight.dim(1) != g.in_channels)
    throw ShapeError(std::string(op) + ": input has " + std::to_string(g.in_channels) + " channels, weight expects " +
                     std::to_string(weight.dim(1)));
  for (std::size_t d = 0; d < Dims; ++d) {
    g.in[d] = input.dim(2 + d);
    g.kernel[d] = weight.dim(2 + d);
    if (g.in[d] + 2 * padding < g.kernel[d])
      throw ShapeError(std::string(op) + ": non-positive output extent for input " + shape_str(input.shape()));
    g.out[d] = (g.in[d] + 2 * padding - g.kernel[d]) / stride + 1;
  }
  return g;
}

// col[(c, k...)][(o...)] = padded input sample for batch item `src`.
inline void im2col(const double* src, const ConvGeometry<2>& g, double* col) {
  const auto [H, W] = g.in;
  const auto [KH, KW] = g.kernel;
  const auto [OH, OW] = g.out;
  const auto s = static_cast<std::ptrdiff_t>(g.stride), p = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < g.in_channels; ++c)
    for (std::size_t ky = 0; ky < KH; ++ky)
      for (std::size_t kx = 0; kx < KW; ++kx) {
        double* row = col + ((c * KH + ky) * KW + kx) * OH * OW;
        for (std::size_t oy = 0; oy < OH; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) * s - p + static_cast<std::ptrdiff_t>(ky);
          for (std::size_t ox = 0; ox < OW; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox) * s - p + static_cast<std::ptrdiff_t>(kx);
            row[oy * OW + ox] = (iy >= 0 && iy < static_cast<std::ptrdiff_t>(H) && ix >= 0 &&
                                 ix < static_cast<std::ptrdiff_t>(W))
                                    ? src[(c * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix)]
                                    : 0.0;
          }
        }
      }
}

inline void col2im(const double* col, const ConvGeometry<2>& g, double* dst) {
  const auto [H, W] = g.in;
  const auto [KH, KW] = g.kernel;
  const auto [OH, OW] = g.out;
  const auto s = static_cast<std::ptrdiff_t>(g.stride), p = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < g.in_channels; ++c)
    for (std::size_t ky = 0; ky < KH; ++ky)
      for (std::size_t kx = 0; kx < KW; ++kx) {
        const double* row = col + ((c * KH + ky) * KW + kx) * OH * OW;
        for (std::size_t oy = 0; oy < OH; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) * s - p + static_cast<std::ptrdiff_t>(ky);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t ox = 0; ox < OW; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox) * s - p + static_cast<std::ptrdiff_t>(kx);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
            dst[(c * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix)] += row[oy * OW + ox];
          }
        }
      }
}

inline void im2col(const double* src, const ConvGeometry<3>& g, double* col) {
  const auto [D, H, W] = g.in;
  const auto [KD, KH, KW] = g.kernel;
  const auto [OD, OH, OW] = g.out;
  const auto s = static_cast<std::ptrdiff_t>(g.stride), p = static_cast<std::ptrdiff_t>(g.padding);
  const std::size_t plane = OD * OH * OW;
  for (std::size_t c = 0; c < g.in_channels; ++c)
    for (std::size_t kz = 0; kz < KD; ++kz)
      for (std::size_t ky = 0; ky < KH; ++ky)
        for (std::size_t kx = 0; kx < KW; ++kx) {
          double* row = col + (((c * KD + kz) * KH + ky) * KW + kx) * plane;
          for (std::size_t oz = 0; oz < OD; ++oz) {
            const std::ptrdiff_t iz = static_cast<std::ptrdiff_t>(oz) * s - p + static_cast<std::ptrdiff_t>(kz);
            for (std::size_t oy = 0; oy < OH; ++oy) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) * s - p + static_cast<std::ptrdiff_t>(ky);
              for (std::size_t ox = 0; ox < OW; ++ox) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox) * s - p + static_cast<std::ptrdiff_t>(kx);
                const bool inside = iz >= 0 && iz < static_cast<std::ptrdiff_t>(D) && iy >= 0 &&
                                    iy < static_cast<std::ptrdiff_t>(H) && ix >= 0 &&
                                    ix < static_cast<std::ptrdiff_t>(W);
                row[(oz * OH + oy) * OW + ox] =
                    inside ? src[((c * D + static_cast<std::size_t>(iz)) * H + static_cast<std::size_t>(iy)) * W +
                                 static_cast<std::size_t>(ix)]
                           : 0.0;
              }
            }
          }
        }
}

inline void col2im(const double* col, const ConvGeometry<3>& g, double* dst) {
  const auto [D, H, W] = g.in;
  const auto [KD, KH, KW] = g.kernel;
  const auto [OD, OH, OW] = g.out;
  const auto s = static_cast<std::ptrdiff_t>(g.stride), p = static_cast<std::ptrdiff_t>(g.padding);
  const std::size_t plane = OD * OH * OW;
  for (std::size_t c = 0; c < g.in_channels; ++c)
    for (std::size_t kz = 0; kz < KD; ++kz)
      for (std::size_t ky = 0; ky < KH; ++ky)
        for (std::size_t kx = 0; kx < KW; ++kx) {
          const double* row = col + (((c * KD + kz) * KH + ky) * KW + kx) * plane;
          for (std::size_t oz = 0; oz < OD; ++oz) {
            const std::ptrdiff_t iz = static_cast<std::ptrdiff_t>(oz) * s - p + static_cast<std::ptrdiff_t>(kz);
            if (iz < 0 || iz >= static_cast<std::ptrdiff_t>(D)) continue;
            for (std::size_t oy = 0; oy < OH; ++oy) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) * s - p + static_cast<std::ptrdiff_t>(ky);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
              for (std::size_t ox = 0; ox < OW; ++ox) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox) * s - p + static_cast<std::ptrdiff_t>(kx);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                dst[((c * D + static_cast<std::size_t>(iz)) * H + static_cast<std::size_t>(iy)) * W +
                    static_cast<std::size_t>(ix)] += row[(oz * OH + oy) * OW + ox];
              }
            }
          }
        }
}

template <std::size_t Dims>
Tensor convolution(const char* op, const Tensor& input, const Tensor& weight, const Tensor* bias, std::size_t stride,
                   std::size_t padding) {
  const auto g = conv_geometry<Dims>(input, weight, stride, padding, op);
  if (bias && (bias->rank() != 1 || bias->dim(0) != g.out_channels))
    throw ShapeError(std::string(op) + ": bias must have " + std::to_string(g.out_channels) + " elements");

  const std::size_t K = g.col_rows(), P = g.out_plane(), O = g.out_channels;
  Shape out_shape{g.batch, O};
  for (auto v : g.out) out_shape.push_back(v);
  std::vector<double> out(g.batch * O * P);
  std::vector<double> col(K * P);
  ConstMatrixMap wm(weight.values().data(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(K));
  for (std::size_t n = 0; n < g.batch; ++n) {
    im2col(input.values().data() + n * g.in_channels * g.in_plane(), g, col.data());
    ConstMatrixMap cm(col.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
    MatrixMap om(out.data() + n * O * P, static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(P));
    om.noalias() = wm * cm;
    if (bias)
      for (std::size_t o = 0; o < O; ++o)
        for (std::size_t q = 0; q < P; ++q) out[(n * O + o) * P + q] += (*bias)[o];
  }
  record_macs(op, static_cast<std::uint64_t>(g.batch) * O * P * K);

  auto in_node = input.node(), w_node = weight.node();
  detail::NodePtr b_node = bias ? bias->node() : nullptr;
  std::vector<Tensor> inputs{input, weight};
  if (bias) inputs.push_back(*bias);
  return make_result(op, out_shape, std::move(out), inputs, [g, in_node, w_node, b_node](Node& self) {
    const std::size_t K = g.col_rows(), P = g.out_plane(), O = g.out_channels;
    auto* gin = grad_sink(in_node);
    auto* gw = grad_sink(w_node);
    auto* gb = b_node ? grad_sink(b_node) : nullptr;
    std::vector<double> col(K * P), dcol;
    if (gin) dcol.resize(K * P);
    ConstMatrixMap wm(w_node->value.data(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(K));
    for (std::size_t n = 0; n < g.batch; ++n) {
      ConstMatrixMap dout(self.grad.data() + n * O * P, static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(P));
      if (gb)
        for (std::size_t o = 0; o < O; ++o)
          for (std::size_t q = 0; q < P; ++q) (*gb)[o] += self.grad[(n * O + o) * P + q];
      if (gw) {
        im2col(in_node->value.data() + n * g.in_channels * g.in_plane(), g, col.data());
        ConstMatrixMap cm(col.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
        MatrixMap gwm(gw->data(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(K));
        gwm.noalias() += dout * cm.transpose();
      }
      if (gin) {
        MatrixMap dcm(dcol.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
        dcm.noalias() = wm.transpose() * dout;
        col2im(dcol.data(), g, gin->data() + n * g.in_channels * g.in_plane());
      }
    }
  });
}

}  // namespace detail

/// NCHW input, OIHW weight, optional bias of length O.
/// Output extent per axis: floor((in + 2*padding - k) / stride) + 1.
inline Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride = 1,
                     std::size_t padding = 0) {
  return detail::convolution<2>("conv2d", input, weight, bias.defined() ? &bias : nullptr, stride, padding);
}

inline Tensor conv2d(const Tensor& input, const Tensor& weight, std::size_t stride = 1, std::size_t padding = 0) {
  return detail::convolution<2>("conv2d", input, weight, nullptr, stride, padding);
}

/// NCDHW input, OIDHW weight.
inline Tensor conv3d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride = 1,
                     std::size_t padding = 0) {
  return detail::convolution<3>("conv3d", input, weight, bias.defined() ? &bias : nullptr, stride, padding);
}

inline Tensor conv3d(const Tensor& input, const Tensor& weight, std::size_t stride = 1, std::size_t padding = 0) {
  return detail::convolution<3>("conv3d", input, weight, nullptr, stride, padding);
}

}  // namespace depthbench
