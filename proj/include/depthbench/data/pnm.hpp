#pragma once

// Binary PGM (P5, 1 channel) and PPM (P6, 3 channels) with maxval 255.
// Images are channel-planar C x H x W tensors with values in [0, 1].

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "depthbench/core/error.hpp"
#include "depthbench/core/tensor.hpp"

namespace depthbench::data {

namespace detail {

// Header token reader that skips whitespace and '#' comments up to end of line.
inline std::string_view pnm_token(std::string_view bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) && bytes[pos] != '#') ++pos;
  if (start == pos) throw FormatError("PNM: truncated header");
  return bytes.substr(start, pos - start);
}

inline std::size_t pnm_number(std::string_view tok, const char* what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || v == 0)
    throw FormatError(std::string("PNM: invalid ") + what + " '" + std::string(tok) + "'");
  return v;
}

}  // namespace detail

inline Tensor read_pnm(std::string_view bytes) {
  std::size_t pos = 0;
  const auto magic = detail::pnm_token(bytes, pos);
  std::size_t channels = 0;
  if (magic == "P5")
    channels = 1;
  else if (magic == "P6")
    channels = 3;
  else if (magic == "P2" || magic == "P3")
    throw FormatError("PNM: ASCII variant " + std::string(magic) + " is not supported");
  else
    throw FormatError("PNM: bad magic '" + std::string(magic) + "'");
  const std::size_t w = detail::pnm_number(detail::pnm_token(bytes, pos), "width");
  const std::size_t h = detail::pnm_number(detail::pnm_token(bytes, pos), "height");
  const std::size_t maxval = detail::pnm_number(detail::pnm_token(bytes, pos), "maxval");
  if (maxval != 255) throw FormatError("PNM: maxval must be 255, got " + std::to_string(maxval));
  if (pos >= bytes.size()) throw FormatError("PNM: truncated header");
  ++pos;  // single whitespace byte ends the header
  const std::size_t count = w * h * channels;
  if (bytes.size() - pos < count) throw FormatError("PNM: truncated payload");
  std::vector<double> v(count);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < channels; ++c)
        v[(c * h + y) * w + x] = static_cast<unsigned char>(bytes[pos + (y * w + x) * channels + c]) / 255.0;
  return Tensor::from({channels, h, w}, std::move(v));
}

/// Encodes a 1 x H x W (P5) or 3 x H x W (P6) image; values are clipped to
/// [0, 1] and rounded to the nearest 8-bit level.
inline std::string write_pnm(const Tensor& image) {
  if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3))
    throw ShapeError("PNM: expected 1 x H x W or 3 x H x W image, got " + shape_str(image.shape()));
  const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  std::string out = (C == 1 ? "P5\n" : "P6\n") + std::to_string(W) + " " + std::to_string(H) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + C * H * W);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < C; ++c) {
        const double v = std::clamp(image[(c * H + y) * W + x], 0.0, 1.0);
        out[header + (y * W + x) * C + c] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
  return out;
}

}  // namespace depthbench::data
