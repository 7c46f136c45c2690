#pragma once

// Portable Float Map: "PF" (3 channels) or "Pf" (1 channel), then
// "<width> <height>", then a scale whose sign gives the byte order
// (negative = little-endian), then rows of 32-bit floats stored bottom-to-top.

#include <bit>
#include <cctype>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "depthbench/core/error.hpp"
#include "depthbench/core/tensor.hpp"

namespace depthbench::data {

/// Interleaved float map, rows top-to-bottom.
struct FloatMap {
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> values;  // (y * width + x) * channels + c
  double scale = 1.0;         // |scale| from the header
};

namespace detail {

inline std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

// Consumes one whitespace-delimited header token starting at `pos`.
inline std::string_view next_token(std::string_view bytes, std::size_t& pos) {
  while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw FormatError("PFM: truncated header");
  return bytes.substr(start, pos - start);
}

inline std::size_t parse_extent(std::string_view tok, const char* what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || v == 0)
    throw FormatError(std::string("PFM: invalid ") + what + " '" + std::string(tok) + "'");
  return v;
}

}  // namespace detail

inline FloatMap read_pfm(std::string_view bytes) {
  std::size_t pos = 0;
  const auto magic = detail::next_token(bytes, pos);
  FloatMap map;
  if (magic == "Pf")
    map.channels = 1;
  else if (magic == "PF")
    map.channels = 3;
  else
    throw FormatError("PFM: bad magic '" + std::string(magic) + "'");
  map.width = detail::parse_extent(detail::next_token(bytes, pos), "width");
  map.height = detail::parse_extent(detail::next_token(bytes, pos), "height");
  const auto scale_tok = detail::next_token(bytes, pos);
  double scale = 0;
  auto [ptr, ec] = std::from_chars(scale_tok.data(), scale_tok.data() + scale_tok.size(), scale);
  if (ec != std::errc() || ptr != scale_tok.data() + scale_tok.size())
    throw FormatError("PFM: invalid scale '" + std::string(scale_tok) + "'");
  if (scale == 0) throw FormatError("PFM: scale must be non-zero");
  if (pos >= bytes.size()) throw FormatError("PFM: truncated header");
  ++pos;  // single whitespace byte ends the header
  map.scale = std::abs(scale);

  const std::size_t count = map.width * map.height * map.channels;
  if (bytes.size() - pos < count * 4)
    throw FormatError("PFM: truncated payload, expected " + std::to_string(count * 4) + " bytes");
  const bool file_little = scale < 0;
  const bool swap = file_little != (std::endian::native == std::endian::little);
  map.values.resize(count);
  const std::size_t row = map.width * map.channels;
  for (std::size_t r = 0; r < map.height; ++r) {
    const std::size_t dst_row = map.height - 1 - r;
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t raw;
      std::memcpy(&raw, bytes.data() + pos + (r * row + i) * 4, 4);
      if (swap) raw = detail::byteswap32(raw);
      map.values[dst_row * row + i] = std::bit_cast<float>(raw);
    }
  }
  return map;
}

/// Canonical little-endian encoding ("<magic>\n<w> <h>\n-<scale>\n" + payload).
inline std::string write_pfm(const FloatMap& map) {
  if (map.channels != 1 && map.channels != 3) throw FormatError("PFM: only 1 or 3 channels");
  if (map.width == 0 || map.height == 0) throw FormatError("PFM: empty map");
  if (map.values.size() != map.width * map.height * map.channels) throw FormatError("PFM: value count mismatch");
  if (map.scale <= 0) throw FormatError("PFM: scale must be positive");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, map.scale);
  std::string scale_str(buf, res.ptr);
  if (scale_str.find_first_of(".e") == std::string::npos) scale_str += ".0";

  std::string out = (map.channels == 1 ? "Pf\n" : "PF\n") + std::to_string(map.width) + " " +
                    std::to_string(map.height) + "\n-" + scale_str + "\n";
  const std::size_t header = out.size();
  out.resize(header + map.values.size() * 4);
  const std::size_t row = map.width * map.channels;
  for (std::size_t r = 0; r < map.height; ++r) {
    const std::size_t src_row = map.height - 1 - r;
    for (std::size_t i = 0; i < row; ++i) {
      auto raw = std::bit_cast<std::uint32_t>(map.values[src_row * row + i]);
      if constexpr (std::endian::native != std::endian::little) raw = detail::byteswap32(raw);
      std::memcpy(out.data() + header + (r * row + i) * 4, &raw, 4);
    }
  }
  return out;
}

/// C x H x W tensor (channel-planar) from an interleaved map.
inline Tensor to_tensor(const FloatMap& map) {
  std::vector<double> v(map.values.size());
  for (std::size_t y = 0; y < map.height; ++y)
    for (std::size_t x = 0; x < map.width; ++x)
      for (std::size_t c = 0; c < map.channels; ++c)
        v[(c * map.height + y) * map.width + x] = map.values[(y * map.width + x) * map.channels + c];
  return Tensor::from({map.channels, map.height, map.width}, std::move(v));
}

/// Inverse of to_tensor for a C x H x W (or 1 x C x H x W) tensor.
inline FloatMap from_tensor(const Tensor& t) {
  if (t.rank() != 3 && !(t.rank() == 4 && t.dim(0) == 1)) throw ShapeError("PFM: expected C x H x W tensor");
  const std::size_t off = t.rank() - 3;
  FloatMap map;
  map.channels = t.dim(off);
  map.height = t.dim(off + 1);
  map.width = t.dim(off + 2);
  map.values.resize(t.numel());
  for (std::size_t y = 0; y < map.height; ++y)
    for (std::size_t x = 0; x < map.width; ++x)
      for (std::size_t c = 0; c < map.channels; ++c)
        map.values[(y * map.width + x) * map.channels + c] =
            static_cast<float>(t[(c * map.height + y) * map.width + x]);
  return map;
}

}  // namespace depthbench::data
