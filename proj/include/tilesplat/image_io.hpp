// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tilesplat/render.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace tilesplat {

/// Clamp to [0,1], scale to 255 and round half up.
inline std::uint8_t to_u8(float v) {
  const float c = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::floor(c * 255.0f + 0.5f));
}

inline std::vector<std::uint8_t> to_rgb8(const Image& img) {
  std::vector<std::uint8_t> out(img.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_u8(img.pixels[i]);
  return out;
}

namespace detail {

inline void write_png_raw(const std::filesystem::path& path, int w, int h, bool rgb,
                          const std::vector<std::uint8_t>& data) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("PNG write failed for " + path.string() + ": " + msg);
  }
}

inline std::ofstream open_binary(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  return out;
}

}  // namespace detail

inline void write_png(const Image& img, const std::filesystem::path& path) {
  detail::write_png_raw(path, img.width, img.height, true, to_rgb8(img));
}

/// Binary PPM (P6), 8 bits per channel.
inline void write_ppm(const Image& img, const std::filesystem::path& path) {
  auto out = detail::open_binary(path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  const auto bytes = to_rgb8(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

/// Raw loads as 16-bit big-endian PGM (P5); loads above 65535 saturate.
inline void write_load_pgm16(const LoadMap& map, const std::filesystem::path& path) {
  auto out = detail::open_binary(path);
  out << "P5\n" << map.width << " " << map.height << "\n65535\n";
  std::vector<char> bytes;
  bytes.reserve(map.counts.size() * 2);
  for (auto c : map.counts) {
    const auto v = static_cast<std::uint16_t>(std::min<std::uint32_t>(c, 65535u));
    bytes.push_back(static_cast<char>(v >> 8));
    bytes.push_back(static_cast<char>(v & 0xFF));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

/// 8-bit grayscale, load / max_load; brighter means heavier. All black when
/// every load is zero.
inline std::vector<std::uint8_t> load_to_gray8(const LoadMap& map) {
  std::uint32_t mx = 0;
  for (auto c : map.counts) mx = std::max(mx, c);
  std::vector<std::uint8_t> out(map.counts.size(), 0);
  if (mx == 0) return out;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = to_u8(static_cast<float>(static_cast<double>(map.counts[i]) / mx));
  return out;
}

inline void write_load_png(const LoadMap& map, const std::filesystem::path& path) {
  detail::write_png_raw(path, map.width, map.height, false, load_to_gray8(map));
}

/// FNV-1a over the raw float bits; equal hashes for bitwise-equal images.
inline std::uint64_t image_hash(const Image& img) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) {
      h ^= (v >> (8 * b)) & 0xFF;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint32_t>(img.width));
  mix(static_cast<std::uint32_t>(img.height));
  for (float f : img.pixels) mix(std::bit_cast<std::uint32_t>(f));
  return h;
}

inline std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path.string());
  std::uint64_t h = 1469598103934665603ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace tilesplat
