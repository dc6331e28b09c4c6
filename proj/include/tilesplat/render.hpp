// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Render stage: front-to-back alpha blending per pixel over the pixel's
// tile list, with per-pixel load counting.

#pragma once

#include "tilesplat/core.hpp"
#include "tilesplat/projection.hpp"
#include "tilesplat/tiling.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace tilesplat {

/// Row-major interleaved RGB, 32-bit float channels.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  float& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool operator==(const Image&) const = default;
};

/// Number of Gaussians composited at each pixel, row-major.
struct LoadMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> counts;

  LoadMap() = default;
  LoadMap(int w, int h) : width(w), height(h), counts(static_cast<std::size_t>(w) * h, 0) {}

  std::uint32_t& at(int x, int y) { return counts[static_cast<std::size_t>(y) * width + x]; }
  std::uint32_t at(int x, int y) const { return counts[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const LoadMap&) const = default;
};

/// Channel-for-channel bit equality (distinguishes -0 from +0 and NaNs).
inline bool bitwise_equal(const Image& a, const Image& b) {
  return a.width == b.width && a.height == b.height && a.pixels.size() == b.pixels.size() &&
         std::memcmp(a.pixels.data(), b.pixels.data(), a.pixels.size() * sizeof(float)) == 0;
}

struct RenderOutput {
  Image image;
  LoadMap load;
};

/// Splatting opacity min(0.99, sigma exp(-x^T conic x / 2)) at pixel
/// (px, py), x being the offset from the splat centre.
inline float gaussian_alpha(const ProjectedGaussian& g, int px, int py) {
  const float dx = g.mean2d.x() - static_cast<float>(px);
  const float dy = g.mean2d.y() - static_cast<float>(py);
  const float power = -0.5f * (g.conic.a * dx * dx + g.conic.c * dy * dy) - g.conic.b * dx * dy;
  return std::min(kAlphaClamp, g.opacity * std::exp(power));
}

/// gaussian_alpha inside the 3-sigma support window, 0 outside it.
inline float splat_alpha(const ProjectedGaussian& g, int px, int py) {
  return g.support.contains(px, py) ? gaussian_alpha(g, px, py) : 0.0f;
}

/// The load indicator: a Gaussian counts toward a pixel's load exactly when
/// it is composited there.
inline bool is_composited(float alpha, float alpha_low) { return !(alpha < alpha_low); }

struct PixelShade {
  float rgb[3] = {0.0f, 0.0f, 0.0f};
  std::uint32_t load = 0;
};

/// Blends `order` (Gaussian indices, front to back) at one pixel. Both the
/// tiled renderer and the reference renderer go through this function.
template <typename IndexRange>
PixelShade shade_pixel(int px, int py, const IndexRange& order,
                       std::span<const ProjectedGaussian> projected, const Vec3f& background,
                       float alpha_low, float termination) {
  PixelShade out;
  float t = 1.0f;
  for (const auto idx : order) {
    const ProjectedGaussian& g = projected[idx];
    const float alpha = splat_alpha(g, px, py);
    if (!is_composited(alpha, alpha_low)) continue;
    for (int c = 0; c < 3; ++c) out.rgb[c] += g.color[c] * alpha * t;
    t *= (1.0f - alpha);
    ++out.load;
    if (t < termination) break;
  }
  for (int c = 0; c < 3; ++c) out.rgb[c] += t * background[c];
  return out;
}

inline RenderOutput render(std::span<const ProjectedGaussian> projected, const TilePairList& pairs,
                           const TileGrid& grid, const Camera& cam, const RenderConfig& cfg) {
  if (cam.width != grid.width || cam.height != grid.height)
    throw InternalError("render: grid does not match camera");
  if (pairs.tile_ranges.size() != grid.tile_count() ||
      pairs.keys.size() != pairs.gaussian_indices.size())
    throw InternalError("render: tile ranges inconsistent with grid");
  for (const auto idx : pairs.gaussian_indices)
    if (idx >= projected.size() || projected[idx].culled())
      throw InternalError("render: pair references a missing or culled Gaussian");

  RenderOutput out{Image(grid.width, grid.height), LoadMap(grid.width, grid.height)};
  parallel_for(grid.tile_count(), cfg.threads, [&](std::size_t tile) {
    const TileRange range = pairs.tile_ranges[tile];
    if (range.end < range.start || range.end > pairs.size())
      throw InternalError("render: malformed tile range");
    const std::span<const std::uint32_t> order(pairs.gaussian_indices.data() + range.start,
                                               range.size());
    const int tx = static_cast<int>(tile % static_cast<std::size_t>(grid.tiles_x));
    const int ty = static_cast<int>(tile / static_cast<std::size_t>(grid.tiles_x));
    const int x_end = std::min(grid.width, (tx + 1) * kTileSize);
    const int y_end = std::min(grid.height, (ty + 1) * kTileSize);
    for (int py = ty * kTileSize; py < y_end; ++py) {
      for (int px = tx * kTileSize; px < x_end; ++px) {
        const PixelShade s =
            shade_pixel(px, py, order, projected, cam.background, cfg.alpha_low, cfg.termination);
        for (int c = 0; c < 3; ++c) out.image.at(px, py, c) = s.rgb[c];
        out.load.at(px, py) = s.load;
      }
    }
  });
  return out;
}

}  // namespace tilesplat
