// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Binning stages: InclusiveSum, DuplicateWithKeys, SortPairs and
// IdentifyTileRanges. A Gaussian-tile pair is keyed as
//
//     (tile_index << 32) | depth_bits
//
// so one ascending sort orders pairs by tile, then by view depth. Equal keys
// keep their emission order, i.e. ascending Gaussian index.

#pragma once

#include "tilesplat/core.hpp"
#include "tilesplat/projection.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace tilesplat {

struct TileGrid {
  int width = 0;
  int height = 0;
  int tiles_x = 0;
  int tiles_y = 0;

  static TileGrid for_image(int width, int height) {
    if (width <= 0 || height <= 0) throw ArgumentError("TileGrid: image size must be positive");
    TileGrid g{width, height, (width + kTileSize - 1) / kTileSize,
               (height + kTileSize - 1) / kTileSize};
    if (static_cast<std::uint64_t>(g.tiles_x) * static_cast<std::uint64_t>(g.tiles_y) >=
        (std::uint64_t{1} << 32))
      throw CapacityError("TileGrid: tile count exceeds the 32-bit key field");
    return g;
  }
  static TileGrid for_camera(const Camera& cam) { return for_image(cam.width, cam.height); }

  std::uint32_t tile_count() const {
    return static_cast<std::uint32_t>(tiles_x) * static_cast<std::uint32_t>(tiles_y);
  }
};

/// Inclusive tile-coordinate rectangle.
struct TileRect {
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;

  bool empty() const { return x0 > x1 || y0 > y1; }
  std::uint32_t count() const {
    return empty() ? 0u : static_cast<std::uint32_t>((x1 - x0 + 1) * (y1 - y0 + 1));
  }
  bool operator==(const TileRect&) const = default;
};

/// Tiles whose pixels intersect mean2d +/- the active extent, clipped to
/// the grid. Culled Gaussians touch nothing.
inline TileRect tiles_touched(const ProjectedGaussian& pg, const TileGrid& grid) {
  if (pg.culled()) return {};
  const auto [ex, ey] = half_extents(pg.extent);
  PixelRect px = pixel_window(pg.mean2d, ex, ey);
  px.x0 = std::max(px.x0, 0);
  px.y0 = std::max(px.y0, 0);
  px.x1 = std::min(px.x1, grid.width - 1);
  px.y1 = std::min(px.y1, grid.height - 1);
  if (px.empty()) return {};
  return {px.x0 / kTileSize, px.x1 / kTileSize, px.y0 / kTileSize, px.y1 / kTileSize};
}

inline std::vector<std::uint32_t> inclusive_sum(std::span<const std::uint32_t> counts) {
  std::vector<std::uint32_t> out(counts.size());
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    acc += counts[i];
    if (acc > std::numeric_limits<std::uint32_t>::max())
      throw CapacityError("inclusive_sum: pair count overflows 32-bit offsets at element " +
                          std::to_string(i));
    out[i] = static_cast<std::uint32_t>(acc);
  }
  return out;
}

/// Order-preserving map from a non-negative float depth to key bits.
inline std::uint32_t depth_bits(float depth) { return std::bit_cast<std::uint32_t>(depth); }

inline std::uint64_t make_key(std::uint32_t tile, float depth) {
  return (static_cast<std::uint64_t>(tile) << 32) | depth_bits(depth);
}

inline std::uint32_t key_tile(std::uint64_t key) { return static_cast<std::uint32_t>(key >> 32); }

struct KeyedPairs {
  std::vector<std::uint64_t> keys;
  std::vector<std::uint32_t> gaussian_indices;
};

/// One entry per touched tile (row-major) at the Gaussian's reserved slot
/// range [offsets[i-1], offsets[i]).
inline KeyedPairs duplicate_with_keys(std::span<const ProjectedGaussian> projected,
                                      std::span<const TileRect> rects,
                                      std::span<const std::uint32_t> offsets, const TileGrid& grid,
                                      unsigned threads = 1) {
  if (projected.size() != rects.size() || projected.size() != offsets.size())
    throw InternalError("duplicate_with_keys: input lengths differ");
  const std::size_t total = offsets.empty() ? 0 : offsets.back();
  KeyedPairs out;
  out.keys.resize(total);
  out.gaussian_indices.resize(total);
  parallel_for(projected.size(), threads, [&](std::size_t i) {
    const TileRect& r = rects[i];
    std::size_t slot = i == 0 ? 0 : offsets[i - 1];
    if (slot + r.count() != offsets[i])
      throw InternalError("duplicate_with_keys: offsets disagree with tile counts");
    for (int ty = r.y0; ty <= r.y1; ++ty) {
      for (int tx = r.x0; tx <= r.x1; ++tx) {
        const auto tile = static_cast<std::uint32_t>(ty * grid.tiles_x + tx);
        out.keys[slot] = make_key(tile, projected[i].depth);
        out.gaussian_indices[slot] = static_cast<std::uint32_t>(i);
        ++slot;
      }
    }
  });
  return out;
}

/// Half-open [start, end) into the sorted pair arrays.
struct TileRange {
  std::uint32_t start = 0;
  std::uint32_t end = 0;

  std::uint32_t size() const { return end - start; }
  bool operator==(const TileRange&) const = default;
};

struct TilePairList {
  std::vector<std::uint64_t> keys;
  std::vector<std::uint32_t> gaussian_indices;
  std::vector<TileRange> tile_ranges;

  std::size_t size() const { return keys.size(); }
};

/// Stable LSD radix sort on the key, 8 bits per pass, skipping the high
/// bytes no key uses.
inline KeyedPairs sort_pairs(KeyedPairs in) {
  if (in.keys.size() != in.gaussian_indices.size())
    throw InternalError("sort_pairs: key and index lists differ in length");
  const std::size_t n = in.keys.size();
  if (n < 2) return in;
  std::uint64_t all_bits = 0;
  for (auto k : in.keys) all_bits |= k;
  const int passes = (std::bit_width(all_bits) + 7) / 8;

  KeyedPairs tmp;
  tmp.keys.resize(n);
  tmp.gaussian_indices.resize(n);
  for (int pass = 0; pass < passes; ++pass) {
    const int shift = 8 * pass;
    std::array<std::size_t, 257> bucket{};
    for (auto k : in.keys) ++bucket[((k >> shift) & 0xFF) + 1];
    if (bucket[((in.keys[0] >> shift) & 0xFF) + 1] == n) continue;  // digit constant
    for (std::size_t b = 1; b < bucket.size(); ++b) bucket[b] += bucket[b - 1];
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t dst = bucket[(in.keys[i] >> shift) & 0xFF]++;
      tmp.keys[dst] = in.keys[i];
      tmp.gaussian_indices[dst] = in.gaussian_indices[i];
    }
    std::swap(in.keys, tmp.keys);
    std::swap(in.gaussian_indices, tmp.gaussian_indices);
  }
  return in;
}

inline std::vector<TileRange> identify_tile_ranges(std::span<const std::uint64_t> keys,
                                                   const TileGrid& grid, unsigned threads = 1) {
  const std::uint32_t tiles = grid.tile_count();
  if (keys.size() > std::numeric_limits<std::uint32_t>::max())
    throw CapacityError("identify_tile_ranges: too many pairs");
  for (std::size_t i = 1; i < keys.size(); ++i)
    if (keys[i] < keys[i - 1])
      throw InternalError("identify_tile_ranges: keys not sorted at position " + std::to_string(i));
  if (!keys.empty() && key_tile(keys.back()) >= tiles)
    throw InternalError("identify_tile_ranges: key references a tile outside the grid");

  std::vector<TileRange> ranges(tiles);
  const auto n = static_cast<std::uint32_t>(keys.size());
  // Every boundary position writes the end of one tile and the start of the
  // next; nothing else is written, so the pass is order independent.
  parallel_for(keys.size(), threads, [&](std::size_t i) {
    const std::uint32_t t = key_tile(keys[i]);
    if (i == 0 || key_tile(keys[i - 1]) != t) ranges[t].start = static_cast<std::uint32_t>(i);
    if (i + 1 == keys.size() || key_tile(keys[i + 1]) != t)
      ranges[t].end = static_cast<std::uint32_t>(i + 1);
  });
  // Empty tiles become (k, k) where k is the first pair of any later tile.
  std::uint32_t next = n;
  for (std::uint32_t t = tiles; t-- > 0;) {
    if (ranges[t].end == 0) {  // occupied tiles always end past 0
      ranges[t] = {next, next};
    } else {
      next = ranges[t].start;
    }
  }
  return ranges;
}

}  // namespace tilesplat
