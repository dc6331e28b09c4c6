// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0
//
// The six-stage rasterizer with per-stage wall-clock timing. Stage costs are
// grouped the way they parallelize:
//   e_g  Gaussian-parallel       Preprocess, InclusiveSum, DuplicateWithKeys
//   e_n  pair-parallel           SortPairs, IdentifyTileRanges
//   e_p  pixel-parallel          Render

#pragma once

#include "tilesplat/projection.hpp"
#include "tilesplat/render.hpp"
#include "tilesplat/scene.hpp"
#include "tilesplat/tiling.hpp"

#include <array>
#include <chrono>
#include <string_view>
#include <vector>

namespace tilesplat {

enum class Stage { preprocess, inclusive_sum, duplicate, sort, ranges, render };
inline constexpr std::size_t kStageCount = 6;
inline constexpr std::array<std::string_view, kStageCount> kStageNames{
    "preprocess", "inclusivesum", "duplicate", "sort", "ranges", "render"};

struct RenderStats {
  std::array<double, kStageCount> stage_seconds{};
  std::size_t gaussians = 0;
  std::size_t culled_gaussians = 0;
  std::size_t pair_count = 0;

  double seconds(Stage s) const { return stage_seconds[static_cast<std::size_t>(s)]; }
  double e_g() const {
    return seconds(Stage::preprocess) + seconds(Stage::inclusive_sum) + seconds(Stage::duplicate);
  }
  double e_n() const { return seconds(Stage::sort) + seconds(Stage::ranges); }
  double e_p() const { return seconds(Stage::render); }
  double total() const {
    double t = 0.0;
    for (double s : stage_seconds) t += s;
    return t;
  }
};

struct RasterResult {
  RenderOutput output;
  std::vector<ProjectedGaussian> projected;
  TilePairList pairs;
  RenderStats stats;
};

namespace detail {

class StageTimer {
 public:
  explicit StageTimer(RenderStats& stats) : stats_(stats) {}
  template <typename F>
  decltype(auto) run(Stage s, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Record {
      RenderStats& stats;
      Stage s;
      std::chrono::steady_clock::time_point t0;
      ~Record() {
        stats.stage_seconds[static_cast<std::size_t>(s)] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
    } record{stats_, s, t0};
    return f();
  }

 private:
  RenderStats& stats_;
};

}  // namespace detail

/// Renders `scene` through all six stages.
inline RasterResult rasterize(const Scene& scene, const Camera& cam, const RenderConfig& cfg) {
  const TileGrid grid = TileGrid::for_camera(cam);
  RasterResult res;
  res.stats.gaussians = scene.size();
  detail::StageTimer timer(res.stats);

  std::vector<TileRect> rects;
  std::vector<std::uint32_t> counts;
  timer.run(Stage::preprocess, [&] {
    res.projected = preprocess(scene, cam, cfg);
    rects.resize(res.projected.size());
    counts.resize(res.projected.size());
    parallel_for(res.projected.size(), cfg.threads, [&](std::size_t i) {
      rects[i] = tiles_touched(res.projected[i], grid);
      counts[i] = rects[i].count();
    });
  });
  const auto offsets = timer.run(Stage::inclusive_sum, [&] { return inclusive_sum(counts); });
  auto unsorted = timer.run(Stage::duplicate, [&] {
    return duplicate_with_keys(res.projected, rects, offsets, grid, cfg.threads);
  });
  auto sorted = timer.run(Stage::sort, [&] { return sort_pairs(std::move(unsorted)); });
  timer.run(Stage::ranges, [&] {
    res.pairs.tile_ranges = identify_tile_ranges(sorted.keys, grid, cfg.threads);
    res.pairs.keys = std::move(sorted.keys);
    res.pairs.gaussian_indices = std::move(sorted.gaussian_indices);
  });
  res.output = timer.run(Stage::render,
                         [&] { return render(res.projected, res.pairs, grid, cam, cfg); });

  res.stats.pair_count = res.pairs.size();
  for (const auto& pg : res.projected) res.stats.culled_gaussians += pg.culled() ? 1 : 0;
  return res;
}

}  // namespace tilesplat
