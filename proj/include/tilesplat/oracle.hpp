// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference renderer: no tiles, no culling extents. Every pixel
// walks the full depth-sorted list of surviving Gaussians.

#pragma once

#include "tilesplat/projection.hpp"
#include "tilesplat/render.hpp"
#include "tilesplat/scene.hpp"
#include "tilesplat/tiling.hpp"

#include <algorithm>
#include <vector>

namespace tilesplat {

inline RenderOutput render_reference(const Scene& scene, const Camera& cam, float alpha_low,
                                     float termination = kDefaultTermination,
                                     float dilation = kDefaultDilation) {
  RenderConfig cfg;
  cfg.mode = CullMode::baseline;
  cfg.alpha_low = alpha_low;
  cfg.termination = termination;
  cfg.dilation = dilation;
  cfg.threads = 1;
  const auto projected = preprocess(scene, cam, cfg);

  std::vector<std::uint32_t> order;
  for (std::uint32_t i = 0; i < projected.size(); ++i)
    if (!projected[i].culled()) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto da = depth_bits(projected[a].depth), db = depth_bits(projected[b].depth);
    return da != db ? da < db : a < b;
  });

  RenderOutput out{Image(cam.width, cam.height), LoadMap(cam.width, cam.height)};
  for (int py = 0; py < cam.height; ++py) {
    for (int px = 0; px < cam.width; ++px) {
      const PixelShade s =
          shade_pixel(px, py, order, projected, cam.background, alpha_low, termination);
      for (int c = 0; c < 3; ++c) out.image.at(px, py, c) = s.rgb[c];
      out.load.at(px, py) = s.load;
    }
  }
  return out;
}

}  // namespace tilesplat
