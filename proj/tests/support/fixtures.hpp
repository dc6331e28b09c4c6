// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Seeded scenes and cameras shared by the unit and acceptance suites.

#pragma once

#include "tilesplat/tilesplat.hpp"

#include <cstdint>
#include <random>

namespace tilesplat::testing {

/// Camera 5 units back on -z looking at the origin.
inline Camera desk_camera(int size, float fov_y = 50.0f) {
  CameraSpec s;
  s.width = size;
  s.height = size;
  s.fov_y_deg = fov_y;
  return s.build();
}

/// Mixed anisotropy, opacity in [0.01, 1], random orientation.
inline Scene mixed_scene(std::uint64_t seed, std::size_t count) {
  return generate_synthetic(seed, count, SyntheticSpec{});
}

/// Long axes aligned with the screen axes, anisotropy 4..8, opacity <= 0.3.
inline Scene elongated_scene(std::uint64_t seed, std::size_t count) {
  SyntheticSpec s;
  s.anisotropy_min = 4.0f;
  s.anisotropy_max = 8.0f;
  s.opacity_min = 0.02f;
  s.opacity_max = 0.3f;
  s.rotation = RotationMode::axis_aligned;
  return generate_synthetic(seed, count, s);
}

/// Isotropic Gaussians.
inline Scene isotropic_scene(std::uint64_t seed, std::size_t count) {
  SyntheticSpec s;
  s.anisotropy_min = s.anisotropy_max = 1.0f;
  return generate_synthetic(seed, count, s);
}

/// Narrow field of view from far away: every view ray is within ~0.1 degree
/// of the optical axis, so isotropic Gaussians project to (numerically)
/// isotropic splats.
inline Camera telephoto_camera(int size) {
  CameraSpec s;
  s.position = Vec3f(0, 0, -2000);
  s.width = s.height = size;
  s.fov_y_deg = 0.1f;
  return s.build();
}

/// A dense low-opacity cluster at the image centre plus sparse background
/// splats; loads are heavily uneven.
inline Scene clustered_scene() {
  SyntheticSpec cluster;
  cluster.extent = 0.15f;
  cluster.scale_min = 0.12f;
  cluster.scale_max = 0.2f;
  cluster.anisotropy_max = 1.5f;
  cluster.opacity_min = 0.05f;
  cluster.opacity_max = 0.15f;
  Scene s = generate_synthetic(11, 40, cluster);
  SyntheticSpec sparse = cluster;
  sparse.extent = 1.5f;
  sparse.scale_min = 0.05f;
  sparse.scale_max = 0.1f;
  sparse.opacity_min = 0.3f;
  sparse.opacity_max = 0.8f;
  for (auto& g : generate_synthetic(12, 10, sparse).gaussians) s.gaussians.push_back(g);
  return s;
}

inline Camera clustered_camera() { return desk_camera(32, 40.0f); }

/// Random loads for metric tests.
inline LoadMap random_load_map(std::uint64_t seed, int w, int h, std::uint32_t max_count) {
  std::mt19937_64 rng(seed);
  LoadMap m(w, h);
  for (auto& c : m.counts) c = static_cast<std::uint32_t>(rng() % (max_count + 1));
  return m;
}

inline Image random_image(std::uint64_t seed, int w, int h) {
  std::mt19937_64 rng(seed);
  Image img(w, h);
  for (auto& v : img.pixels) v = static_cast<float>((rng() >> 40) * 0x1.0p-24);
  return img;
}

}  // namespace tilesplat::testing
