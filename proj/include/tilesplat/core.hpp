// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Shared vocabulary: vector aliases, error types, culling modes and a
// deterministic index-parallel loop.

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace tilesplat {

using Vec2f = Eigen::Vector2f;
using Vec3f = Eigen::Vector3f;
using Vec4f = Eigen::Vector4f;
using Mat3f = Eigen::Matrix3f;
using Mat4f = Eigen::Matrix4f;

/// Default minimum splatting opacity; contributions below it are skipped.
inline constexpr float kAlphaLow = 1.0f / 255.0f;
/// Multiplier on sqrt(lambda_max) for the 99% confidence radius.
inline constexpr double kBaselineSigmas = 3.0;
inline constexpr float kDefaultDilation = 0.3f;
inline constexpr float kDefaultNearPlane = 0.2f;
inline constexpr float kDefaultTermination = 1e-4f;
inline constexpr float kAlphaClamp = 0.99f;
/// Jacobian evaluation point is clamped to this multiple of tan(fov/2).
inline constexpr float kFovClampFactor = 1.3f;
inline constexpr int kTileSize = 16;

// Errors ------------------------------------------------------------------

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CapacityError : std::overflow_error {
  using std::overflow_error::overflow_error;
};
/// A pipeline invariant was violated (maps to CLI exit code 3).
struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

// Culling mode --------------------------------------------------------------

enum class CullMode { baseline, circle, aabb };

inline std::string_view to_string(CullMode m) {
  switch (m) {
    case CullMode::baseline: return "baseline";
    case CullMode::circle: return "circle";
    case CullMode::aabb: return "aabb";
  }
  return "?";
}

inline std::optional<CullMode> parse_cull_mode(std::string_view s) {
  if (s == "baseline") return CullMode::baseline;
  if (s == "circle") return CullMode::circle;
  if (s == "aabb") return CullMode::aabb;
  return std::nullopt;
}

/// Knobs shared by every pipeline stage.
struct RenderConfig {
  CullMode mode = CullMode::aabb;
  float alpha_low = kAlphaLow;
  float dilation = kDefaultDilation;
  float termination = kDefaultTermination;
  unsigned threads = 1;  // 0 = hardware concurrency
};

// Parallel loop -------------------------------------------------------------

/// Resolves a requested worker count; 0 means hardware concurrency.
inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) split into contiguous blocks over `threads`
/// workers. Bodies must only write outputs owned by index i; the result is
/// then independent of the worker count. The first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace tilesplat
