// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tilesplat/core.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace tilesplat {

inline constexpr int kMaxShDegree = 3;
/// Zeroth-order real SH basis constant.
inline constexpr double kShC0 = 0.28209479177387814;

constexpr std::size_t sh_coeff_count(int degree) {
  return static_cast<std::size_t>((degree + 1) * (degree + 1));
}

/// World-space anisotropic Gaussian. `rotation` is (w, x, y, z).
struct Gaussian3D {
  Vec3f center = Vec3f::Zero();
  Vec3f scale = Vec3f::Ones();
  Vec4f rotation = Vec4f(1, 0, 0, 0);
  float opacity = 1.0f;
  std::vector<Vec3f> sh_coeffs{Vec3f::Zero()};

  bool operator==(const Gaussian3D&) const = default;
};

/// Gaussians are identified by their position in `gaussians`; that index
/// breaks every depth tie downstream.
struct Scene {
  std::vector<Gaussian3D> gaussians;
  int sh_degree = 0;

  std::size_t size() const { return gaussians.size(); }
  bool empty() const { return gaussians.empty(); }
  bool operator==(const Scene&) const = default;
};

/// Pinhole camera, OpenCV convention: +z forward, +y down in view space.
/// Pixel (i, j) is sampled at coordinate (i, j); the principal point is the
/// image center.
struct Camera {
  Mat4f view = Mat4f::Identity();  // world -> camera
  float fx = 1.0f;
  float fy = 1.0f;
  int width = 1;
  int height = 1;
  float near_plane = kDefaultNearPlane;
  Vec3f background = Vec3f::Zero();

  float cx() const { return 0.5f * static_cast<float>(width); }
  float cy() const { return 0.5f * static_cast<float>(height); }
  float tan_fovx() const { return 0.5f * static_cast<float>(width) / fx; }
  float tan_fovy() const { return 0.5f * static_cast<float>(height) / fy; }
  Mat3f rotation() const { return view.topLeftCorner<3, 3>(); }
  Vec3f translation() const { return view.topRightCorner<3, 1>(); }
  Vec3f position() const { return -(rotation().transpose() * translation()); }

  /// Camera at `eye` looking at `target`; `fov_y_deg` is the full vertical
  /// field of view. World `up` maps to screen-up.
  static Camera look_at(const Vec3f& eye, const Vec3f& target, const Vec3f& up,
                        float fov_y_deg, int width, int height) {
    if (width <= 0 || height <= 0) throw ArgumentError("camera: image size must be positive");
    if (!(fov_y_deg > 0.0f && fov_y_deg < 180.0f))
      throw ArgumentError("camera: fov_y must lie in (0, 180) degrees");
    const Vec3f forward = (target - eye).normalized();
    const Vec3f right = forward.cross(up).normalized();
    if (!right.allFinite() || !forward.allFinite())
      throw ArgumentError("camera: degenerate look-at (eye == target or up parallel to view)");
    const Vec3f down = forward.cross(right);
    Camera cam;
    Mat3f rot;
    rot.row(0) = right.transpose();
    rot.row(1) = down.transpose();
    rot.row(2) = forward.transpose();
    cam.view.setIdentity();
    cam.view.topLeftCorner<3, 3>() = rot;
    cam.view.topRightCorner<3, 1>() = -(rot * eye);
    const double half = 0.5 * fov_y_deg * std::numbers::pi / 180.0;
    cam.fy = static_cast<float>(0.5 * height / std::tan(half));
    cam.fx = cam.fy;
    cam.width = width;
    cam.height = height;
    return cam;
  }
};

/// Throws ArgumentError when the camera cannot be rendered with.
inline void validate_camera(const Camera& cam) {
  if (cam.width <= 0 || cam.height <= 0) throw ArgumentError("camera: image size must be positive");
  if (!(cam.fx > 0.0f) || !(cam.fy > 0.0f) || !std::isfinite(cam.fx) || !std::isfinite(cam.fy))
    throw ArgumentError("camera: focal lengths must be positive and finite");
  if (!(cam.near_plane > 0.0f)) throw ArgumentError("camera: near_plane must be positive");
  const Mat3f r = cam.rotation();
  const Mat3f gram = r * r.transpose();
  if (!gram.allFinite() || (gram - Mat3f::Identity()).cwiseAbs().maxCoeff() > 1e-5f)
    throw ArgumentError("camera: view rotation is not orthonormal");
  if ((cam.background.array() < 0.0f).any() || (cam.background.array() > 1.0f).any())
    throw ArgumentError("camera: background must lie in [0,1]");
}

/// Unit quaternion, or nullopt when q cannot be normalized.
inline std::optional<Vec4f> normalized_quaternion(const Vec4f& q) {
  const double n = std::sqrt(static_cast<double>(q.cast<double>().squaredNorm()));
  if (!std::isfinite(n) || n == 0.0) return std::nullopt;
  return (q.cast<double>() / n).cast<float>();
}

// Validation ----------------------------------------------------------------

struct Diagnostic {
  std::size_t index;
  std::string field;
  std::string message;
};

/// One diagnostic per violated Gaussian invariant; empty when valid. A
/// non-unit but normalizable quaternion is not a violation.
inline std::vector<Diagnostic> validate_scene(const Scene& scene) {
  std::vector<Diagnostic> out;
  if (scene.sh_degree < 0 || scene.sh_degree > kMaxShDegree)
    out.push_back({0, "sh_degree", "sh_degree must be in 0..3"});
  const std::size_t want = sh_coeff_count(std::clamp(scene.sh_degree, 0, kMaxShDegree));
  for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
    const auto& g = scene.gaussians[i];
    if (!g.center.allFinite()) out.push_back({i, "center", "non-finite center"});
    if (!g.scale.allFinite() || (g.scale.array() <= 0.0f).any())
      out.push_back({i, "scale", "scale components must be positive and finite"});
    if (!normalized_quaternion(g.rotation))
      out.push_back({i, "rotation", "quaternion cannot be normalized"});
    if (!(g.opacity > 0.0f && g.opacity <= 1.0f))
      out.push_back({i, "opacity", "opacity must lie in (0, 1]"});
    if (g.sh_coeffs.size() != want) {
      out.push_back({i, "sh", "expected " + std::to_string(want) + " SH coefficients, got " +
                                  std::to_string(g.sh_coeffs.size())});
    } else {
      for (const auto& c : g.sh_coeffs) {
        if (!c.allFinite()) {
          out.push_back({i, "sh", "non-finite SH coefficient"});
          break;
        }
      }
    }
  }
  return out;
}

/// Normalizes every quaternion in place; throws ValidationError naming the
/// first invalid element.
inline void normalize_and_check(Scene& scene) {
  for (auto& g : scene.gaussians) {
    if (auto q = normalized_quaternion(g.rotation)) g.rotation = *q;
  }
  const auto diags = validate_scene(scene);
  if (!diags.empty()) {
    const auto& d = diags.front();
    throw ValidationError("gaussian " + std::to_string(d.index) + ": " + d.field + ": " +
                          d.message);
  }
}

// Synthetic scenes ----------------------------------------------------------

enum class RotationMode {
  random,       // uniform over SO(3)
  axis_aligned  // long axis along world x or world y
};

/// Distribution parameters for generate_synthetic. Scales are sampled
/// log-uniformly; the first scale axis is stretched by the anisotropy ratio.
struct SyntheticSpec {
  Vec3f center = Vec3f::Zero();
  float extent = 1.5f;  // half side length of the sampling cube
  float scale_min = 0.01f;
  float scale_max = 0.08f;
  float anisotropy_min = 1.0f;
  float anisotropy_max = 6.0f;
  float opacity_min = 0.01f;
  float opacity_max = 1.0f;
  float color_min = 0.0f;
  float color_max = 1.0f;
  RotationMode rotation = RotationMode::random;
};

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace detail

inline Scene generate_synthetic(std::uint64_t seed, std::size_t count,
                                const SyntheticSpec& spec = {}) {
  if (count == 0) throw ArgumentError("generate_synthetic: count must be >= 1");
  if (!(spec.scale_min > 0.0f) || spec.scale_max < spec.scale_min)
    throw ArgumentError("generate_synthetic: need 0 < scale_min <= scale_max");
  if (!(spec.anisotropy_min >= 1.0f) || spec.anisotropy_max < spec.anisotropy_min)
    throw ArgumentError("generate_synthetic: need 1 <= anisotropy_min <= anisotropy_max");
  if (!(spec.opacity_min > 0.0f) || spec.opacity_max > 1.0f ||
      spec.opacity_max < spec.opacity_min)
    throw ArgumentError("generate_synthetic: need 0 < opacity_min <= opacity_max <= 1");
  if (spec.color_min < 0.0f || spec.color_max > 1.0f || spec.color_max < spec.color_min)
    throw ArgumentError("generate_synthetic: need 0 <= color_min <= color_max <= 1");
  if (!(spec.extent >= 0.0f)) throw ArgumentError("generate_synthetic: extent must be >= 0");

  using detail::uniform;
  using detail::uniform01;
  std::mt19937_64 rng(seed);
  Scene scene;
  scene.sh_degree = 0;
  scene.gaussians.reserve(count);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < count; ++i) {
    Gaussian3D g;
    for (int a = 0; a < 3; ++a)
      g.center[a] = static_cast<float>(spec.center[a] + uniform(rng, -spec.extent, spec.extent));

    const double base = std::exp(uniform(rng, std::log(spec.scale_min), std::log(spec.scale_max)));
    const double ratio = uniform(rng, spec.anisotropy_min, spec.anisotropy_max);
    g.scale = Vec3f(static_cast<float>(base * ratio), static_cast<float>(base),
                    static_cast<float>(base));

    if (spec.rotation == RotationMode::random) {
      // Shoemake's uniform quaternion.
      const double u1 = uniform01(rng), u2 = uniform01(rng), u3 = uniform01(rng);
      const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
      const Eigen::Vector4d q(b * std::cos(two_pi * u3), a * std::sin(two_pi * u2),
                              a * std::cos(two_pi * u2), b * std::sin(two_pi * u3));
      g.rotation = q.cast<float>();
    } else {
      const bool along_y = (rng() >> 63) != 0;
      const double h = std::sqrt(0.5);
      g.rotation = along_y ? Vec4f(static_cast<float>(h), 0, 0, static_cast<float>(h))
                           : Vec4f(1, 0, 0, 0);
    }
    if (auto q = normalized_quaternion(g.rotation)) g.rotation = *q;

    g.opacity = static_cast<float>(uniform(rng, spec.opacity_min, spec.opacity_max));
    Vec3f color;
    for (int c = 0; c < 3; ++c)
      color[c] = static_cast<float>((uniform(rng, spec.color_min, spec.color_max) - 0.5) / kShC0);
    g.sh_coeffs = {color};
    scene.gaussians.push_back(std::move(g));
  }
  return scene;
}

}  // namespace tilesplat
