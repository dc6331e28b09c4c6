// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Preprocess stage: per-Gaussian covariance projection, colour and culling
// extents.
//
// A Gaussian with opacity sigma contributes alpha = sigma * exp(-q / 2) at a
// pixel whose Mahalanobis distance to the splat centre is q. The pixel is
// skipped when alpha < alpha_low, so every contributing pixel satisfies
//
//     q <= 2 ln(sigma / alpha_low).
//
// That ellipse bounds the splat's footprint. Its bounding circle has radius
// sqrt(2 lambda_max ln(sigma / alpha_low)) and its axis-aligned box has half
// widths sqrt(2 cov_xx ln(.)) and sqrt(2 cov_yy ln(.)). Both are clamped to
// the 3-sigma radius and rounded up, so a pixel outside the extent can never
// pass the alpha test.

#pragma once

#include "tilesplat/core.hpp"
#include "tilesplat/scene.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace tilesplat {

/// Symmetric 2x2 screen-space covariance.
struct Cov2D {
  float xx = 0.0f;
  float xy = 0.0f;
  float yy = 0.0f;

  float det() const { return xx * yy - xy * xy; }
};

/// Inverse of Cov2D as (a, b, c) with b off-diagonal.
struct Conic {
  float a = 0.0f;
  float b = 0.0f;
  float c = 0.0f;
};

struct EigenExtents {
  double lambda_max;
  double lambda_min;
};

/// Coefficients of A x^2 + B y^2 + C x y + D <= 0, the region where a
/// Gaussian still reaches alpha_low.
struct EllipseCoefficients {
  double A;
  double B;
  double C;
  double D;
};

struct BaselineExtent {
  int r_o;
};
struct CircleExtent {
  int r;
};
struct AabbExtent {
  int r_x;
  int r_y;
};
using CullExtent = std::variant<BaselineExtent, CircleExtent, AabbExtent>;

/// Half widths (x, y) in pixels of the screen rectangle an extent covers.
inline std::pair<int, int> half_extents(const CullExtent& e) {
  return std::visit(
      [](const auto& v) -> std::pair<int, int> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, BaselineExtent>) return {v.r_o, v.r_o};
        else if constexpr (std::is_same_v<T, CircleExtent>) return {v.r, v.r};
        else return {v.r_x, v.r_y};
      },
      e);
}

/// Inclusive integer pixel bounds. Not clipped to the image.
struct PixelRect {
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;

  bool empty() const { return x0 > x1 || y0 > y1; }
  bool contains(int px, int py) const { return px >= x0 && px <= x1 && py >= y0 && py <= y1; }
  bool operator==(const PixelRect&) const = default;
};

namespace detail {

inline int clamp_to_int(float v) {
  constexpr float kLimit = 1.0e9f;
  return static_cast<int>(std::clamp(v, -kLimit, kLimit));
}

}  // namespace detail

/// Integer pixels p with mean - half <= p <= mean + half, bounds evaluated
/// in float. Tiling and the render-time clip both go through here so they
/// agree on boundary pixels.
inline PixelRect pixel_window(const Vec2f& mean, int half_x, int half_y) {
  PixelRect r;
  r.x0 = detail::clamp_to_int(std::ceil(mean.x() - static_cast<float>(half_x)));
  r.x1 = detail::clamp_to_int(std::floor(mean.x() + static_cast<float>(half_x)));
  r.y0 = detail::clamp_to_int(std::ceil(mean.y() - static_cast<float>(half_y)));
  r.y1 = detail::clamp_to_int(std::floor(mean.y() + static_cast<float>(half_y)));
  return r;
}

enum class CullReason { none, frustum, opacity, degenerate };

struct ProjectedGaussian {
  CullReason cull = CullReason::frustum;
  Vec2f mean2d = Vec2f::Zero();
  Cov2D cov2d;
  Conic conic;
  float depth = 0.0f;
  Vec3f color = Vec3f::Zero();
  float opacity = 0.0f;
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  int r_o = 0;
  CullExtent extent = BaselineExtent{0};
  /// 3-sigma window; the renderer never shades pixels outside it.
  PixelRect support;

  bool culled() const { return cull != CullReason::none; }
};

// Covariance ----------------------------------------------------------------

inline Mat3f rotation_from_quaternion(const Vec4f& q_in) {
  const auto q = normalized_quaternion(q_in);
  if (!q) throw ArgumentError("rotation: quaternion cannot be normalized");
  const float w = (*q)[0], x = (*q)[1], y = (*q)[2], z = (*q)[3];
  Mat3f r;
  r << 1.f - 2.f * (y * y + z * z), 2.f * (x * y - w * z), 2.f * (x * z + w * y),
      2.f * (x * y + w * z), 1.f - 2.f * (x * x + z * z), 2.f * (y * z - w * x),
      2.f * (x * z - w * y), 2.f * (y * z + w * x), 1.f - 2.f * (x * x + y * y);
  return r;
}

/// R S S^T R^T with S = diag(scale).
inline Mat3f build_covariance3d(const Vec3f& scale, const Vec4f& rotation) {
  if (!scale.allFinite() || !rotation.allFinite())
    throw ArgumentError("build_covariance3d: non-finite input");
  if ((scale.array() <= 0.0f).any())
    throw ArgumentError("build_covariance3d: scale must be positive");
  const Mat3f m = rotation_from_quaternion(rotation) * scale.asDiagonal();
  return m * m.transpose();
}

// Extents -------------------------------------------------------------------

inline EigenExtents eigen_extents(const Cov2D& cov) {
  const double xx = cov.xx, xy = cov.xy, yy = cov.yy;
  const double det = xx * yy - xy * xy;
  if (!(xx > 0.0) || !(det > 0.0) || !std::isfinite(det))
    throw ArgumentError("eigen_extents: covariance is not positive definite");
  const double mid = 0.5 * (xx + yy);
  const double disc = std::sqrt(std::max(0.0, mid * mid - det));
  return {mid + disc, mid - disc};
}

inline int radius_baseline(double lambda_max) {
  return static_cast<int>(std::ceil(kBaselineSigmas * std::sqrt(lambda_max)));
}

/// ln(sigma / alpha_low); <= 0 means the Gaussian can never reach alpha_low.
inline double opacity_log_ratio(float sigma, float alpha_low) {
  return std::log(static_cast<double>(sigma) / static_cast<double>(alpha_low));
}

inline bool opacity_culled(float sigma, float alpha_low) { return !(sigma > alpha_low); }

/// Bounding-circle radius of the alpha_low ellipse before clamping.
inline double adaptive_radius_unclamped(double lambda_max, float sigma, float alpha_low) {
  return std::sqrt(2.0 * lambda_max * std::max(0.0, opacity_log_ratio(sigma, alpha_low)));
}

/// ceil(min(r_ad, 3 sqrt(lambda_max))), or nullopt when sigma <= alpha_low.
inline std::optional<int> radius_adaptive(double lambda_max, float sigma, float alpha_low) {
  if (opacity_culled(sigma, alpha_low)) return std::nullopt;
  const double r_ad = adaptive_radius_unclamped(lambda_max, sigma, alpha_low);
  return static_cast<int>(std::ceil(std::min(r_ad, kBaselineSigmas * std::sqrt(lambda_max))));
}

inline EllipseCoefficients ellipse_coefficients(const Cov2D& cov, float sigma, float alpha_low) {
  if (opacity_culled(sigma, alpha_low))
    throw ArgumentError("ellipse_coefficients: sigma must exceed alpha_low");
  eigen_extents(cov);  // positive-definiteness check
  const double xx = cov.xx, xy = cov.xy, yy = cov.yy;
  const double ln = opacity_log_ratio(sigma, alpha_low);
  return {yy, xx, -2.0 * xy, -2.0 * (xx * yy - xy * xy) * ln};
}

/// (x_max, y_max): extremal coordinates of the alpha_low ellipse.
inline std::pair<double, double> aabb_half_widths_unclamped(const Cov2D& cov, float sigma,
                                                            float alpha_low) {
  const double ln = std::max(0.0, opacity_log_ratio(sigma, alpha_low));
  return {std::sqrt(2.0 * cov.xx * ln), std::sqrt(2.0 * cov.yy * ln)};
}

/// Per-axis ceil(min(extreme, 3 sqrt(lambda_max))); nullopt culls.
inline std::optional<std::pair<int, int>> aabb_extents(const Cov2D& cov, float sigma,
                                                       float alpha_low, double lambda_max) {
  if (opacity_culled(sigma, alpha_low)) return std::nullopt;
  const auto [x_max, y_max] = aabb_half_widths_unclamped(cov, sigma, alpha_low);
  const double r_o = kBaselineSigmas * std::sqrt(lambda_max);
  return std::pair{static_cast<int>(std::ceil(std::min(x_max, r_o))),
                   static_cast<int>(std::ceil(std::min(y_max, r_o)))};
}

// Colour --------------------------------------------------------------------

namespace sh {
inline constexpr float C0 = 0.28209479177387814f;
inline constexpr float C1 = 0.4886025119029199f;
inline constexpr float C2[] = {1.0925484305920792f, -1.0925484305920792f, 0.31539156525252005f,
                               -1.0925484305920792f, 0.5462742152960396f};
inline constexpr float C3[] = {-0.5900435899266435f, 2.890611442640554f, -0.4570457994644658f,
                               0.3731763325901154f,  -0.4570457994644658f, 1.445305721320277f,
                               -0.5900435899266435f};
}  // namespace sh

/// Real SH colour up to degree 3, offset by 0.5 and clamped to [0,1].
inline Vec3f evaluate_sh(std::span<const Vec3f> c, const Vec3f& dir, int degree) {
  if (degree < 0 || degree > kMaxShDegree || c.size() != sh_coeff_count(degree))
    throw ArgumentError("evaluate_sh: coefficient count does not match degree");
  Vec3f out = sh::C0 * c[0];
  if (degree > 0) {
    const float x = dir.x(), y = dir.y(), z = dir.z();
    out = out - sh::C1 * y * c[1] + sh::C1 * z * c[2] - sh::C1 * x * c[3];
    if (degree > 1) {
      const float xx = x * x, yy = y * y, zz = z * z;
      const float xy = x * y, yz = y * z, xz = x * z;
      out = out + sh::C2[0] * xy * c[4] + sh::C2[1] * yz * c[5] +
            sh::C2[2] * (2.0f * zz - xx - yy) * c[6] + sh::C2[3] * xz * c[7] +
            sh::C2[4] * (xx - yy) * c[8];
      if (degree > 2) {
        out = out + sh::C3[0] * y * (3.0f * xx - yy) * c[9] + sh::C3[1] * xy * z * c[10] +
              sh::C3[2] * y * (4.0f * zz - xx - yy) * c[11] +
              sh::C3[3] * z * (2.0f * zz - 3.0f * xx - 3.0f * yy) * c[12] +
              sh::C3[4] * x * (4.0f * zz - xx - yy) * c[13] +
              sh::C3[5] * z * (xx - yy) * c[14] + sh::C3[6] * x * (xx - 3.0f * yy) * c[15];
      }
    }
  }
  out.array() += 0.5f;
  return out.cwiseMax(0.0f).cwiseMin(1.0f);
}

// Projection ----------------------------------------------------------------

/// Screen-space covariance J W Sigma W^T J^T plus `dilation` on the diagonal,
/// with the Jacobian taken at the view position clamped to 1.3x the fov.
inline Cov2D project_covariance(const Mat3f& cov3d, const Vec3f& p_view, const Camera& cam,
                                float dilation) {
  const float limx = kFovClampFactor * cam.tan_fovx();
  const float limy = kFovClampFactor * cam.tan_fovy();
  const float z = p_view.z();
  const float tx = std::clamp(p_view.x() / z, -limx, limx) * z;
  const float ty = std::clamp(p_view.y() / z, -limy, limy) * z;
  Eigen::Matrix<float, 2, 3> jac;
  jac << cam.fx / z, 0.0f, -(cam.fx * tx) / (z * z), 0.0f, cam.fy / z, -(cam.fy * ty) / (z * z);
  const Eigen::Matrix<float, 2, 3> t = jac * cam.rotation();
  const Eigen::Matrix2f cov = t * cov3d * t.transpose();
  return {cov(0, 0) + dilation, cov(0, 1), cov(1, 1) + dilation};
}

inline ProjectedGaussian project_gaussian(const Gaussian3D& g, int sh_degree, const Camera& cam,
                                          const RenderConfig& cfg) {
  ProjectedGaussian pg;
  const Vec3f p_view = cam.rotation() * g.center + cam.translation();
  if (!(p_view.z() > cam.near_plane)) {
    pg.cull = CullReason::frustum;
    return pg;
  }
  pg.depth = p_view.z();
  pg.opacity = g.opacity;
  pg.cov2d = project_covariance(build_covariance3d(g.scale, g.rotation), p_view, cam, cfg.dilation);
  const float det = pg.cov2d.det();
  if (!(det > 0.0f) || !(pg.cov2d.xx > 0.0f) || !std::isfinite(det)) {
    pg.cull = CullReason::degenerate;
    return pg;
  }
  const float det_inv = 1.0f / det;
  pg.conic = {pg.cov2d.yy * det_inv, -pg.cov2d.xy * det_inv, pg.cov2d.xx * det_inv};
  pg.mean2d = Vec2f(cam.fx * p_view.x() / p_view.z() + cam.cx(),
                    cam.fy * p_view.y() / p_view.z() + cam.cy());

  const EigenExtents eig = eigen_extents(pg.cov2d);
  pg.lambda_max = eig.lambda_max;
  pg.lambda_min = eig.lambda_min;
  pg.r_o = radius_baseline(eig.lambda_max);
  pg.support = pixel_window(pg.mean2d, pg.r_o, pg.r_o);

  // sigma <= alpha_low cannot pass the alpha test anywhere; dropped in every
  // mode so the modes stay pixel-identical.
  if (opacity_culled(g.opacity, cfg.alpha_low)) {
    pg.cull = CullReason::opacity;
    return pg;
  }
  switch (cfg.mode) {
    case CullMode::baseline:
      pg.extent = BaselineExtent{pg.r_o};
      break;
    case CullMode::circle:
      pg.extent = CircleExtent{*radius_adaptive(eig.lambda_max, g.opacity, cfg.alpha_low)};
      break;
    case CullMode::aabb: {
      const auto [rx, ry] = *aabb_extents(pg.cov2d, g.opacity, cfg.alpha_low, eig.lambda_max);
      pg.extent = AabbExtent{rx, ry};
      break;
    }
  }
  const Vec3f dir = (g.center - cam.position()).normalized();
  pg.color = evaluate_sh(g.sh_coeffs, dir, sh_degree);
  pg.cull = CullReason::none;
  return pg;
}

inline void check_render_config(const RenderConfig& cfg) {
  if (!(cfg.alpha_low > 0.0f && cfg.alpha_low < 1.0f))
    throw ArgumentError("alpha_low must lie in (0, 1)");
  if (!(cfg.dilation >= 0.0f) || !std::isfinite(cfg.dilation))
    throw ArgumentError("dilation must be finite and >= 0");
  if (!(cfg.termination >= 0.0f && cfg.termination < 1.0f))
    throw ArgumentError("termination threshold must lie in [0, 1)");
}

/// Preprocess stage over the whole scene; output index == Gaussian index.
inline std::vector<ProjectedGaussian> preprocess(const Scene& scene, const Camera& cam,
                                                 const RenderConfig& cfg) {
  check_render_config(cfg);
  validate_camera(cam);
  std::vector<ProjectedGaussian> out(scene.size());
  parallel_for(scene.size(), cfg.threads, [&](std::size_t i) {
    out[i] = project_gaussian(scene.gaussians[i], scene.sh_degree, cam, cfg);
  });
  return out;
}

}  // namespace tilesplat
