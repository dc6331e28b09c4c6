// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace tilesplat {
namespace {

// Frozen with mpmath at 30 digits: sqrt(2 ln(sigma / alpha_low)) * sqrt(lambda).
constexpr double kRadLn255 = 3.3290429513658859990;   // lambda=1, sigma=1, alpha=float(1/255)
constexpr double kRad4Tenth = 5.0901304126038896311;  // lambda=4, sigma=0.1, alpha=1/255

Camera identity_camera(int size, float focal) {
  Camera cam;
  cam.width = cam.height = size;
  cam.fx = cam.fy = focal;
  return cam;
}

Gaussian3D isotropic_at(const Vec3f& c, float s, float opacity) {
  Gaussian3D g;
  g.center = c;
  g.scale = Vec3f(s, s, s);
  g.opacity = opacity;
  return g;
}

/// Random positive definite 2x2 with eigenvalues in [lo, hi].
Cov2D random_cov(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double l1 = lo + (hi - lo) * u(rng), l2 = lo + (hi - lo) * u(rng);
  const double th = std::numbers::pi * u(rng);
  const double c = std::cos(th), s = std::sin(th);
  return {static_cast<float>(l1 * c * c + l2 * s * s), static_cast<float>((l1 - l2) * c * s),
          static_cast<float>(l1 * s * s + l2 * c * c)};
}

TEST(BuildCovariance3d, IdentityAndScaling) {
  EXPECT_TRUE(build_covariance3d(Vec3f(1, 1, 1), Vec4f(1, 0, 0, 0)).isApprox(Mat3f::Identity()));
  const Mat3f d = build_covariance3d(Vec3f(2, 1, 1), Vec4f(1, 0, 0, 0));
  EXPECT_TRUE(d.isApprox(Vec3f(4, 1, 1).asDiagonal().toDenseMatrix()));
}

TEST(BuildCovariance3d, QuarterTurnAboutZPermutesAxes) {
  const float h = static_cast<float>(std::sqrt(0.5));
  const Mat3f got = build_covariance3d(Vec3f(1, 2, 3), Vec4f(h, 0, 0, h));
  // Oracle: explicit rotation matrix product.
  Mat3f rz;
  rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Mat3f want = rz * Vec3f(1, 4, 9).asDiagonal() * rz.transpose();
  EXPECT_TRUE(got.isApprox(want, 1e-6f));
  EXPECT_NEAR(got(0, 0), 4.0f, 1e-5f);
  EXPECT_NEAR(got(1, 1), 1.0f, 1e-5f);
  EXPECT_NEAR(got(2, 2), 9.0f, 1e-5f);
}

TEST(BuildCovariance3d, RejectsBadInput) {
  EXPECT_THROW(build_covariance3d(Vec3f(1, NAN, 1), Vec4f(1, 0, 0, 0)), ArgumentError);
  EXPECT_THROW(build_covariance3d(Vec3f(1, 0, 1), Vec4f(1, 0, 0, 0)), ArgumentError);
  EXPECT_THROW(build_covariance3d(Vec3f(1, 1, 1), Vec4f(0, 0, 0, 0)), ArgumentError);
}

TEST(ProjectGaussian, CameraCentreIsFrustumCulled) {
  const Camera cam = identity_camera(64, 50.0f);
  const auto pg = project_gaussian(isotropic_at(Vec3f::Zero(), 1.0f, 0.5f), 0, cam, RenderConfig{});
  EXPECT_EQ(pg.cull, CullReason::frustum);
  const auto behind =
      project_gaussian(isotropic_at(Vec3f(0, 0, -3), 1.0f, 0.5f), 0, cam, RenderConfig{});
  EXPECT_EQ(behind.cull, CullReason::frustum);
}

TEST(ProjectGaussian, OnAxisIsotropicMatchesNumericJacobian) {
  const float f = 80.0f, s = 0.2f, d = 4.0f;
  const Camera cam = identity_camera(64, f);
  const auto pg = project_gaussian(isotropic_at(Vec3f(0, 0, d), s, 0.5f), 0, cam, RenderConfig{});
  ASSERT_FALSE(pg.culled());

  // Oracle: central differences of the pinhole map, J Sigma J^T + dilation.
  auto proj = [&](double x, double y, double z) {
    return std::pair{f * x / z + 32.0, f * y / z + 32.0};
  };
  const double h = 1e-4;
  double jac[2][3];
  for (int k = 0; k < 3; ++k) {
    double p[3] = {0, 0, d}, m[3] = {0, 0, d};
    p[k] += h;
    m[k] -= h;
    const auto [pu, pv] = proj(p[0], p[1], p[2]);
    const auto [mu, mv] = proj(m[0], m[1], m[2]);
    jac[0][k] = (pu - mu) / (2 * h);
    jac[1][k] = (pv - mv) / (2 * h);
  }
  double cxx = 0, cyy = 0, cxy = 0;
  for (int k = 0; k < 3; ++k) {
    cxx += jac[0][k] * jac[0][k] * s * s;
    cyy += jac[1][k] * jac[1][k] * s * s;
    cxy += jac[0][k] * jac[1][k] * s * s;
  }
  const double closed = (f * s / d) * (f * s / d) + kDefaultDilation;
  EXPECT_NEAR(cxx + kDefaultDilation, closed, 1e-5);
  EXPECT_NEAR(pg.cov2d.xx, closed, 1e-4);
  EXPECT_NEAR(pg.cov2d.yy, closed, 1e-4);
  EXPECT_NEAR(pg.cov2d.xy, cxy, 1e-6);
  EXPECT_FLOAT_EQ(pg.mean2d.x(), 32.0f);
  EXPECT_FLOAT_EQ(pg.depth, d);
}

TEST(ProjectGaussian, ConicInvertsCovariance) {
  const Camera cam = testing::desk_camera(128);
  const Scene scene = testing::mixed_scene(4, 300);
  for (const auto& g : scene.gaussians) {
    const auto pg = project_gaussian(g, scene.sh_degree, cam, RenderConfig{});
    if (pg.culled()) continue;
    Eigen::Matrix2d cov, con;
    cov << pg.cov2d.xx, pg.cov2d.xy, pg.cov2d.xy, pg.cov2d.yy;
    con << pg.conic.a, pg.conic.b, pg.conic.b, pg.conic.c;
    EXPECT_TRUE((con * cov - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-5);
    EXPECT_GT(pg.lambda_min, 0.0);
    EXPECT_GE(pg.lambda_max, pg.lambda_min);
    EXPECT_GT(pg.depth, cam.near_plane);
  }
}

TEST(EigenExtents, ClosedForm) {
  const auto a = eigen_extents({2, 0, 1});
  EXPECT_DOUBLE_EQ(a.lambda_max, 2.0);
  EXPECT_DOUBLE_EQ(a.lambda_min, 1.0);
  // [[2,1],[1,2]]: (2 - l)^2 - 1 = 0 -> l = 3, 1.
  const auto b = eigen_extents({2, 1, 2});
  EXPECT_DOUBLE_EQ(b.lambda_max, 3.0);
  EXPECT_DOUBLE_EQ(b.lambda_min, 1.0);
  const auto c = eigen_extents({5, 0, 5});
  EXPECT_DOUBLE_EQ(c.lambda_max, 5.0);
  EXPECT_DOUBLE_EQ(c.lambda_min, 5.0);
  EXPECT_THROW(eigen_extents({1, 2, 1}), ArgumentError);
  EXPECT_THROW(eigen_extents({-1, 0, -1}), ArgumentError);
}

TEST(RadiusBaseline, ThreeSigmaCeiling) {
  EXPECT_EQ(radius_baseline(1.0), 3);
  EXPECT_EQ(radius_baseline(4.0), 6);
  EXPECT_EQ(radius_baseline(2.0), 5);  // ceil(4.2426...)
}

TEST(RadiusAdaptive, GoldenValues) {
  EXPECT_NEAR(adaptive_radius_unclamped(1.0, 1.0f, kAlphaLow), kRadLn255, 1e-9);
  EXPECT_EQ(radius_adaptive(1.0, 1.0f, kAlphaLow), 3);  // min(3.329, 3)
  // ceil comes after the clamp: min(5.090, 6) = 5.090 -> 6.
  EXPECT_NEAR(adaptive_radius_unclamped(4.0, 0.1f, kAlphaLow), kRad4Tenth, 1e-6);
  EXPECT_EQ(radius_adaptive(4.0, 0.1f, kAlphaLow), 6);
  EXPECT_EQ(radius_adaptive(1.0, kAlphaLow, kAlphaLow), std::nullopt);
  EXPECT_EQ(radius_adaptive(1.0, 0.001f, kAlphaLow), std::nullopt);
}

TEST(RadiusAdaptive, MonotoneInOpacityAndLambda) {
  int prev = 0;
  for (float s = 0.005f; s <= 1.0f; s += 0.005f) {
    const int r = *radius_adaptive(9.0, s, kAlphaLow);
    EXPECT_GE(r, prev);
    prev = r;
  }
  prev = 0;
  for (double l = 0.3; l < 400.0; l *= 1.07) {
    const int r = *radius_adaptive(l, 0.2f, kAlphaLow);
    EXPECT_GE(r, prev);
    EXPECT_LE(r, radius_baseline(l));
    prev = r;
  }
}

TEST(EllipseCoefficients, UnitCovariance) {
  const float alpha = 0.25f;
  const float sigma = static_cast<float>(0.25 * std::numbers::e);
  const auto e = ellipse_coefficients({1, 0, 1}, sigma, alpha);
  EXPECT_DOUBLE_EQ(e.A, 1.0);
  EXPECT_DOUBLE_EQ(e.B, 1.0);
  EXPECT_DOUBLE_EQ(e.C, 0.0);
  EXPECT_NEAR(e.D, -2.0, 1e-6);
  EXPECT_DOUBLE_EQ(ellipse_coefficients({3, 0, 7}, 0.5f, kAlphaLow).C, 0.0);
  EXPECT_THROW(ellipse_coefficients({1, 0, 1}, kAlphaLow, kAlphaLow), ArgumentError);
}

TEST(EllipseCoefficients, BoundaryIsTheAlphaLowContour) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Cov2D cov = random_cov(rng, 0.3, 80.0);
    const float sigma = static_cast<float>(0.01 + 0.99 * u(rng));
    const auto e = ellipse_coefficients(cov, sigma, kAlphaLow);
    const double ln = opacity_log_ratio(sigma, kAlphaLow);
    const double det = double(cov.xx) * cov.yy - double(cov.xy) * cov.xy;
    const auto [x_max, y_max] = aabb_half_widths_unclamped(cov, sigma, kAlphaLow);
    for (int k = 1; k < 20; ++k) {
      // Solve B y^2 + (C x) y + (A x^2 + D) = 0 for boundary points.
      const double x = x_max * (-1.0 + 2.0 * k / 20.0);
      const double qa = e.B, qb = e.C * x, qc = e.A * x * x + e.D;
      const double disc = qb * qb - 4 * qa * qc;
      ASSERT_GE(disc, 0.0) << "x inside (-x_max, x_max) must hit the ellipse";
      for (double sgn : {-1.0, 1.0}) {
        const double y = (-qb + sgn * std::sqrt(disc)) / (2 * qa);
        const double maha = (cov.yy * x * x - 2.0 * cov.xy * x * y + cov.xx * y * y) / det;
        EXPECT_NEAR(maha, 2.0 * ln, 1e-6 * std::max(1.0, 2.0 * ln));
        EXPECT_LE(std::abs(y), y_max * (1 + 1e-9) + 1e-9);
      }
    }
    // x_max is the extreme: the discriminant vanishes there.
    const double qb = e.C * x_max, qc = e.A * x_max * x_max + e.D;
    EXPECT_NEAR((qb * qb - 4 * e.B * qc) / (e.B * std::abs(e.D)), 0.0, 1e-6);
  }
}

TEST(AabbExtents, GoldenValues) {
  const auto [x_max, y_max] = aabb_half_widths_unclamped({4, 0, 1}, 1.0f, kAlphaLow);
  EXPECT_NEAR(x_max, 2.0 * kRadLn255, 1e-9);
  EXPECT_NEAR(y_max, kRadLn255, 1e-9);
  const auto ext = aabb_extents({4, 0, 1}, 1.0f, kAlphaLow, 4.0);
  ASSERT_TRUE(ext);
  EXPECT_EQ(ext->first, 6);   // clamped to r_o = 6
  EXPECT_EQ(ext->second, 4);  // ceil(3.329)
  EXPECT_EQ(aabb_extents({4, 0, 1}, kAlphaLow, kAlphaLow, 4.0), std::nullopt);
}

TEST(AabbExtents, IsotropicDegeneratesToCircle) {
  for (float v : {0.3f, 1.0f, 2.5f, 17.0f, 90.0f}) {
    for (float s : {0.01f, 0.1f, 0.5f, 1.0f}) {
      const Cov2D cov{v, 0.0f, v};
      const double lmax = eigen_extents(cov).lambda_max;
      const auto r = radius_adaptive(lmax, s, kAlphaLow);
      const auto ab = aabb_extents(cov, s, kAlphaLow, lmax);
      ASSERT_TRUE(r && ab);
      EXPECT_EQ(ab->first, *r);
      EXPECT_EQ(ab->second, *r);
    }
  }
}

TEST(CullExtents, NestAabbInCircleInBaseline) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20000; ++trial) {
    const Cov2D cov = random_cov(rng, 0.3, 500.0);
    const float sigma = static_cast<float>(0.004 + 0.996 * u(rng));
    const double lmax = eigen_extents(cov).lambda_max;
    const int r_o = radius_baseline(lmax);
    const auto r = radius_adaptive(lmax, sigma, kAlphaLow);
    const auto ab = aabb_extents(cov, sigma, kAlphaLow, lmax);
    ASSERT_TRUE(r && ab);
    EXPECT_LE(*r, r_o);
    EXPECT_LE(ab->first, *r);
    EXPECT_LE(ab->second, *r);
  }
}

/// Every pixel on the one-pixel ring just outside the extent rectangle gets
/// a composited opacity below alpha_low. Inside the 3-sigma support window
/// that is the raw Gaussian opacity itself.
TEST(CullExtents, ContainmentOnRandomSplats) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t checked = 0, inside_support = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    ProjectedGaussian pg;
    pg.cull = CullReason::none;
    pg.cov2d = random_cov(rng, 0.3, 200.0);
    const float det = pg.cov2d.det();
    pg.conic = {pg.cov2d.yy / det, -pg.cov2d.xy / det, pg.cov2d.xx / det};
    pg.opacity = static_cast<float>(0.004 + 0.996 * u(rng));
    pg.mean2d = Vec2f(static_cast<float>(100 * u(rng)), static_cast<float>(100 * u(rng)));
    const double lmax = eigen_extents(pg.cov2d).lambda_max;
    pg.r_o = radius_baseline(lmax);
    pg.support = pixel_window(pg.mean2d, pg.r_o, pg.r_o);
    const auto ab = aabb_extents(pg.cov2d, pg.opacity, kAlphaLow, lmax);
    const auto rc = radius_adaptive(lmax, pg.opacity, kAlphaLow);
    for (auto [ex, ey] : {*ab, std::pair{*rc, *rc}}) {
      const PixelRect r = pixel_window(pg.mean2d, ex, ey);
      auto probe = [&](int x, int y) {
        EXPECT_LT(splat_alpha(pg, x, y), kAlphaLow);
        if (pg.support.contains(x, y)) {
          EXPECT_LT(gaussian_alpha(pg, x, y), kAlphaLow);
          ++inside_support;
        }
        ++checked;
      };
      for (int x = r.x0 - 1; x <= r.x1 + 1; ++x) {
        probe(x, r.y0 - 1);
        probe(x, r.y1 + 1);
      }
      for (int y = r.y0; y <= r.y1; ++y) {
        probe(r.x0 - 1, y);
        probe(r.x1 + 1, y);
      }
    }
  }
  EXPECT_GT(checked, 10000u);
  EXPECT_GT(inside_support, checked / 4);
}

/// Above sigma = alpha_low * e^4.5 the alpha_low contour reaches past
/// 3 sigma, so the clamp to r_o leaves opaque-enough pixels outside every
/// extent. Those pixels are outside the support window too.
TEST(CullExtents, ThreeSigmaClampCutsTheContourForDenseSplats) {
  ProjectedGaussian pg;
  pg.cull = CullReason::none;
  pg.cov2d = {1, 0, 1};
  pg.conic = {1, 0, 1};
  pg.opacity = 1.0f;
  pg.mean2d = Vec2f(10.01f, 10.0f);
  pg.r_o = radius_baseline(1.0);
  pg.support = pixel_window(pg.mean2d, pg.r_o, pg.r_o);
  EXPECT_EQ(*radius_adaptive(1.0, 1.0f, kAlphaLow), 3);
  EXPECT_GT(adaptive_radius_unclamped(1.0, 1.0f, kAlphaLow), 3.0);
  const PixelRect r = pixel_window(pg.mean2d, 3, 3);
  EXPECT_EQ(r.x0, 8);
  EXPECT_GE(gaussian_alpha(pg, r.x0 - 1, 10), kAlphaLow);  // dx = 3.01
  EXPECT_EQ(splat_alpha(pg, r.x0 - 1, 10), 0.0f);
  // Just below the threshold the contour fits inside 3 sigma.
  const float sigma = static_cast<float>(kAlphaLow * std::exp(4.5) * 0.999);
  EXPECT_LT(adaptive_radius_unclamped(1.0, sigma, kAlphaLow), 3.0);
}

TEST(EvaluateSh, DegreeZeroIsConstant) {
  const std::vector<Vec3f> mid{Vec3f::Zero()};
  EXPECT_EQ(evaluate_sh(mid, Vec3f(0, 0, 1), 0), Vec3f(0.5f, 0.5f, 0.5f));
  const std::vector<Vec3f> c{Vec3f(0.25f, -0.25f, 0.1f) / static_cast<float>(kShC0)};
  const Vec3f a = evaluate_sh(c, Vec3f(0, 0, 1), 0);
  EXPECT_NEAR(a.x(), 0.75f, 1e-6f);
  EXPECT_NEAR(a.y(), 0.25f, 1e-6f);
  EXPECT_NEAR(a.z(), 0.6f, 1e-6f);
  EXPECT_EQ(a, evaluate_sh(c, Vec3f(1, 0, 0), 0));
  EXPECT_EQ(a, evaluate_sh(c, Vec3f(0, -1, 0), 0));
  // Clamped into [0,1].
  const std::vector<Vec3f> hot{Vec3f(10, -10, 0)};
  EXPECT_EQ(evaluate_sh(hot, Vec3f(0, 0, 1), 0), Vec3f(1, 0, 0.5f));
}

TEST(EvaluateSh, LinearBandIsOdd) {
  std::vector<Vec3f> c(4, Vec3f::Zero());
  const float k = 0.2f;
  c[2] = Vec3f(k, k, k);  // z-linear band
  const Vec3f up = evaluate_sh(c, Vec3f(0, 0, 1), 1);
  const Vec3f down = evaluate_sh(c, Vec3f(0, 0, -1), 1);
  EXPECT_NEAR(up.x() - down.x(), 2.0f * sh::C1 * k, 1e-6f);
  EXPECT_NEAR(up.x() - 0.5f, 0.5f - down.x(), 1e-7f);
  EXPECT_THROW(evaluate_sh(c, Vec3f(0, 0, 1), 0), ArgumentError);
  EXPECT_THROW(evaluate_sh(c, Vec3f(0, 0, 1), 2), ArgumentError);
}

/// The 16 basis functions are orthonormal on the sphere (quadrature on a
/// Fibonacci lattice).
TEST(EvaluateSh, BasisIsOrthonormal) {
  constexpr int kPoints = 40000;
  constexpr float kAmp = 0.1f;  // keep 0.5 + amp * Y inside [0,1]
  std::vector<std::array<double, 16>> basis(kPoints);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int p = 0; p < kPoints; ++p) {
    const double z = 1.0 - (2.0 * p + 1.0) / kPoints;
    const double r = std::sqrt(1.0 - z * z);
    const Vec3f dir(static_cast<float>(r * std::cos(golden * p)),
                    static_cast<float>(r * std::sin(golden * p)), static_cast<float>(z));
    for (int i = 0; i < 16; ++i) {
      std::vector<Vec3f> c(16, Vec3f::Zero());
      c[i] = Vec3f(kAmp, 0, 0);
      basis[p][i] = (evaluate_sh(c, dir, 3).x() - 0.5) / kAmp;
    }
  }
  for (int i = 0; i < 16; ++i) {
    for (int j = i; j < 16; ++j) {
      double acc = 0.0;
      for (int p = 0; p < kPoints; ++p) acc += basis[p][i] * basis[p][j];
      acc *= 4.0 * std::numbers::pi / kPoints;
      EXPECT_NEAR(acc, i == j ? 1.0 : 0.0, 2e-3) << i << "," << j;
    }
  }
}

TEST(Preprocess, OpacityCullAppliesInEveryMode) {
  const Camera cam = testing::desk_camera(64);
  Scene s;
  s.gaussians = {isotropic_at(Vec3f::Zero(), 0.1f, 0.5f), isotropic_at(Vec3f::Zero(), 0.1f, 0.003f)};
  for (auto mode : {CullMode::baseline, CullMode::circle, CullMode::aabb}) {
    RenderConfig cfg;
    cfg.mode = mode;
    const auto out = preprocess(s, cam, cfg);
    EXPECT_EQ(out[0].cull, CullReason::none);
    EXPECT_EQ(out[1].cull, CullReason::opacity);
  }
  RenderConfig bad;
  bad.alpha_low = 0.0f;
  EXPECT_THROW(preprocess(s, cam, bad), ArgumentError);
}

TEST(Preprocess, ThreadCountDoesNotChangeOutput) {
  const Camera cam = testing::desk_camera(256);
  const Scene s = testing::mixed_scene(8, 3000);
  RenderConfig one, many;
  many.threads = 7;
  const auto a = preprocess(s, cam, one);
  const auto b = preprocess(s, cam, many);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].cull, b[i].cull);
    EXPECT_EQ(a[i].mean2d, b[i].mean2d);
    EXPECT_EQ(a[i].support, b[i].support);
    EXPECT_EQ(half_extents(a[i].extent), half_extents(b[i].extent));
  }
}

}  // namespace
}  // namespace tilesplat
