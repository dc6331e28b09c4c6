// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Image metrics, the pixel-load balancing loss and a finite-difference
// opacity optimizer that exercises it.

#pragma once

#include "tilesplat/pipeline.hpp"
#include "tilesplat/render.hpp"
#include "tilesplat/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace tilesplat {

/// Fixed-order pairwise summation; the grouping depends only on the length.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

// Loads ---------------------------------------------------------------------

struct LoadStats {
  double mean = 0.0;
  double std = 0.0;  // population
  std::uint32_t min = 0;
  std::uint32_t max = 0;
  std::vector<std::size_t> histogram;  // histogram[k] = #pixels with load k
};

namespace detail {

inline double population_std(std::span<const std::uint32_t> counts) {
  std::vector<double> v(counts.begin(), counts.end());
  const double n = static_cast<double>(v.size());
  const double mean = pairwise_sum(v) / n;
  for (double& x : v) x = (x - mean) * (x - mean);
  return std::sqrt(pairwise_sum(v) / n);
}

}  // namespace detail

/// Population standard deviation of the per-pixel loads.
inline double load_loss(const LoadMap& map) {
  if (map.counts.empty()) throw ArgumentError("load_loss: empty load map");
  return detail::population_std(map.counts);
}

inline LoadStats load_stats(const LoadMap& map) {
  if (map.counts.empty()) throw ArgumentError("load_stats: empty load map");
  LoadStats s;
  std::vector<double> v(map.counts.begin(), map.counts.end());
  s.mean = pairwise_sum(v) / static_cast<double>(v.size());
  s.std = detail::population_std(map.counts);
  const auto [lo, hi] = std::minmax_element(map.counts.begin(), map.counts.end());
  s.min = *lo;
  s.max = *hi;
  s.histogram.assign(static_cast<std::size_t>(s.max) + 1, 0);
  for (auto c : map.counts) ++s.histogram[c];
  return s;
}

// Image metrics -------------------------------------------------------------

namespace detail {

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (a.width != b.width || a.height != b.height || a.pixels.size() != b.pixels.size())
    throw ArgumentError(std::string(what) + ": image dimensions differ");
  if (a.pixels.empty()) throw ArgumentError(std::string(what) + ": empty image");
}

}  // namespace detail

inline double l1_loss(const Image& a, const Image& b) {
  detail::require_same_shape(a, b, "l1_loss");
  std::vector<double> d(a.pixels.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = std::abs(static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]));
  return pairwise_sum(d) / static_cast<double>(d.size());
}

inline double mse(const Image& a, const Image& b) {
  detail::require_same_shape(a, b, "mse");
  std::vector<double> d(a.pixels.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double e = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    d[i] = e * e;
  }
  return pairwise_sum(d) / static_cast<double>(d.size());
}

/// Peak signal-to-noise ratio in dB for unit peak; +infinity when equal.
inline double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

/// Written in place of +infinity in CSV output.
inline constexpr double kPsnrIdenticalSentinel = 999.0;

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const int half = size / 2;
  for (int i = 0; i < size; ++i) {
    const double x = i - half;
    w[i] = std::exp(-(x * x) / (2.0 * sigma * sigma));
  }
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= s;
  return w;
}

/// Separable "same" convolution with zero padding.
inline std::vector<double> blur(const std::vector<double>& src, int w, int h,
                                const std::vector<double>& k) {
  const int half = static_cast<int>(k.size()) / 2;
  std::vector<double> tmp(src.size(), 0.0), out(src.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = 0; i < static_cast<int>(k.size()); ++i) {
        const int xx = x + i - half;
        if (xx >= 0 && xx < w) s += k[i] * src[static_cast<std::size_t>(y) * w + xx];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = 0; i < static_cast<int>(k.size()); ++i) {
        const int yy = y + i - half;
        if (yy >= 0 && yy < h) s += k[i] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = s;
    }
  return out;
}

}  // namespace detail

/// Mean SSIM, 11x11 Gaussian window (sigma 1.5), zero-padded, C1 = 0.01^2,
/// C2 = 0.03^2, averaged over pixels and channels.
inline double ssim(const Image& a, const Image& b) {
  detail::require_same_shape(a, b, "ssim");
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const auto k = detail::gaussian_window(11, 1.5);
  const std::size_t n = a.pixel_count();
  std::vector<double> all;
  all.reserve(n * 3);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a.pixels[i * 3 + c];
      y[i] = b.pixels[i * 3 + c];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = detail::blur(x, a.width, a.height, k);
    const auto my = detail::blur(y, a.width, a.height, k);
    const auto sxx = detail::blur(xx, a.width, a.height, k);
    const auto syy = detail::blur(yy, a.width, a.height, k);
    const auto sxy = detail::blur(xy, a.width, a.height, k);
    for (std::size_t i = 0; i < n; ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cxy = sxy[i] - mx[i] * my[i];
      const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2);
      const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
      all.push_back(num / den);
    }
  }
  return pairwise_sum(all) / static_cast<double>(all.size());
}

// Total loss ----------------------------------------------------------------

struct LossWeights {
  double lambda_l1 = 0.44;
  double lambda_ssim = 0.11;
  double lambda_load = 0.45;

  void validate() const {
    if (lambda_l1 < 0.0 || lambda_ssim < 0.0 || lambda_load < 0.0)
      throw ArgumentError("LossWeights: weights must be non-negative");
    if (std::abs(lambda_l1 + lambda_ssim + lambda_load - 1.0) > 1e-9)
      throw ArgumentError("LossWeights: weights must sum to 1");
  }
};

inline double combine_losses(double l1, double ssim_value, double load_std, const LossWeights& w) {
  w.validate();
  return w.lambda_l1 * l1 + w.lambda_ssim * (1.0 - ssim_value) + w.lambda_load * load_std;
}

inline double total_loss(const Image& rendered, const Image& reference, const LoadMap& load,
                         const LossWeights& w) {
  w.validate();
  return combine_losses(l1_loss(rendered, reference), ssim(rendered, reference), load_loss(load),
                        w);
}

// Toy optimizer -------------------------------------------------------------

struct BalanceStep {
  Scene scene;
  double loss_before = 0.0;
  double loss_after = 0.0;
  double load_std_before = 0.0;
  double load_std_after = 0.0;
};

struct BalanceOptions {
  /// Central-difference half step, in opacity-logit units.
  double fd_epsilon = 0.5;
  RenderConfig render;
};

inline constexpr std::size_t kMaxBalanceGaussians = 500;

/// One gradient-descent step of `step` on the opacity logits, with the
/// gradient of total_loss taken by central finite differences.
inline BalanceStep toy_balance_step(const Scene& scene, const Camera& cam, const Image& reference,
                                    const LossWeights& w, double step,
                                    const BalanceOptions& opt = {}) {
  if (!(step > 0.0)) throw ArgumentError("toy_balance_step: step must be positive");
  if (scene.size() > kMaxBalanceGaussians)
    throw ArgumentError("toy_balance_step: at most 500 Gaussians supported");
  if (scene.sh_degree != 0) throw ArgumentError("toy_balance_step: SH degree must be 0");
  if (!(opt.fd_epsilon > 0.0)) throw ArgumentError("toy_balance_step: fd_epsilon must be > 0");
  w.validate();

  auto evaluate = [&](const Scene& s, double* load_std = nullptr) {
    const auto r = rasterize(s, cam, opt.render);
    const double std_l = load_loss(r.output.load);
    if (load_std) *load_std = std_l;
    return combine_losses(l1_loss(r.output.image, reference), ssim(r.output.image, reference),
                          std_l, w);
  };
  auto logistic = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  auto logit = [](double p) { return std::log(p / (1.0 - p)); };
  // Keep opacities inside (0, 1) so the logit stays finite.
  constexpr double kOpacityLo = 1e-4, kOpacityHi = 1.0 - 1e-4;

  BalanceStep out;
  out.loss_before = evaluate(scene, &out.load_std_before);

  std::vector<double> grad(scene.size(), 0.0);
  Scene probe = scene;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const float original = scene.gaussians[i].opacity;
    const double theta = logit(std::clamp<double>(original, kOpacityLo, kOpacityHi));
    probe.gaussians[i].opacity = static_cast<float>(logistic(theta + opt.fd_epsilon));
    const double up = evaluate(probe);
    probe.gaussians[i].opacity = static_cast<float>(logistic(theta - opt.fd_epsilon));
    const double down = evaluate(probe);
    probe.gaussians[i].opacity = original;
    grad[i] = (up - down) / (2.0 * opt.fd_epsilon);
  }

  out.scene = scene;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (grad[i] == 0.0) continue;
    auto& g = out.scene.gaussians[i];
    const double theta = logit(std::clamp<double>(g.opacity, kOpacityLo, kOpacityHi));
    g.opacity = static_cast<float>(
        std::clamp(logistic(theta - step * grad[i]), kOpacityLo, kOpacityHi));
  }
  out.loss_after = evaluate(out.scene, &out.load_std_after);
  return out;
}

}  // namespace tilesplat
