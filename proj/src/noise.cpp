// Copyright 2026 The ctiqa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctiqa/noise.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ctiqa/errors.hpp"

namespace ctiqa {

namespace {

struct PatchStat {
  double mean;
  double variance;
};

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mad_of(const std::vector<double>& values) {
  double med = median_of(std::vector<double>(values));
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::fabs(values[i] - med);
  return median_of(std::move(dev));
}

/// Plane-detrended patch statistics. The best-fit plane over the patch grid
/// removes smooth anatomy (any locally linear intensity ramp exactly); the
/// residual carries the noise. Variance uses n-3 degrees of freedom since the
/// plane eats three.
bool patch_stats(const ImageBuffer& img, std::size_t x0, std::size_t y0,
                 const EstimatorConfig& cfg, PatchStat* out) {
  const std::size_t p = cfg.patch_size;
  const double n = double(p * p);
  const double center = (double(p) - 1.0) / 2.0;

  double sum = 0.0, sum_cx = 0.0, sum_cy = 0.0, sum_cxx = 0.0;
  std::size_t saturated = 0;
  for (std::size_t dy = 0; dy < p; ++dy) {
    for (std::size_t dx = 0; dx < p; ++dx) {
      double v = img.at(x0 + dx, y0 + dy);
      sum += v;
      sum_cx += (double(dx) - center) * v;
      sum_cy += (double(dy) - center) * v;
      if (v <= 0.0 || v >= 1.0) ++saturated;
    }
  }
  // Sum of squared centered coordinates; same for x and y on a square grid.
  for (std::size_t d = 0; d < p; ++d) {
    double c = double(d) - center;
    sum_cxx += c * c;
  }
  sum_cxx *= double(p);

  if (double(saturated) > cfg.saturated_fraction_max * n) return false;

  const double mean = sum / n;
  const double beta_x = sum_cx / sum_cxx;
  const double beta_y = sum_cy / sum_cxx;

  double ss2 = 0.0, ss4 = 0.0;
  for (std::size_t dy = 0; dy < p; ++dy) {
    for (std::size_t dx = 0; dx < p; ++dx) {
      double cx = double(dx) - center;
      double cy = double(dy) - center;
      double r = img.at(x0 + dx, y0 + dy) - mean - beta_x * cx - beta_y * cy;
      ss2 += r * r;
      ss4 += r * r * r * r;
    }
  }

  // Kurtosis screen, only where the residual is above floating-point dust
  // (16-bit quantization alone gives ~2e-11): Gaussian residuals sit near 3,
  // textured patches spike high, hard two-level splits land near 1.
  if (ss2 / (n - 3.0) > 1e-12) {
    double kurtosis = n * ss4 / (ss2 * ss2);
    if (kurtosis > cfg.kurtosis_max || kurtosis < cfg.kurtosis_min) return false;
  }

  out->mean = mean;
  out->variance = ss2 / (n - 3.0);
  return true;
}

struct LineFit {
  double a;
  double b;
};

/// IRLS over the (mean, variance) cloud. Residuals are standardized by the
/// predicted variance before Huber weighting: the sampling noise of a patch
/// variance scales with the variance itself, so high-noise patches would
/// otherwise dominate the fit and swamp the intercept.
LineFit robust_line_fit(const std::vector<PatchStat>& stats, const EstimatorConfig& cfg) {
  const std::size_t n = stats.size();
  std::vector<double> m(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = stats[i].mean;
    v[i] = stats[i].variance;
  }

  // Slope identifiability gate on the 10-90 percentile spread of patch
  // means: a flat image with a small bright structure has outlier means with
  // full range but no robust spread, and fitting a slope there would let a
  // handful of structured patches dictate the Poisson term.
  std::vector<double> m_sorted(m);
  std::sort(m_sorted.begin(), m_sorted.end());
  const double spread = m_sorted[std::size_t(0.9 * double(n - 1))] -
                        m_sorted[std::size_t(0.1 * double(n - 1))];
  const bool intercept_only = spread < cfg.min_mean_spread;
  const double scale_floor =
      std::max(1e-14, 1e-3 * median_of(std::vector<double>(v)));

  // Weighted solve via centered normal equations. The measured patch mean
  // carries sampling noise of variance v/p^2, which attenuates the slope and
  // leaks into the extrapolated intercept; subtracting that known variance
  // from Sxx is the standard errors-in-variables correction. (Mean and
  // variance of a Gaussian sample are independent, so Sxy needs none.)
  const double pixels_per_patch = double(cfg.patch_size * cfg.patch_size);
  auto solve = [&](const std::vector<double>& w) -> LineFit {
    double sw = 0.0, swm = 0.0, swv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sw += w[i];
      swm += w[i] * m[i];
      swv += w[i] * v[i];
    }
    if (sw <= 0.0) return {0.0, 0.0};
    double mbar = swm / sw;
    double vbar = swv / sw;
    if (intercept_only) return {0.0, vbar};
    double sxx = 0.0, sxy = 0.0, mean_noise = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dm = m[i] - mbar;
      sxx += w[i] * dm * dm;
      sxy += w[i] * dm * (v[i] - vbar);
      mean_noise += w[i] * v[i] / pixels_per_patch;
    }
    if (sxx - mean_noise > 0.25 * sxx) sxx -= mean_noise;
    if (sxx <= 0.0) return {0.0, vbar};
    double a = sxy / sxx;
    return {a, vbar - a * mbar};
  };

  std::vector<double> w(n, 1.0);
  LineFit fit = solve(w);

  for (int iter = 0; iter < cfg.irls_iterations; ++iter) {
    std::vector<double> z(n);
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
      double predicted = std::max(fit.a * m[i] + fit.b, scale_floor);
      z[i] = (v[i] - predicted) / predicted;
      if (std::fabs(z[i]) > 1e-12) all_zero = false;
    }
    if (all_zero) break;

    double delta = cfg.huber_mad_factor * mad_of(z);
    for (std::size_t i = 0; i < n; ++i) {
      double predicted = std::max(fit.a * m[i] + fit.b, scale_floor);
      double huber;
      if (delta > 1e-15) {
        huber = std::fabs(z[i]) > delta ? delta / std::fabs(z[i]) : 1.0;
      } else {
        // MAD of zero: the majority sits exactly on the fit. The delta->0
        // limit of the Huber weight keeps those points and drops the rest.
        huber = std::fabs(z[i]) <= 1e-12 ? 1.0 : 0.0;
      }
      w[i] = huber / (predicted * predicted);
    }
    fit = solve(w);
  }
  return fit;
}

}  // namespace

NoiseEstimate estimate_noise(const ImageBuffer& image, const EstimatorConfig& cfg) {
  if (image.width < 16 || image.height < 16) {
    throw Error(Errc::image_too_small,
                "image is " + std::to_string(image.width) + "x" +
                    std::to_string(image.height) + ", need at least 16x16");
  }
  const std::size_t p = cfg.patch_size;
  if (p < 4) throw Error(Errc::config_error, "patch_size must be at least 4");

  std::vector<PatchStat> stats;
  stats.reserve((image.width / p) * (image.height / p));
  for (std::size_t y0 = 0; y0 + p <= image.height; y0 += p) {
    for (std::size_t x0 = 0; x0 + p <= image.width; x0 += p) {
      PatchStat s;
      if (patch_stats(image, x0, y0, cfg, &s)) stats.push_back(s);
    }
  }
  if (stats.size() < cfg.min_patches) {
    throw Error(Errc::image_too_small,
                std::to_string(stats.size()) + " usable patches, need " +
                    std::to_string(cfg.min_patches));
  }

  LineFit fit = robust_line_fit(stats, cfg);
  NoiseEstimate est;
  est.a = std::max(fit.a, 0.0);
  est.b = std::max(fit.b, 0.0);
  est.sigma_ref = std::sqrt(est.a * 0.5 + est.b);
  return est;
}

double summarize_noise(const NoiseEstimate& estimate, int decimals) {
  if (decimals < 1 || decimals > 6) {
    throw Error(Errc::invalid_value,
                "decimals must be in [1, 6], got " + std::to_string(decimals));
  }
  double scale = std::pow(10.0, decimals);
  return std::floor(estimate.sigma_ref * scale + 0.5) / scale;
}

}  // namespace ctiqa
