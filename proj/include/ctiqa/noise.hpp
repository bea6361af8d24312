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

#pragma once

#include "ctiqa/image.hpp"

namespace ctiqa {

/// Blind Poisson-Gaussian fit: local patch variance against local patch mean,
/// v = a*m + b. The scalar summary sigma_ref = sqrt(a*0.5 + b) evaluates the
/// noise law at mid-intensity and is what gets injected into prompts as the
/// per-image noise metadata.
struct NoiseEstimate {
  double a = 0.0;          // signal-dependent slope, >= 0 after clamping
  double b = 0.0;          // signal-independent variance, >= 0 after clamping
  double sigma_ref = 0.0;  // sqrt(a*0.5 + b)
};

struct EstimatorConfig {
  std::size_t patch_size = 8;       // non-overlapping p x p patches
  std::size_t min_patches = 16;     // usable patches required after filtering
  double kurtosis_max = 6.0;        // residual kurtosis above this = structure
  double kurtosis_min = 1.2;        // below this = two-level residuals (edges)
  double saturated_fraction_max = 0.5;  // patches mostly at 0 or 1 carry no noise
  int irls_iterations = 10;
  double huber_mad_factor = 1.345;  // Huber delta = factor * MAD of residuals
  /// Minimum 10-90 percentile spread of patch means for the slope to be
  /// identifiable; below it only the intercept is fit.
  double min_mean_spread = 0.05;
};

/// Estimates (a, b) over non-overlapping patches: each patch is high-pass
/// filtered by subtracting its best-fit plane, structured patches are
/// rejected by residual kurtosis, and the (mean, variance) cloud is fit by
/// iteratively reweighted least squares with Huber weights (10 iterations,
/// delta = 1.345 * MAD of the variance-standardized residuals). Negative
/// fitted coefficients are clamped to zero.
///
/// Requires an image of at least 16x16 pixels; throws ImageTooSmall when
/// fewer than cfg.min_patches usable patches remain.
NoiseEstimate estimate_noise(const ImageBuffer& image, const EstimatorConfig& cfg = {});

/// sigma_ref rounded half-up to `decimals` places (1..6). This rounded value
/// is what the prompt engine embeds as the Noise metadata line.
double summarize_noise(const NoiseEstimate& estimate, int decimals);

}  // namespace ctiqa
