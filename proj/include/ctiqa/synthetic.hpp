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

#include <cstdint>
#include <filesystem>

#include "ctiqa/dataset.hpp"
#include "ctiqa/image.hpp"

namespace ctiqa {

ImageBuffer make_constant_image(std::size_t width, std::size_t height, double value);

/// Diagonal linear ramp from lo (top-left) to hi (bottom-right). Linear in
/// (x, y), so a per-patch plane fit removes it exactly.
ImageBuffer make_ramp_image(std::size_t width, std::size_t height, double lo, double hi);

/// Adds pixelwise Gaussian noise with variance a*m + b (m = clean intensity),
/// clamping the result to [0, 1]. Deterministic in the seed.
ImageBuffer add_poisson_gaussian_noise(const ImageBuffer& clean, double a, double b,
                                       std::uint64_t seed);

/// A constant-level image with additive Gaussian noise of the given sigma.
ImageBuffer make_noisy_constant(std::size_t width, std::size_t height, double level,
                                double sigma, std::uint64_t seed);

struct SyntheticDatasetOptions {
  std::size_t train_count = 40;
  /// Test images come in pairs of identical slices sharing a noise level and
  /// score (so the test split size is 2 * test_group_count); the duplicates
  /// exercise tie handling through the whole pipeline.
  std::size_t test_group_count = 5;
  std::size_t image_size = 96;
  std::uint64_t seed = 7;
};

/// Writes images/ and manifest.csv under `dir`: constant-level slices with
/// graded Gaussian noise, scored by a fixed monotone quality law. Region and
/// noise columns are left empty for the harness's own tagging and estimation
/// passes. Fully deterministic in the options.
Dataset write_synthetic_dataset(const std::filesystem::path& dir,
                                const SyntheticDatasetOptions& options = {});

}  // namespace ctiqa
