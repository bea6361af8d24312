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

#include "ctiqa/synthetic.hpp"

#include <cmath>

#include "ctiqa/errors.hpp"
#include "ctiqa/rng.hpp"

namespace ctiqa {

namespace {

double round2(double v) { return std::floor(v * 100.0 + 0.5) / 100.0; }

std::string zero_padded(std::size_t value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

/// The synthetic quality law: heavier noise scores lower, mirroring how the
/// mock backend maps sigma_ref to a score.
double quality_score(double sigma) {
  double s = 4.0 - 40.0 * sigma;
  if (s < 0.0) s = 0.0;
  if (s > 4.0) s = 4.0;
  return round2(s);
}

}  // namespace

ImageBuffer make_constant_image(std::size_t width, std::size_t height, double value) {
  ImageBuffer img;
  img.width = width;
  img.height = height;
  img.pixels.assign(width * height, value);
  return img;
}

ImageBuffer make_ramp_image(std::size_t width, std::size_t height, double lo, double hi) {
  ImageBuffer img;
  img.width = width;
  img.height = height;
  img.pixels.resize(width * height);
  const double span = double(width - 1) + double(height - 1);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double t = span > 0.0 ? (double(x) + double(y)) / span : 0.0;
      img.at(x, y) = lo + (hi - lo) * t;
    }
  }
  return img;
}

ImageBuffer add_poisson_gaussian_noise(const ImageBuffer& clean, double a, double b,
                                       std::uint64_t seed) {
  ImageBuffer out = clean;
  Rng rng(seed);
  for (double& v : out.pixels) {
    double sigma = std::sqrt(std::max(a * v + b, 0.0));
    v += sigma * rng.gaussian();
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
  }
  return out;
}

ImageBuffer make_noisy_constant(std::size_t width, std::size_t height, double level,
                                double sigma, std::uint64_t seed) {
  ImageBuffer img = make_constant_image(width, height, level);
  return add_poisson_gaussian_noise(img, 0.0, sigma * sigma, seed);
}

Dataset write_synthetic_dataset(const std::filesystem::path& dir,
                                const SyntheticDatasetOptions& options) {
  if (options.train_count < 1 || options.test_group_count < 1) {
    throw Error(Errc::invalid_value, "synthetic dataset needs train and test records");
  }
  std::filesystem::create_directories(dir / "images");

  Dataset dataset;
  dataset.root = dir;

  // Train: noise levels swept across the scoring range so every Likert
  // stratum is populated.
  const double sigma_lo = 0.005;
  const double sigma_hi = 0.0975;
  for (std::size_t i = 0; i < options.train_count; ++i) {
    double t = options.train_count > 1 ? double(i) / double(options.train_count - 1) : 0.0;
    double sigma = sigma_lo + (sigma_hi - sigma_lo) * t;
    ImageBuffer img = make_noisy_constant(options.image_size, options.image_size, 0.5,
                                          sigma, derive_seed(options.seed, i));
    std::string id = "train" + zero_padded(i, 3);
    std::filesystem::path rel = std::filesystem::path("images") / (id + ".png");
    write_file(dir / rel, encode_png_gray16(img));

    ImageRecord rec;
    rec.id = id;
    rec.path = rel;
    rec.split = Split::train;
    rec.score = quality_score(sigma);
    dataset.records.push_back(std::move(rec));
  }

  // Test: pairs of identical slices sharing a noise level and score, with
  // the levels spaced far enough apart that score order is unambiguous. The
  // duplicate member pins down tie handling end to end: tied truth must meet
  // tied predictions.
  const double group_lo = 0.015;
  const double group_hi = 0.090;
  for (std::size_t g = 0; g < options.test_group_count; ++g) {
    double t = options.test_group_count > 1
                   ? double(g) / double(options.test_group_count - 1)
                   : 0.0;
    double sigma = group_lo + (group_hi - group_lo) * t;
    ImageBuffer img = make_noisy_constant(options.image_size, options.image_size,
                                          0.5, sigma,
                                          derive_seed(options.seed, 10000 + g));
    for (std::size_t member = 0; member < 2; ++member) {
      std::size_t index = g * 2 + member;
      std::string id = "test" + zero_padded(index, 3);
      std::filesystem::path rel = std::filesystem::path("images") / (id + ".png");
      write_file(dir / rel, encode_png_gray16(img));

      ImageRecord rec;
      rec.id = id;
      rec.path = rel;
      rec.split = Split::test;
      rec.score = quality_score(sigma);
      dataset.records.push_back(std::move(rec));
    }
  }

  write_manifest(dataset, dir / "manifest.csv");
  return dataset;
}

}  // namespace ctiqa
