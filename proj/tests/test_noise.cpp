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

#include <doctest.h>

#include <cmath>

#include "ctiqa/errors.hpp"
#include "ctiqa/noise.hpp"
#include "ctiqa/rng.hpp"
#include "ctiqa/synthetic.hpp"

using namespace ctiqa;

TEST_CASE("constant noise-free image estimates to zero") {
  ImageBuffer img = make_constant_image(64, 64, 0.5);
  NoiseEstimate est = estimate_noise(img);
  CHECK(std::fabs(est.a) < 1e-6);
  CHECK(std::fabs(est.b) < 1e-6);
  CHECK(std::fabs(est.sigma_ref) < 1e-6);
}

TEST_CASE("pure gaussian noise on a flat image recovers b") {
  // Oracle: the generating variance sigma^2 = 1e-4.
  ImageBuffer img = make_noisy_constant(256, 256, 0.5, 0.01, 123);
  NoiseEstimate est = estimate_noise(img);
  CHECK(est.b == doctest::Approx(1e-4).epsilon(0.30));
  CHECK(est.a * 0.5 < 0.3 * 1e-4);  // slope contributes (near) nothing
  CHECK(est.sigma_ref == doctest::Approx(0.01).epsilon(0.15));
}

TEST_CASE("ramp with affine variance law recovers (a, b)") {
  // Oracle: the generating parameters.
  const double a = 0.004, b = 1e-5;
  ImageBuffer clean = make_ramp_image(512, 512, 0.05, 0.55);
  ImageBuffer img = add_poisson_gaussian_noise(clean, a, b, 99);
  NoiseEstimate est = estimate_noise(img);
  CHECK(est.a == doctest::Approx(a).epsilon(0.30));
  CHECK(est.b == doctest::Approx(b).epsilon(0.30));
}

TEST_CASE("sigma_ref equals sqrt(a*0.5 + b) exactly") {
  ImageBuffer img = make_noisy_constant(128, 128, 0.4, 0.02, 5);
  NoiseEstimate est = estimate_noise(img);
  CHECK(est.sigma_ref == std::sqrt(est.a * 0.5 + est.b));
  CHECK(est.a >= 0.0);
  CHECK(est.b >= 0.0);
}

TEST_CASE("estimation is deterministic") {
  ImageBuffer clean = make_ramp_image(256, 256, 0.1, 0.5);
  ImageBuffer img = add_poisson_gaussian_noise(clean, 0.002, 2e-5, 17);
  NoiseEstimate first = estimate_noise(img);
  NoiseEstimate second = estimate_noise(img);
  CHECK(first.a == second.a);
  CHECK(first.b == second.b);
  CHECK(first.sigma_ref == second.sigma_ref);
}

TEST_CASE("scale equivariance: a scales by c, b by c^2") {
  const double a = 0.003, b = 3e-5, c = 0.5;
  ImageBuffer clean = make_ramp_image(512, 512, 0.1, 0.6);
  ImageBuffer noisy = add_poisson_gaussian_noise(clean, a, b, 31);
  ImageBuffer scaled = noisy;
  for (double& v : scaled.pixels) v *= c;

  NoiseEstimate base = estimate_noise(noisy);
  NoiseEstimate shrunk = estimate_noise(scaled);
  CHECK(shrunk.a == doctest::Approx(c * base.a).epsilon(0.15));
  CHECK(shrunk.b == doctest::Approx(c * c * base.b).epsilon(0.15));
}

TEST_CASE("sigma_ref is monotone in injected noise over seeded pairs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    double sigma = rng.uniform(0.005, 0.06);
    ImageBuffer quiet = make_noisy_constant(128, 128, 0.5, sigma, seed * 2 + 1);
    ImageBuffer loud = make_noisy_constant(128, 128, 0.5, sigma * 1.4, seed * 2 + 2);
    NoiseEstimate eq = estimate_noise(quiet);
    NoiseEstimate el = estimate_noise(loud);
    CAPTURE(seed);
    CHECK(el.sigma_ref >= eq.sigma_ref);
  }
}

TEST_CASE("structured patches are rejected, not fitted") {
  // Flat noise-free image with a sharp bright bar: the bar's patches carry
  // huge plane-fit residuals but cover a small minority of the image, so the
  // fit must side with the flat majority.
  ImageBuffer img = make_constant_image(128, 128, 0.3);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 60; x < 64; ++x) img.at(x, y) = 0.9;  // bright bar
  }
  NoiseEstimate est = estimate_noise(img);
  CHECK(est.sigma_ref < 0.02);
}

TEST_CASE("too-small images are rejected") {
  ImageBuffer img = make_constant_image(8, 8, 0.5);
  try {
    estimate_noise(img);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::image_too_small);
  }

  // 16x16 passes the size gate but yields 4 patches < min_patches.
  ImageBuffer small = make_constant_image(16, 16, 0.5);
  CHECK_THROWS_AS(estimate_noise(small), Error);

  EstimatorConfig relaxed;
  relaxed.min_patches = 4;
  CHECK_NOTHROW(estimate_noise(small, relaxed));
}

TEST_CASE("summarize_noise rounds half-up") {
  NoiseEstimate est;
  est.sigma_ref = 0.0034;
  CHECK(summarize_noise(est, 3) == 0.003);
  est.sigma_ref = 0.00250;
  CHECK(summarize_noise(est, 3) == 0.003);
  est.sigma_ref = 0.0;
  CHECK(summarize_noise(est, 3) == 0.0);
  est.sigma_ref = 0.0456;
  CHECK(summarize_noise(est, 2) == 0.05);

  est.sigma_ref = 0.1;
  CHECK_THROWS_AS(summarize_noise(est, 0), Error);
  CHECK_THROWS_AS(summarize_noise(est, 7), Error);
}
