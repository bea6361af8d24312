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

// Generates the bundled synthetic dataset: graded-noise grayscale PNGs plus
// a manifest, deterministic in the seed. Useful for demos and for exercising
// the full pipeline offline with the mock backend.

#include <CLI11.hpp>

#include <iostream>

#include "ctiqa/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ctiqa synthetic dataset generator"};

  std::string out_dir = "synthetic";
  std::size_t train = 40;
  std::size_t test_groups = 5;
  std::size_t image_size = 96;
  std::uint64_t seed = 7;

  app.add_option("-o,--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--train", train, "train image count")->capture_default_str();
  app.add_option("--test-groups", test_groups,
                 "test groups (2 images per group)")->capture_default_str();
  app.add_option("--size", image_size, "image side length in pixels")
      ->capture_default_str();
  app.add_option("--seed", seed, "generator seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    ctiqa::SyntheticDatasetOptions options;
    options.train_count = train;
    options.test_group_count = test_groups;
    options.image_size = image_size;
    options.seed = seed;
    ctiqa::Dataset dataset = ctiqa::write_synthetic_dataset(out_dir, options);
    std::cout << "wrote " << dataset.count(ctiqa::Split::train) << " train + "
              << dataset.count(ctiqa::Split::test) << " test images under "
              << out_dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
