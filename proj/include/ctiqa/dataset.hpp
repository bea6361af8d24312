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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ctiqa/image.hpp"

namespace ctiqa {

enum class Split { train, test };

std::string_view split_name(Split s);

/// One CT slice: identity, location, ground-truth quality, and the optional
/// metadata columns this harness populates itself (anatomical region and
/// estimated noise level).
struct ImageRecord {
  std::string id;
  std::filesystem::path path;  // relative paths resolve against Dataset::root
  Split split = Split::train;
  std::optional<double> score;   // radiologist mean, in [0, 4]
  std::optional<std::string> region;
  std::optional<double> noise;   // >= 0

  bool operator==(const ImageRecord&) const = default;
};

/// Records in manifest row order.
struct Dataset {
  std::vector<ImageRecord> records;
  std::filesystem::path root;

  std::size_t count(Split s) const;
  std::vector<const ImageRecord*> split_records(Split s) const;
  const ImageRecord* find(std::string_view id) const;
};

/// Manifest CSV header, fixed: id,path,split,score,region,noise
inline constexpr std::string_view kManifestHeader = "id,path,split,score,region,noise";

/// Loads a manifest CSV. One ImageRecord per data row in file order.
/// Throws MissingColumn (bad header), DuplicateId, ScoreOutOfRange, and
/// InvalidValue, each naming the offending row.
Dataset load_manifest(const std::filesystem::path& path);

/// Serializes a dataset back to manifest CSV. load_manifest of the output
/// reproduces the dataset field-for-field.
std::string write_manifest(const Dataset& dataset);
void write_manifest(const Dataset& dataset, const std::filesystem::path& path);

/// Decodes the record's image (8- or 16-bit grayscale PNG) and normalizes
/// intensities to [0, 1] by the format's max value.
ImageBuffer load_image(const Dataset& dataset, const ImageRecord& record);

/// Rewrites record paths so they resolve from new_root (relative when
/// possible, absolute otherwise). Needed when a manifest copy is written to
/// a different directory than its source.
Dataset rebase_dataset(Dataset dataset, const std::filesystem::path& new_root);

}  // namespace ctiqa
