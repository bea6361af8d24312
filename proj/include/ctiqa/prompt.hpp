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
#include <map>
#include <string>
#include <vector>

#include "ctiqa/dataset.hpp"
#include "ctiqa/feedback.hpp"
#include "ctiqa/image.hpp"

namespace ctiqa {

struct Part {
  enum class Kind { text, image };
  Kind kind = Kind::text;
  std::string text;                 // kind == text
  std::vector<std::uint8_t> bytes;  // kind == image
  std::string media_type;           // kind == image

  static Part make_text(std::string t);
  static Part make_image(std::vector<std::uint8_t> bytes, std::string media_type);
};

struct Turn {
  enum class Role { user, assistant };
  Role role = Role::user;
  std::vector<Part> parts;
};

/// A chat request in canonical form. Equal inputs always produce the same
/// Prompt and therefore the same canonical serialization, which is what the
/// cache key, the golden tests, and the mock backend all hash or read.
struct Prompt {
  std::string system_text;
  std::vector<Turn> turns;
};

/// Length-prefixed, unambiguous serialization of a prompt.
std::string canonical_bytes(const Prompt& prompt);

std::size_t image_part_count(const Prompt& prompt);

/// A scored in-context example: the manifest record (score required) plus
/// its decoded image. `png` may carry the image pre-encoded; builders encode
/// on demand when it is empty.
struct ShotExample {
  ImageRecord record;
  ImageBuffer image;
  std::vector<std::uint8_t> png;
};

/// The prompt text itself, versioned. Experiments are reproducible because
/// the hash of the full set is folded into the cache key; editing a template
/// invalidates cached responses instead of silently reusing them.
struct TemplateSet {
  std::string version;
  std::string system_scoring;    // {rubric} {grammar}
  std::string system_region;     // {vocabulary}
  std::string grammar;           // the mandatory scoring output format
  std::string example_block;     // {index} {score}
  std::string target_block;
  std::string metadata_block;    // {region} {noise}
  std::string feedback_header;
  std::string feedback_line;     // {id} {predicted} {true} {error}
  std::string region_query_block;

  static TemplateSet v1();
  /// Loads a set from <dir>/<name>.tmpl files; the directory name is the
  /// version string.
  static TemplateSet load_dir(const std::filesystem::path& dir);

  /// SHA-256 over the named template contents.
  std::string hash() const;
};

/// Substitutes {name} placeholders. Unknown placeholders are an error so a
/// typo in a template file fails loudly.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values);

struct PromptConfig {
  // Likert anchors for levels 0..4.
  std::vector<std::string> rubric_labels = {"very poor", "poor", "fair", "good",
                                            "excellent"};
  std::vector<std::string> region_vocabulary = {"abdomen", "kidney", "liver",
                                                "pelvis", "chest", "unknown"};
  int score_decimals = 2;
  int noise_decimals = 3;
  TemplateSet templates = TemplateSet::v1();
};

/// Target image only, no examples.
Prompt build_zero_shot(const ImageBuffer& target, const PromptConfig& cfg);

/// Scored examples (rendered in ascending score order) followed by the
/// unscored target. Image parts = |examples| + 1. Throws NoExamples when the
/// list is empty.
Prompt build_few_shot(const std::vector<ShotExample>& examples,
                      const ImageBuffer& target, const PromptConfig& cfg);

/// Few-shot prompt where every example block and the target block carry
/// Region/Noise lines. Throws MissingMetadata naming the offending record.
Prompt build_with_metadata(const std::vector<ShotExample>& examples,
                           const ImageBuffer& target,
                           const std::string& target_region, double target_noise,
                           const PromptConfig& cfg);

/// Metadata prompt plus one feedback line per buffer entry and an
/// instruction to reduce future error. An empty buffer renders exactly the
/// build_with_metadata output.
Prompt build_with_feedback(const std::vector<ShotExample>& examples,
                           const std::vector<FeedbackEntry>& buffer,
                           const ImageBuffer& target,
                           const std::string& target_region, double target_noise,
                           const PromptConfig& cfg);

/// Asks for a single region label from the closed vocabulary, with output
/// grammar `REGION: <label>`.
Prompt build_region_query(const ImageBuffer& target, const PromptConfig& cfg);

}  // namespace ctiqa
