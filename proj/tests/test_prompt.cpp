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

#include <cstdlib>
#include <filesystem>

#include "ctiqa/errors.hpp"
#include "ctiqa/prompt.hpp"
#include "ctiqa/synthetic.hpp"
#include "helpers.hpp"

using namespace ctiqa;

namespace {

ImageBuffer fixed_target() { return make_ramp_image(16, 16, 0.2, 0.8); }

ShotExample fixed_example(int index, double score, bool with_metadata) {
  ShotExample ex;
  ex.record.id = "ex" + std::to_string(index);
  ex.record.path = "images/ex.png";
  ex.record.split = Split::train;
  ex.record.score = score;
  if (with_metadata) {
    ex.record.region = index % 2 == 0 ? "abdomen" : "kidney";
    ex.record.noise = 0.002 + 0.001 * index;
  }
  ex.image = make_ramp_image(16, 16, 0.1, 0.5 + 0.05 * index);
  return ex;
}

std::vector<ShotExample> fixed_examples(std::size_t count, bool with_metadata) {
  std::vector<ShotExample> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(fixed_example(static_cast<int>(i),
                                0.5 + 3.0 * double(i) / std::max<std::size_t>(count - 1, 1),
                                with_metadata));
  }
  return out;
}

std::string system_text(const Prompt& p) { return p.system_text; }

/// Golden comparison: regenerate with UPDATE_GOLDENS=1 in the environment.
void check_golden(const std::string& name, const std::string& bytes) {
  auto path = std::filesystem::path(CTIQA_SOURCE_DIR) / "tests/golden" /
              (name + ".golden");
  if (std::getenv("UPDATE_GOLDENS")) {
    testutil::write_text(path, bytes);
    return;
  }
  REQUIRE_MESSAGE(std::filesystem::exists(path),
                  "missing golden file; run with UPDATE_GOLDENS=1");
  std::string expected = testutil::read_text(path);
  CHECK_MESSAGE(bytes == expected,
                name << " drifted from its golden serialization; template "
                        "changes require an explicit UPDATE_GOLDENS=1 rerun");
}

}  // namespace

TEST_CASE("zero-shot prompt structure") {
  PromptConfig cfg;
  Prompt p = build_zero_shot(fixed_target(), cfg);
  CHECK(image_part_count(p) == 1);
  REQUIRE(p.turns.size() == 1);
  CHECK(p.turns[0].role == Turn::Role::user);
  CHECK(system_text(p).find("SCORE:") != std::string::npos);
  CHECK(system_text(p).find("0: very poor") != std::string::npos);
  CHECK(system_text(p).find("4: excellent") != std::string::npos);
  // The output grammar appears exactly once.
  CHECK(testutil::count_occurrences(canonical_bytes(p),
                                    "Respond in exactly this format:") == 1);
}

TEST_CASE("prompt builders are deterministic") {
  PromptConfig cfg;
  CHECK(canonical_bytes(build_zero_shot(fixed_target(), cfg)) ==
        canonical_bytes(build_zero_shot(fixed_target(), cfg)));
  auto examples = fixed_examples(3, true);
  CHECK(canonical_bytes(build_with_metadata(examples, fixed_target(), "liver",
                                            0.0031, cfg)) ==
        canonical_bytes(build_with_metadata(examples, fixed_target(), "liver",
                                            0.0031, cfg)));
  CHECK(canonical_bytes(build_region_query(fixed_target(), cfg)) ==
        canonical_bytes(build_region_query(fixed_target(), cfg)));
}

TEST_CASE("few-shot image count is examples + 1") {
  PromptConfig cfg;
  auto ten = fixed_examples(10, false);
  CHECK(image_part_count(build_few_shot(ten, fixed_target(), cfg)) == 11);
  auto thirty_four = fixed_examples(34, false);
  CHECK(image_part_count(build_few_shot(thirty_four, fixed_target(), cfg)) == 35);
}

TEST_CASE("few-shot with no examples is an error") {
  PromptConfig cfg;
  try {
    build_few_shot({}, fixed_target(), cfg);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_examples);
  }
}

TEST_CASE("examples render in ascending score order regardless of input order") {
  PromptConfig cfg;
  auto examples = fixed_examples(4, false);
  std::swap(examples[0], examples[3]);
  std::swap(examples[1], examples[2]);
  Prompt p = build_few_shot(examples, fixed_target(), cfg);

  std::string canon = canonical_bytes(p);
  std::size_t p05 = canon.find("score 0.50");
  std::size_t p15 = canon.find("score 1.50");
  std::size_t p25 = canon.find("score 2.50");
  std::size_t p35 = canon.find("score 3.50");
  REQUIRE(p05 != std::string::npos);
  CHECK(p05 < p15);
  CHECK(p15 < p25);
  CHECK(p25 < p35);

  auto shuffled = fixed_examples(4, false);
  CHECK(canonical_bytes(build_few_shot(shuffled, fixed_target(), cfg)) == canon);
}

TEST_CASE("metadata prompt carries region and noise lines") {
  PromptConfig cfg;
  auto examples = fixed_examples(2, true);
  Prompt p = build_with_metadata(examples, fixed_target(), "abdomen", 0.003, cfg);
  std::string canon = canonical_bytes(p);
  CHECK(canon.find("Region: abdomen") != std::string::npos);
  CHECK(canon.find("Noise: 0.003") != std::string::npos);
  CHECK(canon.find("Region: kidney") != std::string::npos);
}

TEST_CASE("embedded noise values round half-up like the summarizer") {
  PromptConfig cfg;
  auto examples = fixed_examples(2, true);
  Prompt p = build_with_metadata(examples, fixed_target(), "abdomen", 0.00250, cfg);
  CHECK(canonical_bytes(p).find("Noise: 0.003") != std::string::npos);
  Prompt q = build_with_metadata(examples, fixed_target(), "abdomen", 0.0034, cfg);
  CHECK(canonical_bytes(q).find("Noise: 0.003") != std::string::npos);
}

TEST_CASE("metadata prompt rejects examples without metadata") {
  PromptConfig cfg;
  auto examples = fixed_examples(2, true);
  examples[1].record.region.reset();
  try {
    build_with_metadata(examples, fixed_target(), "abdomen", 0.003, cfg);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_metadata);
    CHECK(std::string(e.what()).find("ex1") != std::string::npos);
  }
}

TEST_CASE("feedback lines render the error arithmetic") {
  PromptConfig cfg;
  auto examples = fixed_examples(2, true);
  std::vector<FeedbackEntry> buffer;
  buffer = update_feedback(std::move(buffer), "w1", 3.0, 2.5, 0.004, 20);
  Prompt p = build_with_feedback(examples, buffer, fixed_target(), "abdomen",
                                 0.003, cfg);
  std::string canon = canonical_bytes(p);
  CHECK(canon.find("error: 0.5") != std::string::npos);
  CHECK(canon.find("predicted 2.50") != std::string::npos);
  CHECK(canon.find("true score 3.00") != std::string::npos);
}

TEST_CASE("empty feedback buffer degrades to the metadata prompt") {
  PromptConfig cfg;
  auto examples = fixed_examples(3, true);
  Prompt with = build_with_feedback(examples, {}, fixed_target(), "pelvis",
                                    0.0042, cfg);
  Prompt without = build_with_metadata(examples, fixed_target(), "pelvis",
                                       0.0042, cfg);
  CHECK(canonical_bytes(with) == canonical_bytes(without));
}

TEST_CASE("five-entry buffer renders five feedback lines") {
  PromptConfig cfg;
  auto examples = fixed_examples(2, true);
  std::vector<FeedbackEntry> buffer;
  for (int i = 0; i < 5; ++i) {
    buffer = update_feedback(std::move(buffer), "w" + std::to_string(i), 2.0,
                             1.5 + 0.1 * i, 0.003, 20);
  }
  Prompt p = build_with_feedback(examples, buffer, fixed_target(), "chest",
                                 0.005, cfg);
  CHECK(testutil::count_occurrences(canonical_bytes(p), "- image w") == 5);
}

TEST_CASE("region query lists the vocabulary") {
  PromptConfig cfg;
  Prompt p = build_region_query(fixed_target(), cfg);
  CHECK(system_text(p).find("abdomen") != std::string::npos);
  CHECK(system_text(p).find("kidney") != std::string::npos);
  CHECK(system_text(p).find("REGION:") != std::string::npos);
  CHECK(image_part_count(p) == 1);

  PromptConfig custom;
  custom.region_vocabulary = {"head", "neck", "spine"};
  Prompt q = build_region_query(fixed_target(), custom);
  CHECK(system_text(q).find("head, neck, spine") != std::string::npos);
  CHECK(system_text(q).find("abdomen") == std::string::npos);
}

TEST_CASE("embedded v1 templates match the shipped resource files") {
  TemplateSet embedded = TemplateSet::v1();
  TemplateSet files = TemplateSet::load_dir(
      std::filesystem::path(CTIQA_SOURCE_DIR) / "resources/templates/v1");
  CHECK(embedded.system_scoring == files.system_scoring);
  CHECK(embedded.system_region == files.system_region);
  CHECK(embedded.grammar == files.grammar);
  CHECK(embedded.example_block == files.example_block);
  CHECK(embedded.target_block == files.target_block);
  CHECK(embedded.metadata_block == files.metadata_block);
  CHECK(embedded.feedback_header == files.feedback_header);
  CHECK(embedded.feedback_line == files.feedback_line);
  CHECK(embedded.region_query_block == files.region_query_block);
  CHECK(embedded.hash() == files.hash());
}

TEST_CASE("template hash is sensitive to single-character edits") {
  TemplateSet a = TemplateSet::v1();
  TemplateSet b = a;
  b.target_block += "!";
  CHECK(a.hash() != b.hash());
}

TEST_CASE("render_template rejects unknown placeholders") {
  CHECK(render_template("a {x} b", {{"x", "1"}}) == "a 1 b");
  CHECK_THROWS_AS(render_template("a {nope} b", {{"x", "1"}}), Error);
  CHECK_THROWS_AS(render_template("a {x", {{"x", "1"}}), Error);
}

TEST_CASE("golden serializations for all five builders") {
  PromptConfig cfg;
  auto plain = fixed_examples(3, false);
  auto tagged = fixed_examples(3, true);
  std::vector<FeedbackEntry> buffer;
  buffer = update_feedback(std::move(buffer), "w1", 3.0, 2.5, 0.004, 20);
  buffer = update_feedback(std::move(buffer), "w2", 1.0, 1.25, 0.007, 20);

  check_golden("zero_shot", canonical_bytes(build_zero_shot(fixed_target(), cfg)));
  check_golden("few_shot",
               canonical_bytes(build_few_shot(plain, fixed_target(), cfg)));
  check_golden("metadata",
               canonical_bytes(build_with_metadata(tagged, fixed_target(),
                                                   "abdomen", 0.003, cfg)));
  check_golden("feedback",
               canonical_bytes(build_with_feedback(tagged, buffer, fixed_target(),
                                                   "abdomen", 0.003, cfg)));
  check_golden("region_query",
               canonical_bytes(build_region_query(fixed_target(), cfg)));
}
