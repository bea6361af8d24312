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

#include "ctiqa/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ctiqa/errors.hpp"
#include "ctiqa/sha256.hpp"
#include "ctiqa/strings.hpp"

namespace ctiqa {

namespace {

// Embedded copies of resources/templates/v1/*.tmpl. A unit test keeps the
// two in sync.
constexpr const char* kSystemScoringV1 =
    "You are an experienced radiologist assessing the diagnostic quality of "
    "low-dose CT slices.\n"
    "Rate each image on a 0-4 Likert scale:\n"
    "{rubric}\n"
    "Judge noise, blur, contrast loss, and streak artifacts; score the image "
    "you are asked about, not the reference examples.\n"
    "{grammar}";

constexpr const char* kGrammarV1 =
    "Respond in exactly this format:\n"
    "SCORE: <number between 0 and 4>\n"
    "EXPLANATION: <one or two sentences naming the dominant degradations>";

constexpr const char* kSystemRegionV1 =
    "You identify the anatomical region shown in a CT slice.\n"
    "Allowed labels: {vocabulary}\n"
    "Respond in exactly this format:\n"
    "REGION: <label>";

constexpr const char* kExampleBlockV1 =
    "Example {index} - reference image with radiologist score {score}.";

constexpr const char* kTargetBlockV1 = "Now rate the following image.";

constexpr const char* kMetadataBlockV1 = "Region: {region}\nNoise: {noise}";

constexpr const char* kFeedbackHeaderV1 =
    "Feedback on your previous predictions follows. Each absolute error is a "
    "penalty: adjust your scoring to reduce it on the next image.";

constexpr const char* kFeedbackLineV1 =
    "- image {id}: predicted {predicted}, true score {true}, error: {error}";

constexpr const char* kRegionQueryBlockV1 =
    "Identify the anatomical region of the following image.";

std::string rubric_text(const PromptConfig& cfg) {
  if (cfg.rubric_labels.size() != 5) {
    throw Error(Errc::config_error, "rubric_labels must have 5 entries");
  }
  std::string out;
  for (std::size_t i = 0; i < 5; ++i) {
    out += std::to_string(i) + ": " + cfg.rubric_labels[i];
    if (i + 1 < 5) out.push_back('\n');
  }
  return out;
}

std::string scoring_system_text(const PromptConfig& cfg) {
  return render_template(cfg.templates.system_scoring,
                         {{"rubric", rubric_text(cfg)},
                          {"grammar", cfg.templates.grammar}});
}

std::string format_score(double value, const PromptConfig& cfg) {
  return format_fixed(value, cfg.score_decimals);
}

// Half-up at noise_decimals, matching the noise summarization rule, so the
// prompt shows the summarized value rather than a reformatted raw one.
std::string format_noise(double value, const PromptConfig& cfg) {
  double scale = std::pow(10.0, cfg.noise_decimals);
  double rounded = std::floor(value * scale + 0.5) / scale;
  return format_fixed(rounded, cfg.noise_decimals);
}

std::vector<std::uint8_t> encoded(const ShotExample& ex) {
  if (!ex.png.empty()) return ex.png;
  return encode_png_gray16(ex.image);
}

/// Ascending score, id as tiebreak, so equal example sets render equal
/// prompts regardless of the order they were sampled in.
std::vector<const ShotExample*> sorted_examples(const std::vector<ShotExample>& examples) {
  std::vector<const ShotExample*> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    if (!ex.record.score) {
      throw Error(Errc::invalid_value,
                  "example '" + ex.record.id + "' has no score");
    }
    out.push_back(&ex);
  }
  std::sort(out.begin(), out.end(), [](const ShotExample* l, const ShotExample* r) {
    if (*l->record.score != *r->record.score) {
      return *l->record.score < *r->record.score;
    }
    return l->record.id < r->record.id;
  });
  return out;
}

Turn examples_turn(const std::vector<const ShotExample*>& examples, bool with_metadata,
                   const PromptConfig& cfg) {
  Turn turn;
  turn.role = Turn::Role::user;
  std::size_t index = 1;
  for (const ShotExample* ex : examples) {
    std::string block =
        render_template(cfg.templates.example_block,
                        {{"index", std::to_string(index)},
                         {"score", format_score(*ex->record.score, cfg)}});
    if (with_metadata) {
      if (!ex->record.region || !ex->record.noise) {
        throw Error(Errc::missing_metadata,
                    "example '" + ex->record.id + "' lacks " +
                        (ex->record.region ? "noise" : "region") + " metadata");
      }
      block += "\n" + render_template(
                          cfg.templates.metadata_block,
                          {{"region", *ex->record.region},
                           {"noise", format_noise(*ex->record.noise, cfg)}});
    }
    turn.parts.push_back(Part::make_text(std::move(block)));
    turn.parts.push_back(Part::make_image(encoded(*ex), "image/png"));
    ++index;
  }
  return turn;
}

Turn target_turn(const ImageBuffer& target, const std::string* region,
                 const double* noise, const std::vector<FeedbackEntry>* buffer,
                 const PromptConfig& cfg) {
  Turn turn;
  turn.role = Turn::Role::user;
  if (buffer && !buffer->empty()) {
    std::string feedback = cfg.templates.feedback_header;
    for (const auto& entry : *buffer) {
      feedback += "\n" + render_template(
                             cfg.templates.feedback_line,
                             {{"id", entry.id},
                              {"predicted", format_score(entry.y_hat, cfg)},
                              {"true", format_score(entry.y, cfg)},
                              {"error", format_score(entry.e, cfg)}});
    }
    turn.parts.push_back(Part::make_text(std::move(feedback)));
  }
  std::string block = cfg.templates.target_block;
  if (region) {
    block += "\n" + render_template(cfg.templates.metadata_block,
                                    {{"region", *region},
                                     {"noise", format_noise(*noise, cfg)}});
  }
  turn.parts.push_back(Part::make_text(std::move(block)));
  turn.parts.push_back(Part::make_image(encode_png_gray16(target), "image/png"));
  return turn;
}

}  // namespace

Part Part::make_text(std::string t) {
  Part p;
  p.kind = Kind::text;
  p.text = std::move(t);
  return p;
}

Part Part::make_image(std::vector<std::uint8_t> bytes, std::string media_type) {
  Part p;
  p.kind = Kind::image;
  p.bytes = std::move(bytes);
  p.media_type = std::move(media_type);
  return p;
}

std::string canonical_bytes(const Prompt& prompt) {
  std::string out = "ctiqa-prompt v1\n";
  out += "system " + std::to_string(prompt.system_text.size()) + "\n";
  out += prompt.system_text;
  out.push_back('\n');
  for (const auto& turn : prompt.turns) {
    out += turn.role == Turn::Role::user ? "turn user\n" : "turn assistant\n";
    for (const auto& part : turn.parts) {
      if (part.kind == Part::Kind::text) {
        out += "text " + std::to_string(part.text.size()) + "\n";
        out += part.text;
        out.push_back('\n');
      } else {
        out += "image " + part.media_type + " " +
               std::to_string(part.bytes.size()) + "\n";
        out.append(reinterpret_cast<const char*>(part.bytes.data()),
                   part.bytes.size());
        out.push_back('\n');
      }
    }
  }
  out += "end\n";
  return out;
}

std::size_t image_part_count(const Prompt& prompt) {
  std::size_t n = 0;
  for (const auto& turn : prompt.turns) {
    for (const auto& part : turn.parts) {
      if (part.kind == Part::Kind::image) ++n;
    }
  }
  return n;
}

TemplateSet TemplateSet::v1() {
  TemplateSet t;
  t.version = "v1";
  t.system_scoring = kSystemScoringV1;
  t.system_region = kSystemRegionV1;
  t.grammar = kGrammarV1;
  t.example_block = kExampleBlockV1;
  t.target_block = kTargetBlockV1;
  t.metadata_block = kMetadataBlockV1;
  t.feedback_header = kFeedbackHeaderV1;
  t.feedback_line = kFeedbackLineV1;
  t.region_query_block = kRegionQueryBlockV1;
  return t;
}

TemplateSet TemplateSet::load_dir(const std::filesystem::path& dir) {
  auto read = [&](const char* name) {
    std::ifstream in(dir / (std::string(name) + ".tmpl"), std::ios::binary);
    if (!in) {
      throw Error(Errc::template_error,
                  "missing template file " + (dir / name).string() + ".tmpl");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  TemplateSet t;
  t.version = dir.filename().string();
  t.system_scoring = read("system_scoring");
  t.system_region = read("system_region");
  t.grammar = read("grammar");
  t.example_block = read("example_block");
  t.target_block = read("target_block");
  t.metadata_block = read("metadata_block");
  t.feedback_header = read("feedback_header");
  t.feedback_line = read("feedback_line");
  t.region_query_block = read("region_query_block");
  return t;
}

std::string TemplateSet::hash() const {
  Sha256 h;
  auto feed = [&h](std::string_view name, const std::string& value) {
    h.update(name);
    h.update("=", 1);
    std::uint64_t len = value.size();
    h.update(&len, sizeof len);
    h.update(value);
  };
  feed("version", version);
  feed("system_scoring", system_scoring);
  feed("system_region", system_region);
  feed("grammar", grammar);
  feed("example_block", example_block);
  feed("target_block", target_block);
  feed("metadata_block", metadata_block);
  feed("feedback_header", feedback_header);
  feed("feedback_line", feedback_line);
  feed("region_query_block", region_query_block);
  return h.hex_digest();
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    char c = tmpl[i];
    if (c != '{') {
      out.push_back(c);
      ++i;
      continue;
    }
    std::size_t close = tmpl.find('}', i + 1);
    if (close == std::string::npos) {
      throw Error(Errc::template_error, "unclosed '{' in template");
    }
    std::string name = tmpl.substr(i + 1, close - i - 1);
    auto it = values.find(name);
    if (it == values.end()) {
      throw Error(Errc::template_error, "unknown placeholder {" + name + "}");
    }
    out += it->second;
    i = close + 1;
  }
  return out;
}

Prompt build_zero_shot(const ImageBuffer& target, const PromptConfig& cfg) {
  Prompt prompt;
  prompt.system_text = scoring_system_text(cfg);
  prompt.turns.push_back(target_turn(target, nullptr, nullptr, nullptr, cfg));
  return prompt;
}

Prompt build_few_shot(const std::vector<ShotExample>& examples,
                      const ImageBuffer& target, const PromptConfig& cfg) {
  if (examples.empty()) {
    throw Error(Errc::no_examples,
                "few-shot prompt needs at least one example; use the "
                "zero-shot builder instead");
  }
  Prompt prompt;
  prompt.system_text = scoring_system_text(cfg);
  prompt.turns.push_back(examples_turn(sorted_examples(examples), false, cfg));
  prompt.turns.push_back(target_turn(target, nullptr, nullptr, nullptr, cfg));
  return prompt;
}

Prompt build_with_metadata(const std::vector<ShotExample>& examples,
                           const ImageBuffer& target,
                           const std::string& target_region, double target_noise,
                           const PromptConfig& cfg) {
  if (examples.empty()) {
    throw Error(Errc::no_examples, "metadata prompt needs at least one example");
  }
  Prompt prompt;
  prompt.system_text = scoring_system_text(cfg);
  prompt.turns.push_back(examples_turn(sorted_examples(examples), true, cfg));
  prompt.turns.push_back(
      target_turn(target, &target_region, &target_noise, nullptr, cfg));
  return prompt;
}

Prompt build_with_feedback(const std::vector<ShotExample>& examples,
                           const std::vector<FeedbackEntry>& buffer,
                           const ImageBuffer& target,
                           const std::string& target_region, double target_noise,
                           const PromptConfig& cfg) {
  if (examples.empty()) {
    throw Error(Errc::no_examples, "feedback prompt needs at least one example");
  }
  Prompt prompt;
  prompt.system_text = scoring_system_text(cfg);
  prompt.turns.push_back(examples_turn(sorted_examples(examples), true, cfg));
  prompt.turns.push_back(
      target_turn(target, &target_region, &target_noise, &buffer, cfg));
  return prompt;
}

Prompt build_region_query(const ImageBuffer& target, const PromptConfig& cfg) {
  if (cfg.region_vocabulary.empty()) {
    throw Error(Errc::config_error, "region vocabulary is empty");
  }
  std::string vocabulary;
  for (std::size_t i = 0; i < cfg.region_vocabulary.size(); ++i) {
    if (i) vocabulary += ", ";
    vocabulary += cfg.region_vocabulary[i];
  }
  Prompt prompt;
  prompt.system_text =
      render_template(cfg.templates.system_region, {{"vocabulary", vocabulary}});
  Turn turn;
  turn.role = Turn::Role::user;
  turn.parts.push_back(Part::make_text(cfg.templates.region_query_block));
  turn.parts.push_back(Part::make_image(encode_png_gray16(target), "image/png"));
  prompt.turns.push_back(std::move(turn));
  return prompt;
}

}  // namespace ctiqa
