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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ctiqa/dataset.hpp"
#include "ctiqa/feedback.hpp"
#include "ctiqa/gateway.hpp"
#include "ctiqa/prompt.hpp"

namespace ctiqa {

enum class Strategy { zero_shot, few_shot, metadata, feedback };

std::string_view strategy_name(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);

struct RunConfig {
  Strategy strategy = Strategy::zero_shot;
  int k = 10;                 // in-context example count
  std::uint64_t seed = 0;
  int warmup_count = 5;       // feedback strategy: training images scored first
  std::size_t buffer_cap = 20;
  bool resample_per_step = false;
  /// Experimental: when > 0, the feedback strategy re-scores one training
  /// image every N test records and refreshes the buffer with it.
  int interleave_every = 0;
  /// Stop after this many test records. Combined with the response cache
  /// this makes interrupted runs resumable: rerunning reproduces the
  /// completed prefix from cache and continues.
  std::optional<std::size_t> max_records;
  PromptConfig prompt;
};

struct Prediction {
  std::string id;
  double y_hat = 0.0;
  std::string explanation;
  bool cache_hit = false;
  bool clamped = false;
  std::int64_t timestamp = 0;
};

struct FailedRecord {
  std::string id;
  std::string error;
};

struct PredictionSet {
  Strategy strategy = Strategy::zero_shot;
  std::vector<Prediction> predictions;  // successful records, in request order
  std::vector<FailedRecord> failures;
  std::string config_fingerprint;
  std::vector<FeedbackEntry> feedback_log;  // every entry appended during the run
};

/// Stratified in-context example selection: scores are binned into 5
/// equal-width strata over [0, 4], each nonempty stratum contributes
/// floor(k/5) or ceil(k/5) draws, and the shortfall from empty or small
/// strata is redistributed round-robin. Deterministic in (train, k, seed).
/// Throws NotEnoughExamples when fewer than k scored train records exist.
std::vector<const ImageRecord*> sample_example_records(const Dataset& train,
                                                       int k, std::uint64_t seed);

/// Same selection, with images loaded and pre-encoded for prompting.
std::vector<ShotExample> sample_examples(const Dataset& dataset, int k,
                                         std::uint64_t seed);

/// Binds a prediction run to everything that determines its output.
std::string config_fingerprint(const Dataset& dataset, const BackendConfig& backend,
                               const RunConfig& cfg);

class Orchestrator {
 public:
  Orchestrator(const Dataset& dataset, Gateway& gateway, RunConfig cfg);

  /// Runs the configured strategy over the test split. Per-record failures
  /// are collected, not fatal. Sinks fire in record order as results become
  /// final, so callers can persist incrementally.
  PredictionSet run();

  void set_prediction_sink(std::function<void(const Prediction&)> sink);
  void set_feedback_sink(std::function<void(const FeedbackEntry&)> sink);

 private:
  struct Outcome {
    std::optional<Prediction> prediction;
    std::optional<FailedRecord> failure;
  };

  Outcome score_record(const ImageRecord& record,
                       const std::vector<ShotExample>& examples,
                       const std::vector<FeedbackEntry>& buffer,
                       std::size_t step) const;
  Prompt build_prompt(const ImageRecord& record, const ImageBuffer& image,
                      const std::vector<ShotExample>& examples,
                      const std::vector<FeedbackEntry>& buffer) const;
  std::vector<ShotExample> examples_for_step(std::size_t step) const;
  void validate_preconditions(const std::vector<const ImageRecord*>& targets) const;

  const Dataset& dataset_;
  Gateway& gateway_;
  RunConfig cfg_;
  std::vector<ShotExample> base_examples_;
  std::function<void(const Prediction&)> prediction_sink_;
  std::function<void(const FeedbackEntry&)> feedback_sink_;
};

/// Convenience wrapper: construct, run, return.
PredictionSet run_strategy(const Dataset& dataset, Gateway& gateway,
                           const RunConfig& cfg);

}  // namespace ctiqa
