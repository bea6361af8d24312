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

#include "ctiqa/orchestrator.hpp"

#include <algorithm>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "ctiqa/errors.hpp"
#include "ctiqa/rng.hpp"
#include "ctiqa/sha256.hpp"
#include "ctiqa/strings.hpp"

namespace ctiqa {

namespace {

constexpr std::uint64_t kWarmupStream = 0xFEEDul;
constexpr std::uint64_t kStepStreamBase = 0x1000ul;

std::vector<const ImageRecord*> scored_train_records(const Dataset& dataset) {
  std::vector<const ImageRecord*> out;
  for (const auto& r : dataset.records) {
    if (r.split == Split::train && r.score) out.push_back(&r);
  }
  return out;
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::zero_shot: return "zero_shot";
    case Strategy::few_shot: return "few_shot";
    case Strategy::metadata: return "metadata";
    case Strategy::feedback: return "feedback";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  if (name == "zero_shot") return Strategy::zero_shot;
  if (name == "few_shot") return Strategy::few_shot;
  if (name == "metadata") return Strategy::metadata;
  if (name == "feedback") return Strategy::feedback;
  return std::nullopt;
}

std::vector<const ImageRecord*> sample_example_records(const Dataset& train,
                                                       int k, std::uint64_t seed) {
  if (k < 1) throw Error(Errc::invalid_value, "k must be >= 1");
  auto pool = scored_train_records(train);
  if (pool.size() < static_cast<std::size_t>(k)) {
    throw Error(Errc::not_enough_examples,
                "requested " + std::to_string(k) + " examples but only " +
                    std::to_string(pool.size()) + " scored train records exist");
  }

  // Equal-width strata over [0, 4]; the top edge belongs to the last bin.
  std::array<std::vector<const ImageRecord*>, 5> strata;
  for (const ImageRecord* r : pool) {
    auto bin = static_cast<std::size_t>(*r->score / 0.8);
    strata[std::min<std::size_t>(bin, 4)].push_back(r);
  }

  // floor(k/5) everywhere, the remainder spread from stratum 0 up; then
  // shortfall against capacity redistributed round-robin.
  std::array<std::size_t, 5> want{};
  for (std::size_t j = 0; j < 5; ++j) {
    want[j] = static_cast<std::size_t>(k) / 5 +
              (j < static_cast<std::size_t>(k) % 5 ? 1 : 0);
  }
  std::array<std::size_t, 5> take{};
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < 5; ++j) {
    take[j] = std::min(want[j], strata[j].size());
    assigned += take[j];
  }
  std::size_t j = 0;
  while (assigned < static_cast<std::size_t>(k)) {
    if (take[j] < strata[j].size()) {
      ++take[j];
      ++assigned;
    }
    j = (j + 1) % 5;
  }

  std::vector<const ImageRecord*> out;
  out.reserve(k);
  Rng rng(seed);
  for (std::size_t s = 0; s < 5; ++s) {
    if (take[s] == 0) continue;
    auto indices = rng.sample_without_replacement(strata[s].size(), take[s]);
    for (std::size_t idx : indices) out.push_back(strata[s][idx]);
  }
  return out;
}

std::vector<ShotExample> sample_examples(const Dataset& dataset, int k,
                                         std::uint64_t seed) {
  std::vector<ShotExample> out;
  for (const ImageRecord* r : sample_example_records(dataset, k, seed)) {
    ShotExample ex;
    ex.record = *r;
    ex.image = load_image(dataset, *r);
    ex.png = encode_png_gray16(ex.image);
    out.push_back(std::move(ex));
  }
  return out;
}

std::string config_fingerprint(const Dataset& dataset, const BackendConfig& backend,
                               const RunConfig& cfg) {
  Sha256 h;
  std::string manifest = write_manifest(dataset);
  h.update(manifest);
  std::string fields;
  fields += "strategy=" + std::string(strategy_name(cfg.strategy));
  fields += ";k=" + std::to_string(cfg.k);
  fields += ";seed=" + std::to_string(cfg.seed);
  fields += ";warmup=" + std::to_string(cfg.warmup_count);
  fields += ";cap=" + std::to_string(cfg.buffer_cap);
  fields += ";resample=" + std::to_string(cfg.resample_per_step ? 1 : 0);
  fields += ";interleave=" + std::to_string(cfg.interleave_every);
  fields += ";model=" + backend.model_name;
  fields += ";temperature=" + format_double(backend.temperature);
  fields += ";backend=" +
            std::string(backend.kind == BackendConfig::Kind::mock ? "mock" : "http");
  fields += ";mock_seed=" + std::to_string(backend.mock_seed);
  fields += ";templates=" + cfg.prompt.templates.hash();
  h.update(fields);
  return h.hex_digest();
}

Orchestrator::Orchestrator(const Dataset& dataset, Gateway& gateway, RunConfig cfg)
    : dataset_(dataset), gateway_(gateway), cfg_(std::move(cfg)) {}

void Orchestrator::set_prediction_sink(std::function<void(const Prediction&)> sink) {
  prediction_sink_ = std::move(sink);
}

void Orchestrator::set_feedback_sink(std::function<void(const FeedbackEntry&)> sink) {
  feedback_sink_ = std::move(sink);
}

void Orchestrator::validate_preconditions(
    const std::vector<const ImageRecord*>& targets) const {
  bool needs_metadata = cfg_.strategy == Strategy::metadata ||
                        cfg_.strategy == Strategy::feedback;
  if (!needs_metadata) return;
  for (const ImageRecord* r : targets) {
    if (!r->region || !r->noise) {
      throw Error(Errc::config_error,
                  std::string(strategy_name(cfg_.strategy)) +
                      " strategy requires region and noise on every target; "
                      "record '" +
                      r->id + "' lacks " + (r->region ? "noise" : "region") +
                      " (run estimate-noise / tag-regions first)");
    }
  }
  for (const auto& ex : base_examples_) {
    if (!ex.record.region || !ex.record.noise) {
      throw Error(Errc::config_error,
                  "example record '" + ex.record.id +
                      "' lacks region/noise metadata");
    }
  }
  if (cfg_.strategy == Strategy::feedback && cfg_.warmup_count < 1) {
    throw Error(Errc::config_error, "feedback strategy requires warmup_count >= 1");
  }
}

std::vector<ShotExample> Orchestrator::examples_for_step(std::size_t step) const {
  return sample_examples(dataset_, cfg_.k,
                         derive_seed(cfg_.seed, kStepStreamBase + step));
}

Prompt Orchestrator::build_prompt(const ImageRecord& record, const ImageBuffer& image,
                                  const std::vector<ShotExample>& examples,
                                  const std::vector<FeedbackEntry>& buffer) const {
  switch (cfg_.strategy) {
    case Strategy::zero_shot:
      return build_zero_shot(image, cfg_.prompt);
    case Strategy::few_shot:
      return build_few_shot(examples, image, cfg_.prompt);
    case Strategy::metadata:
      return build_with_metadata(examples, image, *record.region, *record.noise,
                                 cfg_.prompt);
    case Strategy::feedback:
      return build_with_feedback(examples, buffer, image, *record.region,
                                 *record.noise, cfg_.prompt);
  }
  throw Error(Errc::config_error, "unknown strategy");
}

Orchestrator::Outcome Orchestrator::score_record(
    const ImageRecord& record, const std::vector<ShotExample>& examples,
    const std::vector<FeedbackEntry>& buffer, std::size_t step) const {
  Outcome outcome;
  try {
    ImageBuffer image = load_image(dataset_, record);
    Prompt prompt;
    if (cfg_.strategy != Strategy::zero_shot && cfg_.resample_per_step) {
      prompt = build_prompt(record, image, examples_for_step(step), buffer);
    } else {
      prompt = build_prompt(record, image, examples, buffer);
    }
    Completion completion = gateway_.complete(prompt);
    ScoredResponse response = parse_score(completion.text);

    Prediction p;
    p.id = record.id;
    p.y_hat = response.score;
    p.explanation = response.explanation;
    p.cache_hit = completion.cache_hit;
    p.clamped = response.clamped;
    p.timestamp = completion.created_at;
    outcome.prediction = std::move(p);
  } catch (const Error& e) {
    outcome.failure = FailedRecord{record.id, e.what()};
  }
  return outcome;
}

PredictionSet Orchestrator::run() {
  PredictionSet result;
  result.strategy = cfg_.strategy;
  result.config_fingerprint = config_fingerprint(dataset_, gateway_.config(), cfg_);

  if (cfg_.strategy != Strategy::zero_shot) {
    base_examples_ = sample_examples(dataset_, cfg_.k, cfg_.seed);
  }

  auto targets = dataset_.split_records(Split::test);
  if (cfg_.max_records && targets.size() > *cfg_.max_records) {
    targets.resize(*cfg_.max_records);
  }
  validate_preconditions(targets);

  std::vector<FeedbackEntry> buffer;

  if (cfg_.strategy == Strategy::feedback) {
    // Warm-up: score randomly selected training images whose truth is known,
    // then carry their errors into every test prompt. Test scores never
    // enter the buffer.
    auto pool = scored_train_records(dataset_);
    std::vector<const ImageRecord*> warmup_pool;
    for (const ImageRecord* r : pool) {
      bool is_example = std::any_of(
          base_examples_.begin(), base_examples_.end(),
          [&](const ShotExample& ex) { return ex.record.id == r->id; });
      if (!is_example) warmup_pool.push_back(r);
    }
    if (warmup_pool.size() < static_cast<std::size_t>(cfg_.warmup_count)) {
      warmup_pool = pool;  // small dataset: allow overlap with examples
    }
    if (warmup_pool.size() < static_cast<std::size_t>(cfg_.warmup_count)) {
      throw Error(Errc::not_enough_examples,
                  "warmup needs " + std::to_string(cfg_.warmup_count) +
                      " scored train records, have " +
                      std::to_string(warmup_pool.size()));
    }
    Rng rng(derive_seed(cfg_.seed, kWarmupStream));
    auto picks = rng.sample_without_replacement(warmup_pool.size(),
                                                cfg_.warmup_count);

    for (std::size_t w = 0; w < picks.size(); ++w) {
      const ImageRecord* rec = warmup_pool[picks[w]];
      Outcome outcome = score_record(*rec, base_examples_, buffer, 0);
      if (outcome.failure) {
        result.failures.push_back(*outcome.failure);
        continue;
      }
      double noise_level = rec->noise.value_or(0.0);
      buffer = update_feedback(std::move(buffer), rec->id, *rec->score,
                               outcome.prediction->y_hat, noise_level,
                               cfg_.buffer_cap);
      result.feedback_log.push_back(buffer.back());
      if (feedback_sink_) feedback_sink_(buffer.back());
    }

    // Test phase is sequential: each step reads the buffer written before it.
    std::size_t since_interleave = 0;
    std::size_t interleave_round = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (cfg_.interleave_every > 0 &&
          since_interleave == static_cast<std::size_t>(cfg_.interleave_every)) {
        since_interleave = 0;
        const ImageRecord* rec =
            warmup_pool[rng.uniform_index(warmup_pool.size())];
        Outcome outcome = score_record(*rec, base_examples_, buffer,
                                       targets.size() + interleave_round++);
        if (outcome.prediction) {
          buffer = update_feedback(std::move(buffer), rec->id, *rec->score,
                                   outcome.prediction->y_hat,
                                   rec->noise.value_or(0.0), cfg_.buffer_cap);
          result.feedback_log.push_back(buffer.back());
          if (feedback_sink_) feedback_sink_(buffer.back());
        }
      }
      Outcome outcome = score_record(*targets[i], base_examples_, buffer, i);
      if (outcome.prediction) {
        result.predictions.push_back(*outcome.prediction);
        if (prediction_sink_) prediction_sink_(result.predictions.back());
      } else {
        result.failures.push_back(*outcome.failure);
      }
      ++since_interleave;
    }
    return result;
  }

  // zero_shot / few_shot / metadata: records are independent; run up to
  // `concurrency` in flight and emit results in record order.
  const std::size_t n = targets.size();
  std::vector<Outcome> outcomes(n);
  std::vector<char> done(n, 0);
  std::size_t next_index = 0;
  std::size_t next_emit = 0;
  std::mutex mutex;

  int workers = std::max(1, gateway_.config().concurrency);
  workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers), std::max<std::size_t>(n, 1)));

  auto emit_ready = [&]() {
    // mutex held
    while (next_emit < n && done[next_emit]) {
      Outcome& o = outcomes[next_emit];
      if (o.prediction) {
        result.predictions.push_back(*o.prediction);
        if (prediction_sink_) prediction_sink_(result.predictions.back());
      } else if (o.failure) {
        result.failures.push_back(*o.failure);
      }
      ++next_emit;
    }
  };

  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mutex);
        if (next_index >= n) return;
        i = next_index++;
      }
      Outcome outcome = score_record(*targets[i], base_examples_, {}, i);
      {
        std::lock_guard<std::mutex> lock(mutex);
        outcomes[i] = std::move(outcome);
        done[i] = 1;
        emit_ready();
      }
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return result;
}

PredictionSet run_strategy(const Dataset& dataset, Gateway& gateway,
                           const RunConfig& cfg) {
  Orchestrator orchestrator(dataset, gateway, cfg);
  return orchestrator.run();
}

}  // namespace ctiqa
