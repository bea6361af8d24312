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
#include <set>

#include "ctiqa/errors.hpp"
#include "ctiqa/orchestrator.hpp"
#include "ctiqa/synthetic.hpp"
#include "helpers.hpp"

using namespace ctiqa;

namespace {

Dataset records_only(const std::vector<double>& scores) {
  Dataset d;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    ImageRecord rec;
    rec.id = "r" + std::to_string(i);
    rec.path = "images/r.png";
    rec.split = Split::train;
    rec.score = scores[i];
    d.records.push_back(std::move(rec));
  }
  return d;
}

/// Synthetic dataset on disk with region/noise columns filled in, so the
/// metadata and feedback strategies run without the CLI passes.
Dataset tagged_dataset(const std::filesystem::path& dir, std::size_t train = 12,
                       std::size_t test_groups = 2) {
  Dataset d = write_synthetic_dataset(dir, {.train_count = train,
                                            .test_group_count = test_groups,
                                            .image_size = 48,
                                            .seed = 5});
  for (auto& rec : d.records) {
    rec.region = "abdomen";
    rec.noise = 0.003;
  }
  write_manifest(d, dir / "manifest.csv");
  return d;
}

RunConfig base_config(Strategy strategy) {
  RunConfig cfg;
  cfg.strategy = strategy;
  cfg.k = 5;
  cfg.seed = 1;
  cfg.warmup_count = 3;
  return cfg;
}

}  // namespace

TEST_CASE("stratified sampling: k=10 over uniform scores takes 2 per stratum") {
  std::vector<double> scores;
  for (int s = 0; s < 5; ++s) {
    for (int i = 0; i < 8; ++i) scores.push_back(0.4 + 0.8 * s);  // mid-stratum
  }
  Dataset d = records_only(scores);
  auto picks = sample_example_records(d, 10, 0);
  REQUIRE(picks.size() == 10);
  std::array<int, 5> per_stratum{};
  for (const ImageRecord* r : picks) {
    ++per_stratum[std::min<std::size_t>(std::size_t(*r->score / 0.8), 4)];
  }
  for (int s = 0; s < 5; ++s) CHECK(per_stratum[s] == 2);
}

TEST_CASE("stratified sampling: k equal to pool size takes everything") {
  Dataset d = records_only({0.1, 2.0, 3.9});
  auto picks = sample_example_records(d, 3, 42);
  REQUIRE(picks.size() == 3);
  std::set<std::string> ids;
  for (const ImageRecord* r : picks) ids.insert(r->id);
  CHECK(ids == std::set<std::string>{"r0", "r1", "r2"});
}

TEST_CASE("stratified sampling is deterministic in the seed") {
  std::vector<double> scores;
  for (int i = 0; i < 40; ++i) scores.push_back(4.0 * i / 39.0);
  Dataset d = records_only(scores);
  auto a = sample_example_records(d, 10, 9);
  auto b = sample_example_records(d, 10, 9);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->id == b[i]->id);

  auto c = sample_example_records(d, 10, 10);
  bool identical = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    identical = identical && a[i]->id == c[i]->id;
  }
  CHECK(!identical);  // different seed, different draw
}

TEST_CASE("empty strata redistribute round-robin") {
  // All scores in the top stratum: the other four are empty.
  std::vector<double> scores(20, 3.6);
  Dataset d = records_only(scores);
  auto picks = sample_example_records(d, 10, 3);
  CHECK(picks.size() == 10);
  for (const ImageRecord* r : picks) CHECK(*r->score == 3.6);
}

TEST_CASE("sampling covers every nonempty stratum when k >= stratum count") {
  std::vector<double> scores{0.1, 1.0, 1.9, 2.7, 3.7, 0.2, 1.1, 2.0, 2.8, 3.8};
  Dataset d = records_only(scores);
  auto picks = sample_example_records(d, 5, 17);
  std::set<std::size_t> strata;
  for (const ImageRecord* r : picks) {
    strata.insert(std::min<std::size_t>(std::size_t(*r->score / 0.8), 4));
  }
  CHECK(strata.size() == 5);
}

TEST_CASE("sampling refuses when the pool is too small") {
  Dataset d = records_only({1.0, 2.0});
  try {
    sample_example_records(d, 3, 0);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_enough_examples);
  }
}

TEST_CASE("update_feedback computes e exactly and caps FIFO") {
  std::vector<FeedbackEntry> buffer;
  buffer = update_feedback(std::move(buffer), "a", 3.0, 2.5, 0.004, 2);
  CHECK(buffer.back().e == 0.5);
  buffer = update_feedback(std::move(buffer), "b", 2.0, 2.0, 0.002, 2);
  CHECK(buffer.back().e == 0.0);
  buffer = update_feedback(std::move(buffer), "c", 1.0, 3.5, 0.001, 2);
  REQUIRE(buffer.size() == 2);
  CHECK(buffer[0].id == "b");
  CHECK(buffer[1].id == "c");
  CHECK(buffer[1].e == 2.5);

  CHECK_THROWS_AS(update_feedback({}, "bad", 5.0, 1.0, 0.0, 2), Error);
}

TEST_CASE("zero-shot run yields one prediction per test record") {
  testutil::TempDir dir("run0");
  Dataset d = tagged_dataset(dir.path() / "data", 8, 2);  // 4 test records
  BackendConfig backend;  // mock
  Gateway gw(backend, dir.path() / "cache", PromptConfig{}.templates.hash());
  PredictionSet result = run_strategy(d, gw, base_config(Strategy::zero_shot));
  CHECK(result.predictions.size() == 4);
  CHECK(result.failures.empty());
  CHECK(gw.network_calls() == 0);
  std::set<std::string> ids;
  for (const auto& p : result.predictions) {
    ids.insert(p.id);
    CHECK(p.y_hat >= 0.0);
    CHECK(p.y_hat <= 4.0);
    CHECK(p.timestamp == 0);  // mock entries carry the fixed timestamp
  }
  CHECK(ids.size() == 4);
  CHECK(result.predictions[0].id == "test000");  // record order
}

TEST_CASE("few-shot and metadata runs complete against the mock") {
  testutil::TempDir dir("run1");
  Dataset d = tagged_dataset(dir.path() / "data");
  BackendConfig backend;
  for (Strategy s : {Strategy::few_shot, Strategy::metadata}) {
    Gateway gw(backend, dir.path() / "cache", PromptConfig{}.templates.hash());
    PredictionSet result = run_strategy(d, gw, base_config(s));
    CAPTURE(strategy_name(s));
    CHECK(result.predictions.size() == d.count(Split::test));
    CHECK(result.failures.empty());
  }
}

TEST_CASE("metadata strategy refuses targets without metadata") {
  testutil::TempDir dir("run2");
  Dataset d = write_synthetic_dataset(dir.path() / "data",
                                      {.train_count = 8,
                                       .test_group_count = 2,
                                       .image_size = 48,
                                       .seed = 5});  // no region/noise columns
  BackendConfig backend;
  Gateway gw(backend, dir.path() / "cache", PromptConfig{}.templates.hash());
  try {
    run_strategy(d, gw, base_config(Strategy::metadata));
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config_error);
  }
}

TEST_CASE("feedback run fills the warm-up buffer before the first test record") {
  testutil::TempDir dir("run3");
  Dataset d = tagged_dataset(dir.path() / "data");
  BackendConfig backend;
  Gateway gw(backend, dir.path() / "cache", PromptConfig{}.templates.hash());
  RunConfig cfg = base_config(Strategy::feedback);
  cfg.warmup_count = 5;

  std::vector<FeedbackEntry> seen;
  std::vector<std::string> prediction_ids;
  Orchestrator orch(d, gw, cfg);
  orch.set_feedback_sink([&](const FeedbackEntry& e) { seen.push_back(e); });
  orch.set_prediction_sink([&](const Prediction& p) {
    if (prediction_ids.empty()) {
      // By the first test prediction the warm-up must be complete.
      CHECK(seen.size() == 5);
    }
    prediction_ids.push_back(p.id);
  });
  PredictionSet result = orch.run();

  CHECK(result.predictions.size() == d.count(Split::test));
  REQUIRE(result.feedback_log.size() == 5);
  for (const auto& e : result.feedback_log) {
    CHECK(e.e == std::fabs(e.y - e.y_hat));
    CHECK(e.id.rfind("train", 0) == 0);  // warm-up draws training images only
  }
}

TEST_CASE("interleaved feedback refreshes the buffer between test records") {
  testutil::TempDir dir("runil");
  Dataset d = tagged_dataset(dir.path() / "data");  // 4 test records
  BackendConfig backend;
  Gateway gw(backend, dir.path() / "cache", PromptConfig{}.templates.hash());
  RunConfig cfg = base_config(Strategy::feedback);
  cfg.warmup_count = 2;
  cfg.interleave_every = 2;
  PredictionSet result = run_strategy(d, gw, cfg);
  CHECK(result.predictions.size() == d.count(Split::test));
  // 2 warm-up entries plus one refresh after every 2nd test record.
  CHECK(result.feedback_log.size() == 3);
  for (const auto& e : result.feedback_log) {
    CHECK(e.id.rfind("train", 0) == 0);
  }
}

TEST_CASE("prediction sinks fire in record order") {
  testutil::TempDir dir("run4");
  Dataset d = tagged_dataset(dir.path() / "data", 10, 3);
  BackendConfig backend;
  backend.concurrency = 4;
  Gateway gw(backend, dir.path() / "cache", PromptConfig{}.templates.hash());
  Orchestrator orch(d, gw, base_config(Strategy::zero_shot));
  std::vector<std::string> order;
  orch.set_prediction_sink([&](const Prediction& p) { order.push_back(p.id); });
  orch.run();
  REQUIRE(order.size() == 6);
  for (std::size_t i = 0; i < order.size(); ++i) {
    CHECK(order[i] == "test" + std::string(i < 10 ? "00" : "0") + std::to_string(i));
  }
}

TEST_CASE("reruns are bit-identical and fully cached") {
  testutil::TempDir dir("run5");
  Dataset d = tagged_dataset(dir.path() / "data");
  BackendConfig backend;
  RunConfig cfg = base_config(Strategy::few_shot);

  Gateway first_gw(backend, dir.path() / "cache", cfg.prompt.templates.hash());
  PredictionSet first = run_strategy(d, first_gw, cfg);
  // The test split holds identical duplicate pairs, so even a cold run may
  // serve the second member of a pair from cache.
  CHECK(first_gw.cache_hits() <= 2);

  Gateway second_gw(backend, dir.path() / "cache", cfg.prompt.templates.hash());
  PredictionSet second = run_strategy(d, second_gw, cfg);
  CHECK(second_gw.cache_hits() == second.predictions.size());

  REQUIRE(first.predictions.size() == second.predictions.size());
  for (std::size_t i = 0; i < first.predictions.size(); ++i) {
    CHECK(first.predictions[i].id == second.predictions[i].id);
    CHECK(first.predictions[i].y_hat == second.predictions[i].y_hat);
    CHECK(first.predictions[i].explanation == second.predictions[i].explanation);
    CHECK(first.predictions[i].timestamp == second.predictions[i].timestamp);
  }
  CHECK(first.config_fingerprint == second.config_fingerprint);
}

TEST_CASE("resample_per_step draws fresh examples for every record") {
  testutil::TempDir dir("run8");
  Dataset d = tagged_dataset(dir.path() / "data");
  BackendConfig backend;
  RunConfig cfg = base_config(Strategy::few_shot);
  cfg.resample_per_step = true;

  // The test split contains identical duplicate images: with one shared
  // example set their prompts alias in the cache, with per-step sampling
  // they must not.
  Gateway gw(backend, dir.path() / "cache", cfg.prompt.templates.hash());
  PredictionSet first = run_strategy(d, gw, cfg);
  CHECK(gw.cache_hits() == 0);
  CHECK(first.predictions.size() == d.count(Split::test));

  Gateway gw2(backend, dir.path() / "cache", cfg.prompt.templates.hash());
  PredictionSet second = run_strategy(d, gw2, cfg);
  REQUIRE(second.predictions.size() == first.predictions.size());
  for (std::size_t i = 0; i < first.predictions.size(); ++i) {
    CHECK(second.predictions[i].y_hat == first.predictions[i].y_hat);
  }
}

TEST_CASE("max_records stops early and a rerun completes identically") {
  testutil::TempDir dir("run6");
  Dataset d = tagged_dataset(dir.path() / "data");
  BackendConfig backend;
  RunConfig cfg = base_config(Strategy::zero_shot);

  RunConfig partial = cfg;
  partial.max_records = 2;
  Gateway gw1(backend, dir.path() / "cache", cfg.prompt.templates.hash());
  PredictionSet head = run_strategy(d, gw1, partial);
  CHECK(head.predictions.size() == 2);

  Gateway gw2(backend, dir.path() / "cache", cfg.prompt.templates.hash());
  PredictionSet full = run_strategy(d, gw2, cfg);
  CHECK(full.predictions.size() == d.count(Split::test));
  CHECK(gw2.cache_hits() == 2);  // the interrupted prefix came from cache
  for (std::size_t i = 0; i < head.predictions.size(); ++i) {
    CHECK(full.predictions[i].y_hat == head.predictions[i].y_hat);
  }
}

TEST_CASE("config fingerprint separates strategies and seeds") {
  testutil::TempDir dir("run7");
  Dataset d = tagged_dataset(dir.path() / "data");
  BackendConfig backend;
  RunConfig a = base_config(Strategy::zero_shot);
  RunConfig b = base_config(Strategy::few_shot);
  RunConfig c = base_config(Strategy::zero_shot);
  c.seed = 99;
  CHECK(config_fingerprint(d, backend, a) != config_fingerprint(d, backend, b));
  CHECK(config_fingerprint(d, backend, a) != config_fingerprint(d, backend, c));
  CHECK(config_fingerprint(d, backend, a) == config_fingerprint(d, backend, a));
}

TEST_CASE("strategy names round-trip") {
  for (Strategy s : {Strategy::zero_shot, Strategy::few_shot, Strategy::metadata,
                     Strategy::feedback}) {
    CHECK(parse_strategy(strategy_name(s)) == s);
  }
  CHECK(!parse_strategy("bogus").has_value());
}
