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

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include "ctiqa/dataset.hpp"
#include "ctiqa/errors.hpp"
#include "ctiqa/gateway.hpp"
#include "ctiqa/metrics.hpp"
#include "ctiqa/noise.hpp"
#include "ctiqa/orchestrator.hpp"
#include "ctiqa/report.hpp"
#include "ctiqa/strings.hpp"

namespace {

using nlohmann::json;

// Exit codes for `run`: 0 clean, 1 fatal, 2 config error, 3 partial failures.
constexpr int kExitFatal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct CliSettings {
  std::string config_path;
  std::string manifest;
  std::string out_manifest;
  std::string out_dir = "out/run";
  std::string cache_dir = "cache";
  std::string predictions;
  std::string strategy = "zero_shot";
  std::string model;

  std::string template_dir;

  ctiqa::BackendConfig backend;
  ctiqa::RunConfig run;
  long long max_records = -1;
};

/// Precedence: flag > config file > default. The config file is read after
/// parsing, then any flag the user actually passed wins.
void apply_config_file(const CLI::App& app, CliSettings& s) {
  if (s.config_path.empty()) return;
  std::ifstream in(s.config_path);
  if (!in) {
    throw ctiqa::Error(ctiqa::Errc::config_error,
                       "cannot open config file " + s.config_path);
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ctiqa::Error(ctiqa::Errc::config_error,
                       std::string("config file is not valid JSON: ") + e.what());
  }

  auto flag_given = [&](const std::string& name) {
    for (const CLI::App* sub : app.get_subcommands()) {
      const CLI::Option* opt = sub->get_option_no_throw(name);
      if (opt != nullptr && opt->count() > 0) return true;
    }
    const CLI::Option* opt = app.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  auto load_str = [&](const char* key, const std::string& flag, std::string& out) {
    if (doc.contains(key) && !flag_given(flag)) out = doc.at(key).get<std::string>();
  };

  load_str("manifest", "--manifest", s.manifest);
  load_str("out_dir", "--out", s.out_dir);
  load_str("cache_dir", "--cache", s.cache_dir);
  load_str("strategy", "--strategy", s.strategy);
  load_str("template_dir", "--templates", s.template_dir);

  if (doc.contains("k") && !flag_given("--k")) s.run.k = doc.at("k").get<int>();
  if (doc.contains("seed") && !flag_given("--seed")) {
    s.run.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("warmup_count") && !flag_given("--warmup")) {
    s.run.warmup_count = doc.at("warmup_count").get<int>();
  }
  if (doc.contains("buffer_cap") && !flag_given("--buffer-cap")) {
    s.run.buffer_cap = doc.at("buffer_cap").get<std::size_t>();
  }
  if (doc.contains("resample_per_step") && !flag_given("--resample-per-step")) {
    s.run.resample_per_step = doc.at("resample_per_step").get<bool>();
  }
  if (doc.contains("interleave_every") && !flag_given("--interleave-every")) {
    s.run.interleave_every = doc.at("interleave_every").get<int>();
  }

  if (doc.contains("backend")) {
    const json& b = doc.at("backend");
    if (b.contains("kind") && !flag_given("--backend-kind")) {
      std::string kind = b.at("kind").get<std::string>();
      if (kind == "mock") {
        s.backend.kind = ctiqa::BackendConfig::Kind::mock;
      } else if (kind == "http") {
        s.backend.kind = ctiqa::BackendConfig::Kind::http;
      } else {
        throw ctiqa::Error(ctiqa::Errc::config_error,
                           "backend.kind must be 'mock' or 'http', got '" + kind + "'");
      }
    }
    auto load_backend_str = [&](const char* key, const std::string& flag,
                                std::string& out) {
      if (b.contains(key) && !flag_given(flag)) out = b.at(key).get<std::string>();
    };
    load_backend_str("base_url", "--base-url", s.backend.base_url);
    load_backend_str("model_name", "--model", s.backend.model_name);
    load_backend_str("api_key_env", "--api-key-env", s.backend.api_key_env);
    if (b.contains("temperature") && !flag_given("--temperature")) {
      s.backend.temperature = b.at("temperature").get<double>();
    }
    if (b.contains("max_retries") && !flag_given("--max-retries")) {
      s.backend.max_retries = b.at("max_retries").get<int>();
    }
    if (b.contains("requests_per_minute") && !flag_given("--rpm")) {
      s.backend.requests_per_minute = b.at("requests_per_minute").get<int>();
    }
    if (b.contains("timeout_s") && !flag_given("--timeout")) {
      s.backend.timeout_s = b.at("timeout_s").get<double>();
    }
    if (b.contains("concurrency") && !flag_given("--concurrency")) {
      s.backend.concurrency = b.at("concurrency").get<int>();
    }
    if (b.contains("mock_seed") && !flag_given("--mock-seed")) {
      s.backend.mock_seed = b.at("mock_seed").get<std::uint64_t>();
    }
  }
}

void add_backend_flags(CLI::App* cmd, CliSettings& s) {
  cmd->add_option("--backend-kind", [&s](const std::vector<std::string>& values) {
        const std::string& kind = values.back();
        if (kind == "mock") {
          s.backend.kind = ctiqa::BackendConfig::Kind::mock;
        } else if (kind == "http") {
          s.backend.kind = ctiqa::BackendConfig::Kind::http;
        } else {
          return false;
        }
        return true;
      },
      "backend kind: mock or http");
  cmd->add_option("--base-url", s.backend.base_url, "chat-completions base URL");
  cmd->add_option("--model", s.backend.model_name, "model name");
  cmd->add_option("--api-key-env", s.backend.api_key_env,
                  "environment variable holding the API key");
  cmd->add_option("--temperature", s.backend.temperature, "sampling temperature");
  cmd->add_option("--max-retries", s.backend.max_retries, "retry budget");
  cmd->add_option("--rpm", s.backend.requests_per_minute, "requests per minute");
  cmd->add_option("--timeout", s.backend.timeout_s, "request timeout, seconds");
  cmd->add_option("--concurrency", s.backend.concurrency, "max in-flight requests");
  cmd->add_option("--mock-seed", s.backend.mock_seed, "mock backend seed");
}

std::string json_line(const ctiqa::Prediction& p, const std::string& strategy,
                      const std::string& fingerprint) {
  json line{{"id", p.id},
            {"y_hat", p.y_hat},
            {"explanation", p.explanation},
            {"strategy", strategy},
            {"config_fingerprint", fingerprint},
            {"timestamp", p.timestamp}};
  return line.dump();
}

std::string json_line(const ctiqa::FeedbackEntry& e) {
  json line{{"id", e.id}, {"y", e.y}, {"y_hat", e.y_hat}, {"e", e.e}, {"n", e.n}};
  return line.dump();
}

int cmd_ingest_check(const CliSettings& s) {
  ctiqa::Dataset dataset = ctiqa::load_manifest(s.manifest);
  std::size_t bad = 0;
  for (const auto& rec : dataset.records) {
    try {
      ctiqa::ImageBuffer img = ctiqa::load_image(dataset, rec);
      (void)img;
    } catch (const ctiqa::Error& e) {
      std::cerr << "record '" << rec.id << "': " << e.what() << "\n";
      ++bad;
    }
  }
  std::cout << "manifest: " << s.manifest << "\n"
            << "train: " << dataset.count(ctiqa::Split::train) << "\n"
            << "test: " << dataset.count(ctiqa::Split::test) << "\n"
            << "undecodable images: " << bad << "\n";
  return bad == 0 ? 0 : 1;
}

int cmd_estimate_noise(const CliSettings& s) {
  ctiqa::Dataset dataset = ctiqa::load_manifest(s.manifest);
  bool had_noise = false;
  for (const auto& rec : dataset.records) {
    if (rec.noise) had_noise = true;
  }
  if (had_noise) {
    std::cerr << "warning: noise column already populated; overwriting\n";
  }
  for (auto& rec : dataset.records) {
    ctiqa::ImageBuffer img;
    try {
      img = ctiqa::load_image(dataset, rec);
    } catch (const ctiqa::Error& e) {
      std::cerr << "error: cannot read image for record '" << rec.id
                << "': " << e.what() << "\n";
      return 1;
    }
    ctiqa::NoiseEstimate estimate = ctiqa::estimate_noise(img);
    rec.noise = estimate.sigma_ref;
  }
  dataset = ctiqa::rebase_dataset(
      std::move(dataset),
      std::filesystem::absolute(s.out_manifest).parent_path());
  ctiqa::write_manifest(dataset, s.out_manifest);
  std::cout << "wrote " << s.out_manifest << " with noise for "
            << dataset.records.size() << " records\n";
  return 0;
}

int cmd_tag_regions(CliSettings& s) {
  ctiqa::Dataset dataset = ctiqa::load_manifest(s.manifest);
  ctiqa::PromptConfig prompt_cfg;
  if (!s.template_dir.empty()) {
    prompt_cfg.templates = ctiqa::TemplateSet::load_dir(s.template_dir);
  }
  ctiqa::Gateway gateway(s.backend, s.cache_dir, prompt_cfg.templates.hash());

  std::size_t failed = 0;
  std::size_t unparseable = 0;
  for (auto& rec : dataset.records) {
    try {
      ctiqa::ImageBuffer img = ctiqa::load_image(dataset, rec);
      ctiqa::Prompt prompt = ctiqa::build_region_query(img, prompt_cfg);
      ctiqa::Completion completion = gateway.complete(prompt);

      std::string label = "unknown";
      std::size_t tag = completion.text.find("REGION:");
      if (tag != std::string::npos) {
        std::size_t end = completion.text.find('\n', tag);
        std::string raw = completion.text.substr(
            tag + 7, (end == std::string::npos ? completion.text.size() : end) - tag - 7);
        std::string candidate = ctiqa::to_lower(ctiqa::trim(raw));
        bool allowed = false;
        for (const auto& v : prompt_cfg.region_vocabulary) {
          if (candidate == v) allowed = true;
        }
        if (allowed) {
          label = candidate;
        } else {
          ++unparseable;
        }
      } else {
        ++unparseable;
      }
      rec.region = label;
    } catch (const ctiqa::Error& e) {
      std::cerr << "record '" << rec.id << "': " << e.what() << "\n";
      rec.region = "unknown";
      ++failed;
    }
  }
  dataset = ctiqa::rebase_dataset(
      std::move(dataset),
      std::filesystem::absolute(s.out_manifest).parent_path());
  ctiqa::write_manifest(dataset, s.out_manifest);
  std::cout << "wrote " << s.out_manifest << "; " << unparseable
            << " responses without a usable label, " << failed
            << " failed requests\n";
  if (dataset.records.empty()) return 0;
  return 10 * failed > dataset.records.size() ? 1 : 0;  // >10% failures
}

int cmd_run(CliSettings& s) {
  auto strategy = ctiqa::parse_strategy(s.strategy);
  if (!strategy) {
    std::cerr << "error: unknown strategy '" << s.strategy
              << "' (zero_shot, few_shot, metadata, feedback)\n";
    return kExitConfig;
  }
  s.run.strategy = *strategy;
  if (s.max_records >= 0) {
    s.run.max_records = static_cast<std::size_t>(s.max_records);
  }
  if (!s.template_dir.empty()) {
    s.run.prompt.templates = ctiqa::TemplateSet::load_dir(s.template_dir);
  }

  ctiqa::Dataset dataset;
  try {
    dataset = ctiqa::load_manifest(s.manifest);
  } catch (const ctiqa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::filesystem::create_directories(s.out_dir);
  std::filesystem::path predictions_path =
      std::filesystem::path(s.out_dir) / "predictions.jsonl";
  std::filesystem::path feedback_path =
      std::filesystem::path(s.out_dir) / "feedback.jsonl";
  std::filesystem::path summary_path =
      std::filesystem::path(s.out_dir) / "summary.json";

  ctiqa::Gateway gateway(s.backend, s.cache_dir, s.run.prompt.templates.hash());
  ctiqa::Orchestrator orchestrator(dataset, gateway, s.run);

  std::string fingerprint =
      ctiqa::config_fingerprint(dataset, s.backend, s.run);

  std::ofstream predictions_out(predictions_path, std::ios::binary | std::ios::trunc);
  if (!predictions_out) {
    std::cerr << "error: cannot write " << predictions_path << "\n";
    return kExitFatal;
  }
  std::ofstream feedback_out;
  if (s.run.strategy == ctiqa::Strategy::feedback) {
    feedback_out.open(feedback_path, std::ios::binary | std::ios::trunc);
  }

  orchestrator.set_prediction_sink([&](const ctiqa::Prediction& p) {
    predictions_out << json_line(p, s.strategy, fingerprint) << "\n";
    predictions_out.flush();
  });
  orchestrator.set_feedback_sink([&](const ctiqa::FeedbackEntry& e) {
    feedback_out << json_line(e) << "\n";
    feedback_out.flush();
  });

  auto started = std::chrono::steady_clock::now();
  ctiqa::PredictionSet result;
  try {
    result = orchestrator.run();
  } catch (const ctiqa::Error& e) {
    bool config_class = e.code() == ctiqa::Errc::config_error ||
                        e.code() == ctiqa::Errc::not_enough_examples ||
                        e.code() == ctiqa::Errc::invalid_value;
    std::cerr << "error: " << e.what() << "\n";
    return config_class ? kExitConfig : kExitFatal;
  }
  double wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                started)
                      .count();

  // Deterministic run record; telemetry goes to stderr so reruns stay
  // byte-identical.
  json summary{{"strategy", s.strategy},
               {"model", s.backend.model_name},
               {"config_fingerprint", result.config_fingerprint},
               {"requested", result.predictions.size() + result.failures.size()},
               {"scored", result.predictions.size()},
               {"failed", result.failures.size()}};

  bool truth_available = true;
  std::vector<double> truth, pred;
  for (const auto& p : result.predictions) {
    const ctiqa::ImageRecord* rec = dataset.find(p.id);
    if (!rec || !rec->score) {
      truth_available = false;
      break;
    }
    truth.push_back(*rec->score);
    pred.push_back(p.y_hat);
  }
  if (truth_available && truth.size() >= 3) {
    try {
      ctiqa::MetricReport report = ctiqa::evaluate_metrics(truth, pred);
      summary["metrics"] = {{"plcc", report.plcc},
                            {"srocc", report.srocc},
                            {"krocc", report.krocc},
                            {"overall", report.overall},
                            {"n", report.n}};
    } catch (const ctiqa::Error&) {
      // degenerate prediction sets leave metrics out of the summary
    }
  }
  {
    std::ofstream out(summary_path, std::ios::binary | std::ios::trunc);
    out << summary.dump(2) << "\n";
  }

  std::cerr << "scored " << result.predictions.size() << " records ("
            << result.failures.size() << " failed), cache hits "
            << gateway.cache_hits() << ", network calls " << gateway.network_calls()
            << ", wall " << ctiqa::format_fixed(wall_s, 2) << "s\n";
  for (const auto& f : result.failures) {
    std::cerr << "failed '" << f.id << "': " << f.error << "\n";
  }
  return result.failures.empty() ? 0 : kExitPartial;
}

int cmd_evaluate(const CliSettings& s) {
  ctiqa::Dataset dataset = ctiqa::load_manifest(s.manifest);
  std::ifstream in(s.predictions, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open predictions " << s.predictions << "\n";
    return kExitFatal;
  }

  std::vector<double> truth, pred;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (ctiqa::trim(line).empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      std::cerr << "error: line " << line_no << " is not JSON: " << e.what() << "\n";
      return kExitFatal;
    }
    std::string id = doc.at("id").get<std::string>();
    const ctiqa::ImageRecord* rec = dataset.find(id);
    if (!rec) {
      std::cerr << "error: prediction id '" << id << "' not present in manifest\n";
      return kExitConfig;
    }
    if (!rec->score) {
      std::cerr << "error: record '" << id
                << "' has no radiologist score (blind split); cannot evaluate\n";
      return kExitConfig;
    }
    truth.push_back(*rec->score);
    pred.push_back(doc.at("y_hat").get<double>());
  }

  ctiqa::MetricReport report;
  try {
    report = ctiqa::evaluate_metrics(truth, pred);
  } catch (const ctiqa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::cout << "PLCC:    " << ctiqa::format_fixed(report.plcc, 4) << "\n"
            << "SROCC:   " << ctiqa::format_fixed(report.srocc, 4) << "\n"
            << "KROCC:   " << ctiqa::format_fixed(report.krocc, 4) << "\n"
            << "Overall: " << ctiqa::format_fixed(report.overall, 4) << "\n"
            << "n:       " << report.n << "\n";

  if (!s.out_dir.empty()) {
    std::filesystem::create_directories(s.out_dir);
    json doc{{"plcc", report.plcc},
             {"srocc", report.srocc},
             {"krocc", report.krocc},
             {"overall", report.overall},
             {"n", report.n}};
    std::ofstream out(std::filesystem::path(s.out_dir) / "metrics.json",
                      std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << "\n";
  }
  return 0;
}

int cmd_report(const CliSettings& s) {
  ctiqa::Dataset dataset = ctiqa::load_manifest(s.manifest);
  std::ifstream in(s.predictions, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open predictions " << s.predictions << "\n";
    return kExitFatal;
  }

  std::vector<double> truth, pred;
  std::string strategy = "unknown";
  std::string line;
  while (std::getline(in, line)) {
    if (ctiqa::trim(line).empty()) continue;
    json doc = json::parse(line);
    std::string id = doc.at("id").get<std::string>();
    const ctiqa::ImageRecord* rec = dataset.find(id);
    if (!rec || !rec->score) {
      std::cerr << "error: prediction id '" << id << "' has no score in manifest\n";
      return kExitConfig;
    }
    truth.push_back(*rec->score);
    pred.push_back(doc.at("y_hat").get<double>());
    if (doc.contains("strategy")) strategy = doc.at("strategy").get<std::string>();
  }
  if (truth.empty()) {
    std::cerr << "error: no predictions to report\n";
    return kExitConfig;
  }

  std::string model = s.model.empty() ? "model" : s.model;
  std::filesystem::path out_dir(s.out_dir);
  std::filesystem::create_directories(out_dir);

  ctiqa::RunSummary summary;
  summary.model_name = model;
  summary.strategy = strategy;
  summary.metrics = ctiqa::evaluate_metrics(truth, pred);

  auto write_text = [&](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
  };
  write_text(out_dir / "table.csv", ctiqa::emit_table({summary}, ctiqa::TableFormat::csv));
  write_text(out_dir / "table.json", ctiqa::emit_table({summary}, ctiqa::TableFormat::json));
  write_text(out_dir / "table.md", ctiqa::emit_table({summary}, ctiqa::TableFormat::markdown));
  write_text(out_dir / "scatter.svg", ctiqa::emit_scatter(truth, pred));
  write_text(out_dir / "hist.svg", ctiqa::emit_histogram(truth, pred));

  std::cout << ctiqa::emit_table({summary}, ctiqa::TableFormat::markdown);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LMM-based no-reference CT image quality assessment harness"};
  app.require_subcommand(1);

  CliSettings s;
  app.add_option("--config", s.config_path, "JSON config file")
      ->configurable(false);

  auto* ingest = app.add_subcommand("ingest-check",
                                    "validate a manifest and decode every image");
  ingest->add_option("--manifest", s.manifest, "manifest CSV")->required();

  auto* noise = app.add_subcommand("estimate-noise",
                                   "populate the manifest noise column");
  noise->add_option("--manifest", s.manifest, "input manifest")->required();
  noise->add_option("--out", s.out_manifest, "output manifest")->required();

  auto* regions = app.add_subcommand("tag-regions",
                                     "populate the manifest region column");
  regions->add_option("--manifest", s.manifest, "input manifest")->required();
  regions->add_option("--out", s.out_manifest, "output manifest")->required();
  regions->add_option("--cache", s.cache_dir, "response cache directory");
  regions->add_option("--templates", s.template_dir, "prompt template directory");
  add_backend_flags(regions, s);

  auto* run = app.add_subcommand("run", "run an inference strategy over the test split");
  run->add_option("--manifest", s.manifest, "manifest CSV");
  run->add_option("--out", s.out_dir, "output directory");
  run->add_option("--cache", s.cache_dir, "response cache directory");
  run->add_option("--strategy", s.strategy,
                  "zero_shot, few_shot, metadata, or feedback");
  run->add_option("--k", s.run.k, "in-context example count");
  run->add_option("--seed", s.run.seed, "sampling seed");
  run->add_option("--warmup", s.run.warmup_count, "feedback warm-up size");
  run->add_option("--buffer-cap", s.run.buffer_cap, "feedback buffer cap");
  run->add_flag("--resample-per-step", s.run.resample_per_step,
                "draw fresh examples for every record");
  run->add_option("--interleave-every", s.run.interleave_every,
                  "feedback: re-score a training image every N records");
  run->add_option("--max-records", s.max_records,
                  "stop after N test records (resume later from cache)");
  run->add_option("--templates", s.template_dir, "prompt template directory");
  add_backend_flags(run, s);

  auto* evaluate = app.add_subcommand("evaluate", "score predictions against a manifest");
  evaluate->add_option("--predictions", s.predictions, "predictions.jsonl")->required();
  evaluate->add_option("--manifest", s.manifest, "manifest CSV")->required();
  evaluate->add_option("--out", s.out_dir, "directory for metrics.json")
      ->default_val("");

  auto* report = app.add_subcommand("report", "emit tables and figures for a run");
  report->add_option("--predictions", s.predictions, "predictions.jsonl")->required();
  report->add_option("--manifest", s.manifest, "manifest CSV")->required();
  report->add_option("--out", s.out_dir, "output directory")->required();
  report->add_option("--model-name", s.model, "model label for the table");

  CLI11_PARSE(app, argc, argv);

  try {
    apply_config_file(app, s);
    if (run->parsed() && s.manifest.empty()) {
      std::cerr << "error: no manifest given (flag --manifest or config)\n";
      return kExitConfig;
    }
    if (ingest->parsed()) return cmd_ingest_check(s);
    if (noise->parsed()) return cmd_estimate_noise(s);
    if (regions->parsed()) return cmd_tag_regions(s);
    if (run->parsed()) return cmd_run(s);
    if (evaluate->parsed()) return cmd_evaluate(s);
    if (report->parsed()) return cmd_report(s);
  } catch (const ctiqa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == ctiqa::Errc::config_error) return kExitConfig;
    return kExitFatal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return 0;
}
