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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>

#include "ctiqa/prompt.hpp"

namespace ctiqa {

struct BackendConfig {
  enum class Kind { http, mock };

  Kind kind = Kind::mock;
  /// Requests POST to {base_url}/chat/completions.
  std::string base_url;
  std::string model_name = "mock-iqa";
  /// Name of the environment variable holding the API key. Keys never live
  /// in config files or flags.
  std::string api_key_env = "CTIQA_API_KEY";
  double temperature = 0.0;
  int max_retries = 5;
  int requests_per_minute = 60;
  double timeout_s = 120.0;
  /// Maximum in-flight requests the orchestrator may run against this backend.
  int concurrency = 4;
  std::uint64_t mock_seed = 0;
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

/// Parsed model output for one scoring request.
struct ScoredResponse {
  double score = 0.0;  // in [0, 4]; out-of-range model values are clamped
  std::string explanation;
  std::string raw;
  bool clamped = false;
  std::optional<TokenUsage> usage;
};

struct CacheEntry {
  std::string key;       // 64 hex chars
  std::string response;  // raw backend response, verbatim
  std::int64_t created_at = 0;
};

/// One file per entry under <dir>/<first-2-hex>/<digest>.json, written via
/// temp-file-then-rename so a crash never leaves a torn entry.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<CacheEntry> get(const std::string& key) const;
  void put(const CacheEntry& entry);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

/// Token bucket: capacity = requests_per_minute, refill rpm/60 per second.
/// Clock and sleeper are injectable for tests.
class RateLimiter {
 public:
  explicit RateLimiter(int requests_per_minute);

  void acquire();

  void set_clock(std::function<double()> now_seconds);
  void set_sleeper(std::function<void(double)> sleep_seconds);

 private:
  double capacity_;
  double refill_per_second_;
  double tokens_;
  double last_refill_;
  std::function<double()> now_;
  std::function<void(double)> sleep_;
  std::mutex mutex_;
};

struct HttpResult {
  int status = 0;
  std::string body;
  bool network_error = false;
  bool timed_out = false;
  std::string error;
};

/// POST transport: (url, bearer_token, json_body, timeout_s) -> result.
/// Swappable so retry behavior is testable without sockets.
using Transport = std::function<HttpResult(const std::string&, const std::string&,
                                           const std::string&, double)>;

/// Digest binding a response to everything that influenced it: canonical
/// prompt bytes, model name, temperature, and the prompt template hash.
std::string cache_key(const Prompt& prompt, const BackendConfig& backend,
                      const std::string& template_hash);

/// Serializes a prompt into a chat-completions request body (JSON), images
/// inlined as base64 data URIs.
std::string to_chat_completions_json(const Prompt& prompt, const BackendConfig& backend);

/// Pulls the assistant text out of a chat-completions response body.
std::string extract_content(const std::string& raw_body);

/// Token counts from a chat-completions response, when the backend reports
/// them.
std::optional<TokenUsage> extract_usage(const std::string& raw_body);

/// Parses the scoring grammar `SCORE: <number>` / `EXPLANATION: <text>`,
/// falling back to the first decimal number in [0, 4] anywhere in the text.
/// Out-of-range grammar values are clamped and flagged. Throws NoScoreFound.
ScoredResponse parse_score(const std::string& raw_text);

/// Closed-form mock prediction: clamp(4 - 40*sigma_ref + epsilon, 0, 4).
double mock_score_value(double sigma_ref, double epsilon);

/// Deterministic offline scorer: estimates sigma_ref of the prompt's target
/// image (the last image part) and renders `SCORE:`/`EXPLANATION:` from it.
/// The jitter epsilon ~ U[-0.25, 0.25] is keyed by (seed, cache key), so
/// reruns are bit-identical.
std::string mock_score(const Prompt& prompt, std::uint64_t seed,
                       const std::string& key);

/// Mock entry point covering both prompt families: region queries get a
/// deterministic `REGION: <label>` from the vocabulary listed in the prompt,
/// anything else goes through mock_score.
std::string mock_respond(const Prompt& prompt, std::uint64_t seed,
                         const std::string& key);

struct Completion {
  std::string text;  // assistant text (content already extracted for http)
  bool cache_hit = false;
  std::int64_t created_at = 0;
  std::optional<TokenUsage> usage;
};

/// Cached, rate-limited, retrying client over one backend.
class Gateway {
 public:
  Gateway(BackendConfig config, std::filesystem::path cache_dir,
          std::string template_hash);

  /// Cache lookup, then dispatch (mock or HTTP with retry/backoff), then
  /// store. Thread-safe; up to config().concurrency callers may be in flight.
  Completion complete(const Prompt& prompt);

  /// Dispatches without consulting the cache; returns the raw response
  /// (HTTP body verbatim, or the mock's raw text).
  std::string send(const Prompt& prompt);

  const BackendConfig& config() const { return config_; }
  const std::string& template_hash() const { return template_hash_; }

  std::uint64_t network_calls() const { return network_calls_.load(); }
  std::uint64_t cache_hits() const { return cache_hits_.load(); }
  std::uint64_t retries() const { return retries_.load(); }

  // Test seams.
  void set_transport(Transport transport);
  void set_sleeper(std::function<void(double)> sleep_seconds);
  void set_backoff_rng_seed(std::uint64_t seed);
  RateLimiter& rate_limiter() { return limiter_; }

 private:
  std::string send_http(const Prompt& prompt);

  BackendConfig config_;
  ResponseCache cache_;
  std::string template_hash_;
  RateLimiter limiter_;
  Transport transport_;
  std::function<void(double)> sleep_;
  std::uint64_t backoff_seed_;
  std::atomic<std::uint64_t> backoff_counter_{0};
  std::atomic<std::uint64_t> network_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> retries_{0};
};

}  // namespace ctiqa
