// Copyright 2026 The qintent Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef QINTENT_LLM_CLIENT_H_
#define QINTENT_LLM_CLIENT_H_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qintent/baseline.h"
#include "qintent/prompting.h"
#include "qintent/taxonomy.h"

namespace qintent {

struct HttpEndpointConfig {
  std::string url;       // http(s)://host[:port]/path
  std::string auth_env;  // name of the env var holding the bearer token
  std::string model;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{200};
};

enum class BiasAction { kAdd, kRemove };

struct PersonaBias {
  std::string persona_id;
  EntityId entity;
  BiasAction action = BiasAction::kAdd;
};

// Offline annotator: gazetteer lookup with per-persona biases and seeded
// confidence noise.
struct MockConfig {
  uint64_t seed = 0;
  std::shared_ptr<const EntityRegistry> registry;
  std::shared_ptr<const Gazetteer> gazetteer;
  double noise_rate = 0.0;
  std::vector<PersonaBias> persona_bias;
  std::string model = "mock";
};

enum class AnnotatorKind { kHttpEndpoint, kMock };

struct AnnotatorHandle {
  std::variant<HttpEndpointConfig, MockConfig> config;

  AnnotatorKind kind() const {
    return std::holds_alternative<MockConfig>(config) ? AnnotatorKind::kMock
                                                      : AnnotatorKind::kHttpEndpoint;
  }
  const std::string &model() const;

  // Throws kConfig when an invariant is violated (max_retries < 0,
  // timeout <= 0, noise_rate outside [0,1), missing gazetteer).
  void Validate() const;
};

struct BatchOptions {
  int max_in_flight = 4;
  double requests_per_second = 2.0;  // <= 0 disables rate limiting
  std::filesystem::path cache_dir;   // empty keeps the cache in memory only
};

struct AnnotationFailure {
  int attempts = 0;
  int status = 0;  // last HTTP status, 0 for transport errors
  std::string reason;
};

// A raw response string or a failure record.
using AnnotationResult = std::variant<std::string, AnnotationFailure>;

// Content-addressed, append-only response store: one file per digest.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string Key(std::string_view prompt_text, std::string_view model);

  std::optional<std::string> Lookup(const std::string &key);
  void Store(const std::string &key, const std::string &value);

 private:
  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, std::string> memory_;
};

// Runs prompts against an annotator. Shareable across threads.
class Annotator {
 public:
  explicit Annotator(AnnotatorHandle handle, BatchOptions options = {});
  ~Annotator();

  // Responses are positionally aligned with prompts. Transient failures
  // (transport errors, 429, 5xx) are retried with exponential backoff;
  // permanent ones come back as AnnotationFailure. Throws kConfig before any
  // request when the auth env var is missing.
  std::vector<AnnotationResult> AnnotateBatch(const std::vector<PromptText> &prompts);

  // Backend calls actually made (HTTP attempts or mock invocations).
  uint64_t request_count() const { return requests_.load(); }
  uint64_t cache_hits() const { return cache_hits_.load(); }

  const AnnotatorHandle &handle() const { return handle_; }

 private:
  AnnotationResult Call(const PromptText &prompt, const std::string &token);
  void AcquireRateSlot();

  AnnotatorHandle handle_;
  BatchOptions options_;
  ResponseCache cache_;
  std::atomic<uint64_t> requests_{0};
  std::atomic<uint64_t> cache_hits_{0};
  std::mutex rate_mu_;
  std::chrono::steady_clock::time_point next_slot_{};
};

// Deterministic given (seed, query, persona). When prompt_text carries an
// examples block, ambiguous gazetteer phrases listed there resolve to the
// listed entity; unresolved ambiguous phrases yield every candidate at Low.
std::string MockAnnotate(const MockConfig &config, std::string_view query,
                         std::string_view persona_id = {},
                         std::string_view prompt_text = {});

}  // namespace qintent

#endif  // QINTENT_LLM_CLIENT_H_
