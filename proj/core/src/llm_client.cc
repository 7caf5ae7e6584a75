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
#include "qintent/llm_client.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"
#include "qintent/digest.h"
#include "qintent/error.h"
#include "qintent/text.h"

namespace qintent {

using json = nlohmann::json;

const std::string &AnnotatorHandle::model() const {
  if (const auto *mock = std::get_if<MockConfig>(&config)) return mock->model;
  return std::get<HttpEndpointConfig>(config).model;
}

void AnnotatorHandle::Validate() const {
  if (const auto *http = std::get_if<HttpEndpointConfig>(&config)) {
    if (http->max_retries < 0) throw Error(ErrorKind::kConfig, "max_retries must be >= 0");
    if (http->timeout.count() <= 0) throw Error(ErrorKind::kConfig, "timeout must be > 0");
    if (http->url.find("://") == std::string::npos) {
      throw Error(ErrorKind::kConfig, "endpoint url needs a scheme: " + http->url);
    }
    return;
  }
  const auto &mock = std::get<MockConfig>(config);
  if (!(mock.noise_rate >= 0.0 && mock.noise_rate < 1.0)) {
    throw Error(ErrorKind::kConfig, "noise_rate must be in [0, 1)");
  }
  if (!mock.gazetteer || !mock.registry) {
    throw Error(ErrorKind::kConfig, "mock annotator needs a registry and gazetteer");
  }
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::string ResponseCache::Key(std::string_view prompt_text, std::string_view model) {
  std::string buf(prompt_text);
  buf.push_back('\0');
  buf.append(model);
  return Sha256Hex(buf);
}

std::optional<std::string> ResponseCache::Lookup(const std::string &key) {
  std::lock_guard<std::mutex> lock(mu_);
  if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  if (dir_.empty()) return std::nullopt;
  std::ifstream in(dir_ / (key + ".txt"), std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  memory_.emplace(key, ss.str());
  return ss.str();
}

void ResponseCache::Store(const std::string &key, const std::string &value) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!memory_.emplace(key, value).second) return;
  if (dir_.empty()) return;
  const auto path = dir_ / (key + ".txt");
  if (std::filesystem::exists(path)) return;
  const auto tmp = dir_ / (key + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << value;
    if (!out) throw Error(ErrorKind::kIo, "cannot write cache entry " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Annotator::Annotator(AnnotatorHandle handle, BatchOptions options)
    : handle_(std::move(handle)), options_(std::move(options)), cache_(options_.cache_dir) {
  handle_.Validate();
  if (options_.max_in_flight < 1) throw Error(ErrorKind::kConfig, "max_in_flight must be >= 1");
}

Annotator::~Annotator() = default;

void Annotator::AcquireRateSlot() {
  if (options_.requests_per_second <= 0.0) return;
  const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / options_.requests_per_second));
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard<std::mutex> lock(rate_mu_);
    slot = std::max(std::chrono::steady_clock::now(), next_slot_);
    next_slot_ = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

ParsedUrl ParseUrl(const std::string &url) {
  size_t scheme_end = url.find("://");
  size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool IsTransient(int status) { return status == 429 || status >= 500; }

}  // namespace

AnnotationResult Annotator::Call(const PromptText &prompt, const std::string &token) {
  if (const auto *mock = std::get_if<MockConfig>(&handle_.config)) {
    ++requests_;
    return MockAnnotate(*mock, prompt.query, prompt.persona_id, prompt.text);
  }
  const auto &cfg = std::get<HttpEndpointConfig>(handle_.config);
  const ParsedUrl url = ParseUrl(cfg.url);
  httplib::Client client(url.base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
  const std::string body = json{{"model", cfg.model}, {"prompt", prompt.text}}.dump();

  AnnotationFailure failure;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      auto delay = cfg.backoff_base * (1LL << std::min(attempt - 1, 16));
      std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(
          delay, std::chrono::milliseconds(10000)));
    }
    AcquireRateSlot();
    ++requests_;
    failure.attempts = attempt + 1;
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      failure.status = 0;
      failure.reason = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    failure.status = res->status;
    failure.reason = "HTTP " + std::to_string(res->status);
    if (!IsTransient(res->status)) return failure;
  }
  return failure;
}

std::vector<AnnotationResult> Annotator::AnnotateBatch(
    const std::vector<PromptText> &prompts) {
  if (prompts.empty()) throw Error(ErrorKind::kPrecondition, "empty prompt batch");
  std::string token;
  if (const auto *http = std::get_if<HttpEndpointConfig>(&handle_.config)) {
    if (!http->auth_env.empty()) {
      const char *value = std::getenv(http->auth_env.c_str());
      if (value == nullptr || *value == '\0') {
        throw Error(ErrorKind::kConfig,
                    "auth environment variable " + http->auth_env + " is not set");
      }
      token = value;
    }
  }

  std::vector<AnnotationResult> results(prompts.size());
  const std::string &model = handle_.model();
  auto work = [&](size_t i) {
    const std::string key = ResponseCache::Key(prompts[i].text, model);
    if (auto hit = cache_.Lookup(key)) {
      ++cache_hits_;
      results[i] = *hit;
      return;
    }
    AnnotationResult r = Call(prompts[i], token);
    if (const auto *text = std::get_if<std::string>(&r)) cache_.Store(key, *text);
    results[i] = std::move(r);
  };

  const size_t workers = handle_.kind() == AnnotatorKind::kMock
                             ? 1
                             : std::min<size_t>(options_.max_in_flight, prompts.size());
  if (workers <= 1) {
    for (size_t i = 0; i < prompts.size(); ++i) work(i);
    return results;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  std::mutex err_mu;
  std::exception_ptr err;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (size_t i; (i = next.fetch_add(1)) < prompts.size();) work(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto &t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return results;
}

namespace {

// "<EntityId> entity examples: a, b, c, etc." lines from a prompt.
std::unordered_map<std::string, EntityId> ParseExampleHints(
    const EntityRegistry &registry, std::string_view prompt_text) {
  std::unordered_map<std::string, EntityId> hints;
  constexpr std::string_view kMarker = " entity examples:";
  for (const std::string &line : Split(prompt_text, '\n')) {
    size_t pos = line.find(kMarker);
    if (pos == std::string::npos) continue;
    auto entity = registry.Find(Trim(std::string_view(line).substr(0, pos)));
    if (!entity) continue;
    for (const std::string &item : Split(line.substr(pos + kMarker.size()), ',')) {
      std::string phrase = NormalizeText(item);
      if (phrase.empty() || phrase == "etc." || phrase == "etc") continue;
      hints.emplace(phrase, *entity);
    }
  }
  return hints;
}

}  // namespace

std::string MockAnnotate(const MockConfig &config, std::string_view query,
                         std::string_view persona_id, std::string_view prompt_text) {
  const EntityRegistry &registry = *config.registry;
  std::vector<std::pair<EntityId, Confidence>> labels;
  auto upsert = [&](EntityId e, Confidence c) {
    for (auto &[id, conf] : labels) {
      if (id == e) {
        conf = std::max(conf, c);
        return;
      }
    }
    labels.emplace_back(e, c);
  };

  const auto hints = prompt_text.empty()
                         ? std::unordered_map<std::string, EntityId>{}
                         : ParseExampleHints(registry, prompt_text);
  for (const PhraseMatch &m : config.gazetteer->Match(query)) {
    if (m.entities.size() == 1) {
      upsert(m.entities.front(), Confidence::kHigh);
      continue;
    }
    auto hint = hints.find(m.phrase);
    if (hint != hints.end() &&
        std::find(m.entities.begin(), m.entities.end(), hint->second) != m.entities.end()) {
      upsert(hint->second, Confidence::kHigh);
    } else {
      for (EntityId e : m.entities) upsert(e, Confidence::kLow);
    }
  }

  for (const PersonaBias &bias : config.persona_bias) {
    if (bias.persona_id != persona_id) continue;
    if (bias.action == BiasAction::kAdd) {
      upsert(bias.entity, Confidence::kLow);
    } else {
      std::erase_if(labels, [&](const auto &l) { return l.first == bias.entity; });
    }
  }

  std::string key = NormalizeText(query);
  key.push_back('\x1f');
  key.append(persona_id);
  Rng rng(Hash64(key, config.seed));
  if (!labels.empty() && rng.Bernoulli(config.noise_rate)) {
    auto &[entity, conf] = labels[rng.Below(labels.size())];
    int others[2];
    int n = 0;
    for (int v = 1; v <= 3; ++v) {
      if (v != ConfidenceValue(conf)) others[n++] = v;
    }
    conf = static_cast<Confidence>(others[rng.Below(2)]);
  }

  if (labels.empty()) return std::string(kNoneLabel);
  std::string out;
  for (const auto &[entity, conf] : labels) {
    if (!out.empty()) out.push_back('\n');
    out += registry.name(entity) + "|" + std::string(ConfidenceName(conf));
  }
  return out;
}

}  // namespace qintent
