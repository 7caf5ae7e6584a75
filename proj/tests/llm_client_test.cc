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

#include <gtest/gtest.h>
#include <stdlib.h>

#include <atomic>
#include <fstream>
#include <memory>
#include <thread>

// Must match the library's configuration of the header-only client.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "qintent/baseline.h"
#include "qintent/text.h"
#include "test_util.h"

namespace qintent {
namespace {

using testing::ErrorKindOf;
using testing::ShippedRegistry;
using testing::TempDir;

class MockTest : public ::testing::Test {
 protected:
  void SetUp() override {
    registry_ = std::make_shared<EntityRegistry>(ShippedRegistry());
    auto gazetteer = std::make_shared<Gazetteer>();
    gazetteer->Add(Id("Genre"), "comedy");
    gazetteer->Add(Id("Genre"), "horror");
    gazetteer->Add(Id("IntentMovie"), "movies");
    gazetteer->Add(Id("IntentTVShow"), "tv shows");
    gazetteer->Add(Id("CastAndCrew"), "tom hanks");
    gazetteer->Add(Id("Sport"), "football");
    gazetteer_ = gazetteer;
    config_.registry = registry_;
    config_.gazetteer = gazetteer_;
  }

  EntityId Id(const char *name) const { return *registry_->Find(name); }

  std::shared_ptr<EntityRegistry> registry_;
  std::shared_ptr<const Gazetteer> gazetteer_;
  MockConfig config_;
};

TEST_F(MockTest, GazetteerLookupOrder) {
  EXPECT_EQ(MockAnnotate(config_, "comedy movies"), "Genre|High\nIntentMovie|High");
}

TEST_F(MockTest, Deterministic) {
  config_.noise_rate = 0.5;
  for (const char *q : {"comedy movies", "tom hanks tv shows", "football"}) {
    EXPECT_EQ(MockAnnotate(config_, q), MockAnnotate(config_, q));
  }
}

TEST_F(MockTest, PersonaBiasAddsAtLow) {
  config_.persona_bias.push_back({"fan", Id("Sport"), BiasAction::kAdd});
  const std::string biased = MockAnnotate(config_, "comedy movies", "fan");
  EXPECT_NE(biased.find("Sport|Low"), std::string::npos) << biased;
  EXPECT_EQ(MockAnnotate(config_, "comedy movies", "other").find("Sport"), std::string::npos);
}

TEST_F(MockTest, PersonaBiasRemoves) {
  config_.persona_bias.push_back({"fan", Id("Genre"), BiasAction::kRemove});
  EXPECT_EQ(MockAnnotate(config_, "comedy movies", "fan"), "IntentMovie|High");
}

TEST_F(MockTest, NoMatchIsNone) { EXPECT_EQ(MockAnnotate(config_, "weather today"), "None"); }

TEST_F(MockTest, NoiselessMockEqualsLexicalLookup) {
  const std::vector<std::string> words = {"comedy", "movies", "tv",   "shows", "tom",
                                          "hanks",  "football", "horror", "the", "best"};
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    std::string q;
    const size_t n = 1 + rng.Below(5);
    for (size_t i = 0; i < n; ++i) q += (i ? " " : "") + words[rng.Below(words.size())];
    const Annotation parsed = ParseResponse(*registry_, MockAnnotate(config_, q)).annotation;
    EXPECT_EQ(parsed, gazetteer_->LexicalMatch(q)) << q;
  }
}

TEST_F(MockTest, BatchAlignedAndCached) {
  TempDir dir;
  BatchOptions options;
  options.cache_dir = dir.path();
  std::vector<PromptText> prompts;
  PromptConfig pc;
  for (const char *q : {"comedy movies", "football", "weather"}) {
    prompts.push_back(BuildPrompt(pc, *registry_, q));
  }
  {
    Annotator annotator(AnnotatorHandle{config_}, options);
    const auto results = annotator.AnnotateBatch(prompts);
    ASSERT_EQ(results.size(), 3u);
    for (size_t i = 0; i < 3; ++i) {
      ASSERT_TRUE(std::holds_alternative<std::string>(results[i]));
      EXPECT_EQ(std::get<std::string>(results[i]), MockAnnotate(config_, prompts[i].query));
    }
    EXPECT_EQ(annotator.request_count(), 3u);
    annotator.AnnotateBatch({prompts[0]});
    EXPECT_EQ(annotator.request_count(), 3u);
    EXPECT_EQ(annotator.cache_hits(), 1u);
  }
  Annotator rerun(AnnotatorHandle{config_}, options);
  rerun.AnnotateBatch(prompts);
  EXPECT_EQ(rerun.request_count(), 0u);
  EXPECT_EQ(rerun.cache_hits(), 3u);
}

TEST_F(MockTest, InvalidHandlesRejected) {
  MockConfig bad = config_;
  bad.noise_rate = 1.0;
  EXPECT_EQ(ErrorKindOf([&] { AnnotatorHandle{bad}.Validate(); }), ErrorKind::kConfig);
  HttpEndpointConfig http;
  http.url = "http://127.0.0.1:1/x";
  http.max_retries = -1;
  EXPECT_EQ(ErrorKindOf([&] { AnnotatorHandle{http}.Validate(); }), ErrorKind::kConfig);
  http.max_retries = 0;
  http.timeout = std::chrono::milliseconds(0);
  EXPECT_EQ(ErrorKindOf([&] { AnnotatorHandle{http}.Validate(); }), ErrorKind::kConfig);
}

// Scripted endpoint: prompts containing "fail" get 400; the first
// `transient_` requests get 500; everything else echoes "Genre|High".
class FakeEndpoint {
 public:
  explicit FakeEndpoint(int transient) : transient_(transient) {
    server_.Post("/annotate", [this](const httplib::Request &req, httplib::Response &res) {
      ++hits_;
      last_auth_ = req.get_header_value("Authorization");
      if (req.body.find("fail") != std::string::npos) {
        res.status = 400;
        return;
      }
      if (transient_-- > 0) {
        res.status = 500;
        return;
      }
      res.status = 200;
      res.set_content("Genre|High", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/annotate"; }
  int hits() const { return hits_.load(); }
  std::string last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  std::atomic<int> transient_;
  std::atomic<int> hits_{0};
  std::string last_auth_;
  int port_ = 0;
  std::thread thread_;
};

HttpEndpointConfig HttpConfig(const FakeEndpoint &server, int max_retries) {
  HttpEndpointConfig http;
  http.url = server.url();
  http.model = "fake";
  http.max_retries = max_retries;
  http.timeout = std::chrono::milliseconds(5000);
  http.backoff_base = std::chrono::milliseconds(1);
  return http;
}

BatchOptions FastOptions() {
  BatchOptions options;
  options.requests_per_second = 0.0;
  options.max_in_flight = 1;
  return options;
}

PromptText RawPrompt(const std::string &text) {
  PromptText p;
  p.text = text;
  p.query = text;
  return p;
}

TEST(HttpAnnotatorTest, RetriesTransientFailures) {
  FakeEndpoint server(2);
  Annotator annotator(AnnotatorHandle{HttpConfig(server, 3)}, FastOptions());
  const auto results = annotator.AnnotateBatch({RawPrompt("comedy movies")});
  ASSERT_TRUE(std::holds_alternative<std::string>(results[0]));
  EXPECT_EQ(std::get<std::string>(results[0]), "Genre|High");
  EXPECT_EQ(server.hits(), 3);
  EXPECT_EQ(annotator.request_count(), 3u);
}

TEST(HttpAnnotatorTest, ExhaustedRetriesBecomeFailureRecord) {
  FakeEndpoint server(10);
  Annotator annotator(AnnotatorHandle{HttpConfig(server, 1)}, FastOptions());
  const auto results = annotator.AnnotateBatch({RawPrompt("q")});
  const auto *failure = std::get_if<AnnotationFailure>(&results[0]);
  ASSERT_NE(failure, nullptr);
  EXPECT_EQ(failure->attempts, 2);
  EXPECT_EQ(failure->status, 500);
}

TEST(HttpAnnotatorTest, PermanentFailuresKeepOrder) {
  FakeEndpoint server(0);
  Annotator annotator(AnnotatorHandle{HttpConfig(server, 3)}, FastOptions());
  const auto results =
      annotator.AnnotateBatch({RawPrompt("a"), RawPrompt("fail me"), RawPrompt("b")});
  ASSERT_EQ(results.size(), 3u);
  EXPECT_TRUE(std::holds_alternative<std::string>(results[0]));
  const auto *failure = std::get_if<AnnotationFailure>(&results[1]);
  ASSERT_NE(failure, nullptr);
  EXPECT_EQ(failure->status, 400);
  EXPECT_EQ(failure->attempts, 1);
  EXPECT_TRUE(std::holds_alternative<std::string>(results[2]));
}

TEST(HttpAnnotatorTest, BearerTokenFromEnvironment) {
  FakeEndpoint server(0);
  ::setenv("QINTENT_TEST_TOKEN", "s3cret", 1);
  HttpEndpointConfig http = HttpConfig(server, 0);
  http.auth_env = "QINTENT_TEST_TOKEN";
  Annotator annotator(AnnotatorHandle{http}, FastOptions());
  annotator.AnnotateBatch({RawPrompt("x")});
  EXPECT_EQ(server.last_auth(), "Bearer s3cret");
}

TEST(HttpAnnotatorTest, MissingAuthEnvFailsBeforeAnyRequest) {
  FakeEndpoint server(0);
  ::unsetenv("QINTENT_TEST_MISSING_TOKEN");
  HttpEndpointConfig http = HttpConfig(server, 0);
  http.auth_env = "QINTENT_TEST_MISSING_TOKEN";
  Annotator annotator(AnnotatorHandle{http}, FastOptions());
  EXPECT_EQ(ErrorKindOf([&] { annotator.AnnotateBatch({RawPrompt("x")}); }),
            ErrorKind::kConfig);
  EXPECT_EQ(server.hits(), 0);
}

TEST(ResponseCacheTest, KeyDependsOnPromptAndModel) {
  EXPECT_EQ(ResponseCache::Key("p", "m"), ResponseCache::Key("p", "m"));
  EXPECT_NE(ResponseCache::Key("p", "m"), ResponseCache::Key("p", "n"));
  EXPECT_NE(ResponseCache::Key("pm", ""), ResponseCache::Key("p", "m"));
}

}  // namespace
}  // namespace qintent
