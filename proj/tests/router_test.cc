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
#include "qintent/router.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "grad_check.h"
#include "qintent/text.h"
#include "test_util.h"

namespace qintent {
namespace {

using testing::ErrorKindOf;
using testing::TempDir;

QueryEmbedding Embedding(std::vector<double> v) { return {std::move(v), "test"}; }

// Model whose logits equal b2 for every input.
RouterModel ConstantModel(std::vector<double> logits) {
  std::vector<std::string> ids;
  for (size_t i = 0; i < logits.size(); ++i) ids.push_back("p" + std::to_string(i));
  RouterModel m = MakeRouterModel(4, 3, ids, "h", 0.0);
  m.b2 = std::move(logits);
  return m;
}

ConfidenceMatrix Matrix(std::vector<std::vector<int>> values) {
  std::vector<std::string> ids;
  for (size_t i = 0; i < values.size(); ++i) ids.push_back("p" + std::to_string(i));
  ConfidenceMatrix m("q", ids, "h", values[0].size());
  for (size_t p = 0; p < values.size(); ++p) {
    for (size_t e = 0; e < values[p].size(); ++e) m.set(p, e, values[p][e]);
  }
  return m;
}

TEST(EmbedQueryTest, DeterministicAndNormalized) {
  const EncoderBackend enc = EncoderBackend::HashedNgram(128);
  const QueryEmbedding a = EmbedQuery(enc, "tom hanks movies");
  EXPECT_EQ(a.vector, EmbedQuery(enc, "tom hanks movies").vector);
  const double norm = std::sqrt(std::inner_product(a.vector.begin(), a.vector.end(),
                                                   a.vector.begin(), 0.0));
  EXPECT_NEAR(norm, 1.0, 1e-6);
}

TEST(EmbedQueryTest, PrecomputedMissingQuery) {
  TempDir dir;
  const auto path = dir.path() / "vectors.jsonl";
  std::ofstream(path) << "{\"text\":\"comedy movies\",\"vector\":[0.6,0.8]}\n";
  const EncoderBackend enc = EncoderBackend::Precomputed(path);
  EXPECT_EQ(EmbedQuery(enc, "Comedy Movies").vector, (std::vector<double>{0.6, 0.8}));
  EXPECT_EQ(ErrorKindOf([&] { EmbedQuery(enc, "drama"); }), ErrorKind::kMissingEmbedding);
}

TEST(RouterForwardTest, ZeroModelIsUniform) {
  const RouterModel m = MakeRouterModel(4, 3, {"a", "b", "c", "d"}, "h", 0.1);
  for (double r : RouterForward(m, Embedding({0.3, -1.0, 2.0, 0.5}))) EXPECT_DOUBLE_EQ(r, 0.25);
}

TEST(RouterForwardTest, HandEvaluatedSoftmax) {
  const auto r = RouterForward(ConstantModel({std::log(3.0), 0.0}), Embedding({1, 2, 3, 4}));
  EXPECT_NEAR(r[0], 0.75, 1e-12);
  EXPECT_NEAR(r[1], 0.25, 1e-12);
}

TEST(RouterForwardTest, SimplexAndInferenceDeterminism) {
  Rng rng(8);
  RouterModel m = MakeRouterModel(6, 5, {"a", "b", "c"}, "h", 0.5);
  for (auto *t : {&m.w1, &m.b1, &m.w2, &m.b2}) {
    for (double &x : *t) x = rng.Uniform(-2.0, 2.0);
  }
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(6);
    for (double &x : v) x = rng.Uniform(-1.0, 1.0);
    const auto r = RouterForward(m, Embedding(v), false, 1);
    EXPECT_EQ(r, RouterForward(m, Embedding(v), false, 999));
    EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0), 1.0, 1e-12);
    for (double x : r) {
      EXPECT_GT(x, 0.0);
      EXPECT_LT(x, 1.0);
    }
    const auto t = RouterForward(m, Embedding(v), true, trial);
    EXPECT_NEAR(std::accumulate(t.begin(), t.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(RouterForwardTest, DimensionMismatch) {
  const RouterModel m = MakeRouterModel(4, 3, {"a"}, "h", 0.0);
  EXPECT_EQ(ErrorKindOf([&] { RouterForward(m, Embedding({1.0})); }), ErrorKind::kShapeMismatch);
}

TEST(PredictEntitiesTest, HandArithmetic) {
  const std::vector<double> rel = {0.5, 0.5};
  const auto s = PredictEntities(rel, Matrix({{3, 0}, {1, 2}}));
  EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[1], 1.0 / 3.0, 1e-15);
}

TEST(PredictEntitiesTest, OneHotSelectsRowAndZeroMatrix) {
  const ConfidenceMatrix m = Matrix({{3, 0, 1}, {1, 2, 3}});
  const std::vector<double> one_hot = {0.0, 1.0};
  const auto s = PredictEntities(one_hot, m);
  for (size_t e = 0; e < 3; ++e) EXPECT_DOUBLE_EQ(s[e], m.at(1, e) / 3.0);
  const std::vector<double> rel = {0.3, 0.7};
  for (double x : PredictEntities(rel, Matrix({{0, 0, 0}, {0, 0, 0}}))) EXPECT_EQ(x, 0.0);
  const std::vector<double> bad = {1.0};
  EXPECT_EQ(ErrorKindOf([&] { PredictEntities(bad, m); }), ErrorKind::kShapeMismatch);
}

TEST(SelectTopKTest, OrderingAndTies) {
  const std::vector<std::string> ids = {"p0", "p1", "p2"};
  const std::vector<double> rel = {0.2, 0.5, 0.3};
  EXPECT_EQ(TopKIndices(rel, ids, 2), (std::vector<size_t>{1, 2}));
  EXPECT_EQ(TopKIndices(rel, ids, 3), (std::vector<size_t>{1, 2, 0}));
  const std::vector<std::string> tie_ids = {"zeta", "alpha"};
  const std::vector<double> tie = {0.5, 0.5};
  EXPECT_EQ(TopKIndices(tie, tie_ids, 1), (std::vector<size_t>{1}));
  EXPECT_EQ(ErrorKindOf([&] { TopKIndices(rel, ids, 0); }), ErrorKind::kOutOfRange);
  EXPECT_EQ(ErrorKindOf([&] { TopKIndices(rel, ids, 4); }), ErrorKind::kOutOfRange);
}

TEST(SelectTopKTest, InvariantUnderMonotoneLogitTransform) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(5);
    for (double &x : logits) x = rng.Uniform(-3.0, 3.0);
    std::vector<double> transformed = logits;
    for (double &x : transformed) x = 2.0 * x + std::tanh(x) + 0.7;
    const QueryEmbedding e = Embedding({0, 0, 0, 0});
    for (size_t k = 1; k <= 5; ++k) {
      EXPECT_EQ(SelectTopK(ConstantModel(logits), e, k),
                SelectTopK(ConstantModel(transformed), e, k));
    }
  }
}

TEST(RouterGradientTest, MatchesFiniteDifferences) {
  const auto result = testing::RouterGradientCheck();
  EXPECT_GT(result.checked, 30u);
  EXPECT_LE(result.max_relative_error, 1e-3) << result.worst;
}

TEST(TrainRouterTest, EmptyDatasetRejected) {
  EXPECT_EQ(ErrorKindOf([] { TrainRouter({}, RouterTrainConfig{}); }), ErrorKind::kEmpty);
}

TEST(TrainRouterTest, RepeatedExampleLossDecreases) {
  RouterExample ex;
  ex.embedding = EmbedQuery(EncoderBackend::HashedNgram(32), "comedy movies");
  ex.matrix = Matrix({{3, 0, 0}, {0, 3, 3}});
  ex.gold = {1, 0, 0};
  const std::vector<RouterExample> examples(16, ex);
  RouterTrainConfig config;
  config.dropout = 0.0;
  config.batch_size = 16;
  config.epochs = 30;
  config.seed = 3;
  const RouterTrainResult r = TrainRouter(examples, config);
  ASSERT_EQ(r.history.size(), 30u);
  EXPECT_LT(r.history.back().loss, r.history.front().loss);
}

TEST(TrainRouterTest, LearnsOraclePersona) {
  // Persona 0 copies gold; persona 1 answers at random.
  const EncoderBackend enc = EncoderBackend::HashedNgram(64);
  Rng rng(5);
  const std::vector<std::string> words = {"comedy", "drama", "football", "tom", "hanks",
                                          "christmas", "anime", "french", "live", "news"};
  auto make = [&](int n) {
    std::vector<RouterExample> out;
    for (int i = 0; i < n; ++i) {
      RouterExample ex;
      const std::string text = words[rng.Below(words.size())] + " " +
                               words[rng.Below(words.size())] + " " + std::to_string(i);
      ex.embedding = EmbedQuery(enc, text);
      ex.matrix = ConfidenceMatrix(text, {"oracle", "random"}, "h", 4);
      ex.gold.resize(4);
      for (size_t e = 0; e < 4; ++e) {
        ex.gold[e] = rng.Bernoulli(0.3) ? 1 : 0;
        ex.matrix.set(0, e, ex.gold[e] ? 3 : 0);
        ex.matrix.set(1, e, rng.Bernoulli(0.5) ? static_cast<int>(1 + rng.Below(3)) : 0);
      }
      out.push_back(std::move(ex));
    }
    return out;
  };
  const auto train = make(300);
  const auto held_out = make(100);
  RouterTrainConfig config;
  config.seed = 7;
  const RouterTrainResult r = TrainRouter(train, config);
  double oracle = 0.0, random = 0.0;
  for (const auto &ex : held_out) {
    const auto rel = RouterForward(r.model, ex.embedding);
    oracle += rel[0];
    random += rel[1];
  }
  EXPECT_GT(oracle, random);
}

TEST(TrainRouterTest, DeterministicAndSerializable) {
  RouterExample ex;
  ex.embedding = EmbedQuery(EncoderBackend::HashedNgram(16), "dune");
  ex.matrix = Matrix({{3, 0}, {0, 2}});
  ex.gold = {1, 0};
  const std::vector<RouterExample> examples(8, ex);
  RouterTrainConfig config;
  config.epochs = 3;
  config.seed = 4;
  const RouterModel a = TrainRouter(examples, config).model;
  const RouterModel b = TrainRouter(examples, config).model;
  std::ostringstream sa, sb;
  WriteRouterModel(sa, a);
  WriteRouterModel(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  std::istringstream in(sa.str());
  const RouterModel back = ReadRouterModel(in);
  EXPECT_EQ(back.w1, a.w1);
  EXPECT_EQ(back.b2, a.b2);
  EXPECT_EQ(back.persona_ids, a.persona_ids);
  EXPECT_EQ(back.registry_hash, a.registry_hash);
}

}  // namespace
}  // namespace qintent
