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
#include "qintent/classifier.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "grad_check.h"
#include "oracles.h"
#include "qintent/ablation.h"
#include "qintent/optim.h"
#include "qintent/synthetic.h"
#include "test_util.h"

namespace qintent {
namespace {

using testing::ErrorKindOf;
using testing::MakeRegistry;
using testing::ShippedRegistry;

WeakLabelSet LabelsFor(const std::vector<std::pair<std::string, std::vector<uint8_t>>> &rows) {
  WeakLabelSet set;
  for (const auto &[text, y] : rows) set.items.push_back({QueryId(text), text, y});
  return set;
}

// Gazetteer-labelled synthetic corpus split into train and dev halves.
struct SeparableData {
  EntityRegistry registry = ShippedRegistry();
  WeakLabelSet train, dev;
};

SeparableData MakeSeparable(size_t n, uint64_t seed) {
  SeparableData d;
  SyntheticConfig sc;
  sc.num_queries = n;
  sc.seed = seed;
  sc.paraphrase_noise = 0.0;
  const SyntheticCorpus corpus = GenerateCorpus(d.registry, sc);
  const Gazetteer gaz = BankGazetteer(d.registry);
  const AnnotationStore labels = LexicalAnnotate(gaz, corpus.queries);
  const WeakLabelSet all =
      WeakLabelsFromAnnotations(labels, corpus.queries, d.registry, Confidence::kHigh, "lexical");
  for (size_t i = 0; i < all.items.size(); ++i) {
    (i % 5 == 0 ? d.dev : d.train).items.push_back(all.items[i]);
  }
  return d;
}

TEST(EncodeTest, DeterministicDistinctAndGuarded) {
  const EncoderBackend enc = EncoderBackend::HashedNgram(1024);
  EXPECT_EQ(enc.Encode("comedy movies"), enc.Encode("comedy movies"));
  EXPECT_NE(enc.Encode("a"), enc.Encode("b"));
  EXPECT_EQ(ErrorKindOf([&] { enc.Encode(""); }), ErrorKind::kPrecondition);
  EXPECT_EQ(enc.Encode("a").size(), 1024u);
}

TEST(WeakLabelsTest, FilterRule) {
  const EntityRegistry registry = MakeRegistry({"Genre", "Sport"});
  Annotation a;
  a.Set(EntityId(0), Confidence::kHigh);
  a.Set(EntityId(1), Confidence::kLow);
  EXPECT_EQ(LabelIndicator(a, 2, Confidence::kHigh), (std::vector<uint8_t>{1, 0}));
  EXPECT_EQ(LabelIndicator(a, 2, Confidence::kLow), (std::vector<uint8_t>{1, 1}));
  EXPECT_EQ(LabelIndicator(Annotation(), 2, Confidence::kLow), (std::vector<uint8_t>{0, 0}));
}

TEST(WeakLabelsTest, FileRoundTrip) {
  const EntityRegistry registry = MakeRegistry({"Genre", "Sport"});
  WeakLabelSet set = LabelsFor({{"comedy", {1, 0}}, {"football", {0, 1}}, {"weather", {0, 0}}});
  set.provenance = "mock";
  set.registry_hash = registry.hash();
  std::stringstream buf;
  WriteWeakLabels(buf, set, registry);
  const WeakLabelSet back = ReadWeakLabels(buf, registry);
  ASSERT_EQ(back.items.size(), 3u);
  EXPECT_EQ(back.items[1].labels, (std::vector<uint8_t>{0, 1}));
  EXPECT_EQ(back.provenance, "mock");
  EXPECT_EQ(back.filter, Confidence::kHigh);
}

TEST(LossTest, StableFormMatchesNaive) {
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  for (double z = -30.0; z <= 30.0; z += 0.37) {
    for (double y : {0.0, 1.0}) {
      const double s = 1.0 / (1.0 + std::exp(-z));
      const double naive = -(y * std::log(s) + (1.0 - y) * std::log(1.0 - s));
      if (!std::isfinite(naive)) continue;
      // The naive form's own rounding error grows like eps * e^|z|; the
      // 1e-9 tolerance applies wherever that error is below it.
      const double naive_error = 4.0 * kEps * std::exp(std::abs(z));
      EXPECT_NEAR(LogisticLoss(z, y), naive, std::max(1e-9, naive_error)) << z;
    }
  }
  EXPECT_TRUE(std::isfinite(LogisticLoss(1000.0, 0.0)));
  EXPECT_NEAR(LogisticLoss(1000.0, 0.0), 1000.0, 1e-9);
  EXPECT_NEAR(LogisticLoss(-1000.0, 1.0), 1000.0, 1e-9);
}

TEST(ClassifierGradientTest, MatchesFiniteDifferences) {
  const auto result = testing::ClassifierGradientCheck();
  EXPECT_GT(result.checked, 100u);
  EXPECT_LE(result.max_relative_error, 1e-3) << result.worst;
}

TEST(PredictTest, ZeroWeightsGiveHalf) {
  const EntityRegistry registry = MakeRegistry({"Genre", "Sport", "Holiday"});
  ClassifierModel m = InitClassifier(EncoderBackend::HashedNgram(32), registry, {});
  for (auto *t : {&m.u1, &m.c1, &m.u2, &m.c2}) std::fill(t->begin(), t->end(), 0.0);
  const EntityClassifier c(m, registry);
  for (double p : c.PredictProbs("anything")) EXPECT_EQ(p, 0.5);
}

TEST(PredictTest, RangeAndMonotoneInOutputBias) {
  const EntityRegistry registry = MakeRegistry({"Genre", "Sport", "Holiday"});
  ClassifierTrainConfig config;
  config.seed = 2;
  ClassifierModel m = InitClassifier(EncoderBackend::HashedNgram(32), registry, config);
  Rng rng(1);
  for (double &x : m.u2) x = rng.Uniform(-5.0, 5.0);
  for (const char *q : {"comedy", "live football", "christmas movies"}) {
    ClassifierModel cur = m;
    std::vector<double> last = EntityClassifier(cur, registry).PredictProbs(q);
    for (int step = 0; step < 40; ++step) {
      for (double &c2 : cur.c2) c2 += 0.5;
      const auto probs = EntityClassifier(cur, registry).PredictProbs(q);
      for (size_t e = 0; e < probs.size(); ++e) {
        EXPECT_GE(probs[e], 0.0);
        EXPECT_LE(probs[e], 1.0);
        EXPECT_GE(probs[e], last[e]);
      }
      last = probs;
    }
  }
}

TEST(PredictTest, RegistryMismatchRejected) {
  const EntityRegistry a = MakeRegistry({"Genre", "Sport"});
  const EntityRegistry b = MakeRegistry({"Sport", "Genre"});
  ClassifierModel m = InitClassifier(EncoderBackend::HashedNgram(8), a, {});
  EXPECT_EQ(ErrorKindOf([&] { EntityClassifier(m, b); }), ErrorKind::kRegistryMismatch);
}

TEST(TrainTest, ZeroLearningRateLeavesParametersUnchanged) {
  const EntityRegistry registry = MakeRegistry({"Genre", "Sport"});
  const WeakLabelSet train = LabelsFor({{"comedy", {1, 0}}, {"football", {0, 1}}});
  const EncoderBackend enc = EncoderBackend::HashedNgram(64);
  ClassifierTrainConfig config;
  config.learning_rate = 0.0;
  config.epochs = 1;
  config.seed = 9;
  const ClassifierModel init = InitClassifier(enc, registry, config);
  const ClassifierModel trained = TrainClassifier(train, train, enc, registry, config).model;
  EXPECT_EQ(trained.u1, init.u1);
  EXPECT_EQ(trained.c1, init.c1);
  EXPECT_EQ(trained.u2, init.u2);
  EXPECT_EQ(trained.c2, init.c2);
}

TEST(TrainTest, EmptyTrainRejected) {
  const EntityRegistry registry = MakeRegistry({"Genre"});
  EXPECT_EQ(ErrorKindOf([&] {
              TrainClassifier({}, {}, EncoderBackend::HashedNgram(8), registry, {});
            }),
            ErrorKind::kEmpty);
}

TEST(TrainTest, SeparableDataReachesHighDevF1) {
  const SeparableData d = MakeSeparable(2000, 4);
  ClassifierTrainConfig config;
  config.seed = 1;
  config.epochs = 30;
  config.learning_rate = 1e-2;
  const auto result = TrainClassifier(d.train, d.dev, EncoderBackend::HashedNgram(1024),
                                      d.registry, config);
  double best = 0.0;
  for (const auto &h : result.history) best = std::max(best, h.dev_micro_f1);
  EXPECT_GE(best, 0.95) << "best epoch " << result.best_epoch;
  EXPECT_LE(result.history.size(), 30u);
}

TEST(TrainTest, AllZeroColumnPredictsNoPositives) {
  const EntityRegistry registry = MakeRegistry({"Genre", "Sport", "Empty"});
  std::vector<std::pair<std::string, std::vector<uint8_t>>> rows;
  for (int i = 0; i < 40; ++i) {
    rows.push_back({"comedy film " + std::to_string(i), {1, 0, 0}});
    rows.push_back({"football match " + std::to_string(i), {0, 1, 0}});
  }
  const WeakLabelSet train = LabelsFor(rows);
  const EncoderBackend enc = EncoderBackend::HashedNgram(256);
  ClassifierTrainConfig config;
  config.epochs = 20;
  config.learning_rate = 1e-2;
  const EntityClassifier c(TrainClassifier(train, train, enc, registry, config).model, enc,
                           registry);
  for (const auto &item : train.items) EXPECT_LT(c.PredictProbs(item.text)[2], 0.5);
}

TEST(TrainTest, MemorizesSingleBatch) {
  const EntityRegistry registry = MakeRegistry({"Genre", "Sport", "Holiday", "Actor"});
  const WeakLabelSet train = LabelsFor({{"christmas comedy", {1, 0, 1, 0}},
                                        {"tom hanks football", {0, 1, 0, 1}}});
  const EncoderBackend enc = EncoderBackend::HashedNgram(128);
  ClassifierTrainConfig config;
  config.epochs = 200;
  config.patience = 200;
  config.learning_rate = 1e-2;
  const EntityClassifier c(TrainClassifier(train, train, enc, registry, config).model, enc,
                           registry);
  for (const auto &item : train.items) {
    const auto p = c.PredictProbs(item.text);
    double min_gold = 1.0, max_other = 0.0;
    for (size_t e = 0; e < p.size(); ++e) {
      if (item.labels[e]) {
        min_gold = std::min(min_gold, p[e]);
      } else {
        max_other = std::max(max_other, p[e]);
      }
    }
    EXPECT_GT(min_gold, max_other) << item.text;
  }
}

TEST(TrainTest, ByteIdenticalModelFiles) {
  const SeparableData d = MakeSeparable(200, 8);
  ClassifierTrainConfig config;
  config.seed = 5;
  config.epochs = 3;
  const EncoderBackend enc = EncoderBackend::HashedNgram(256);
  std::ostringstream a, b;
  WriteClassifierModel(a, TrainClassifier(d.train, d.dev, enc, d.registry, config).model);
  WriteClassifierModel(b, TrainClassifier(d.train, d.dev, enc, d.registry, config).model);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  std::ostringstream again;
  WriteClassifierModel(again, ReadClassifierModel(in));
  EXPECT_EQ(again.str(), a.str());
}

TEST(ApplyThresholdsTest, Rules) {
  const std::vector<double> half = {0.5, 0.5};
  const std::vector<double> probs = {0.7, 0.2};
  EXPECT_EQ(ApplyThresholds(half, probs), (std::vector<EntityId>{EntityId(0)}));
  const std::vector<double> high = {1.0 - 1e-9, 1.0 - 1e-9};
  EXPECT_TRUE(ApplyThresholds(high, probs).empty());
  const std::vector<double> exact = {0.7, 0.2};
  EXPECT_EQ(ApplyThresholds(exact, probs).size(), 2u);
}

TEST(TuneTest, SeparableColumnReachesPerfectF1) {
  const std::vector<double> probs = {0.9, 0.8, 0.75, 0.3, 0.2, 0.1};
  const std::vector<uint8_t> labels = {1, 1, 1, 0, 0, 0};
  const ThresholdChoice c = TuneColumn(probs, labels, {}, TuneKind::kMaxF1);
  EXPECT_EQ(c.f1, 1.0);
  EXPECT_EQ(c.threshold, 0.75);
}

TEST(TuneTest, FullRecallThresholdBelowEveryPositive) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> probs(20);
    std::vector<uint8_t> labels(20);
    double min_pos = 1.0;
    for (size_t i = 0; i < 20; ++i) {
      probs[i] = rng.Uniform();
      labels[i] = rng.Bernoulli(0.4);
      if (labels[i]) min_pos = std::min(min_pos, probs[i]);
    }
    const ThresholdChoice c = TuneColumn(probs, labels, {}, TuneKind::kMatchRecall, 1.0);
    EXPECT_TRUE(c.attainable);
    EXPECT_LE(c.threshold, min_pos);
  }
}

TEST(TuneTest, MaxF1MatchesMidpointGrid) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> probs(20);
    std::vector<uint8_t> labels(20);
    for (size_t i = 0; i < 20; ++i) {
      probs[i] = std::round(rng.Uniform() * 50.0) / 50.0;  // forces ties
      labels[i] = rng.Bernoulli(0.5);
    }
    // Grid of midpoints between sorted distinct values, plus both ends.
    std::set<double> distinct(probs.begin(), probs.end());
    std::vector<double> grid = {-0.5, 1.5};
    for (auto it = distinct.begin(); std::next(it) != distinct.end(); ++it) {
      grid.push_back((*it + *std::next(it)) / 2.0);
    }
    double best_f1 = 0.0;
    for (double t : grid) {
      int64_t tp = 0, fp = 0, pos = 0;
      for (size_t i = 0; i < 20; ++i) {
        pos += labels[i];
        if (probs[i] > t) (labels[i] ? tp : fp) += 1;
      }
      best_f1 = std::max(best_f1, testing::RatiosOf({tp, fp, pos - tp}).f1);
    }
    const ThresholdChoice c = TuneColumn(probs, labels, {}, TuneKind::kMaxF1);
    EXPECT_NEAR(c.f1, best_f1, 1e-12) << trial;
  }
}

TEST(TuneTest, MatchesExhaustiveSweepOracle) {
  Rng rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t n = 1 + rng.Below(50);
    std::vector<double> probs(n);
    std::vector<uint8_t> labels(n);
    for (size_t i = 0; i < n; ++i) {
      probs[i] = rng.Bernoulli(0.3) ? std::round(rng.Uniform() * 10.0) / 10.0 : rng.Uniform();
      labels[i] = rng.Bernoulli(0.4);
    }
    const auto sweep = testing::ExhaustiveSweep(probs, labels);
    for (TuneKind kind : {TuneKind::kMaxF1, TuneKind::kMatchRecall, TuneKind::kMatchPrecision}) {
      const double target = rng.Uniform(0.0, 1.05);
      const ThresholdChoice got = TuneColumn(probs, labels, {}, kind, target);
      const ThresholdChoice want = testing::OracleChoice(sweep, kind, target);
      EXPECT_EQ(got.threshold, want.threshold);
      EXPECT_EQ(got.attainable, want.attainable);
      EXPECT_EQ(got.f1, want.f1);
    }
  }
}

TEST(TuneTest, UnattainablePrecisionReportsClosestPoint) {
  const std::vector<double> probs = {0.9, 0.8, 0.7};
  const std::vector<uint8_t> labels = {0, 1, 1};
  const ThresholdChoice c = TuneColumn(probs, labels, {}, TuneKind::kMatchPrecision, 1.0);
  EXPECT_FALSE(c.attainable);
  EXPECT_NEAR(c.precision, 2.0 / 3.0, 1e-12);
}

TEST(TuneTest, EmptyDevRejected) {
  EXPECT_EQ(ErrorKindOf([] { TuneThresholds({}, {}, {}, TuneMode{}); }), ErrorKind::kEmpty);
}

TEST(ThresholdFileTest, RoundTripAndHashCheck) {
  const EntityRegistry registry = MakeRegistry({"Genre", "Sport"});
  ClassifierModel m = InitClassifier(EncoderBackend::HashedNgram(8), registry, {});
  m.thresholds = {0.25, 0.75};
  std::stringstream buf;
  WriteThresholds(buf, m);
  ClassifierModel other = m;
  other.thresholds = {0.5, 0.5};
  ReadThresholdsInto(buf, other);
  EXPECT_EQ(other.thresholds, m.thresholds);
}

}  // namespace
}  // namespace qintent
