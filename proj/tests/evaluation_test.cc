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
#include "qintent/evaluation.h"

#include <gtest/gtest.h>

#include <sstream>

#include "oracles.h"
#include "test_util.h"

namespace qintent {
namespace {

using testing::ErrorKindOf;
using testing::MakeRegistry;

class EvalTest : public ::testing::Test {
 protected:
  Annotation Labels(std::initializer_list<int> entities) {
    Annotation a;
    for (int e : entities) a.Set(EntityId(e), Confidence::kHigh);
    return a;
  }

  EntityRegistry registry_ = MakeRegistry({"Genre", "Sport"});
};

TEST_F(EvalTest, HandCountedSingleQuery) {
  const AnnotationStore gold = {{"q", Labels({0})}};
  const AnnotationStore pred = {{"q", Labels({0, 1})}};
  const EvalReport r = ComputeMetrics(gold, pred, registry_, {{"q", 3}});
  for (bool w : {false, true}) {
    const Metrics &m = r.view(w).micro;
    EXPECT_DOUBLE_EQ(m.precision, 0.5);
    EXPECT_DOUBLE_EQ(m.recall, 1.0);
    EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-15);
  }
  EXPECT_EQ(r.weighted.micro.counts.tp, 3.0);
  EXPECT_EQ(r.unweighted.micro.counts.tp, 1.0);
}

TEST_F(EvalTest, FrequencyWeightedRecall) {
  const AnnotationStore gold = {{"q1", Labels({0})}, {"q2", Labels({1})}};
  const AnnotationStore pred = {{"q1", Labels({0})}, {"q2", Labels({})}};
  const EvalReport r = ComputeMetrics(gold, pred, registry_, {{"q1", 3}, {"q2", 1}});
  EXPECT_DOUBLE_EQ(r.weighted.micro.recall, 0.75);
  EXPECT_DOUBLE_EQ(r.unweighted.micro.recall, 0.5);
}

TEST_F(EvalTest, ConfidenceIgnoredForMembership) {
  Annotation low;
  low.Set(EntityId(0), Confidence::kLow);
  const EvalReport r =
      ComputeMetrics({{"q", Labels({0})}}, {{"q", low}}, registry_);
  EXPECT_EQ(r.unweighted.micro.f1, 1.0);
}

TEST_F(EvalTest, IdMismatchListsDifference) {
  const AnnotationStore gold = {{"a", {}}, {"b", {}}};
  const AnnotationStore pred = {{"b", {}}, {"c", {}}};
  try {
    ComputeMetrics(gold, pred, registry_);
    FAIL() << "expected id mismatch";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIdMismatch);
    const std::string what = e.what();
    EXPECT_NE(what.find("a"), std::string::npos);
    EXPECT_NE(what.find("c"), std::string::npos);
  }
}

TEST_F(EvalTest, GoldAgainstItselfIsPerfect) {
  Rng rng(3);
  AnnotationStore gold, pred;
  FrequencyMap freq;
  testing::RandomInstance(rng, 20, 2, 9, gold, pred, freq);
  const EvalReport r = ComputeMetrics(gold, gold, registry_, freq);
  for (bool w : {false, true}) {
    for (const Metrics &m : r.view(w).per_entity) {
      if (m.counts.tp + m.counts.fn == 0) continue;
      EXPECT_EQ(m.precision, 1.0);
      EXPECT_EQ(m.recall, 1.0);
      EXPECT_EQ(m.f1, 1.0);
    }
  }
}

TEST_F(EvalTest, ConstantFrequenciesMatchUnweighted) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    AnnotationStore gold, pred;
    FrequencyMap freq;
    testing::RandomInstance(rng, 10, 2, 1, gold, pred, freq);
    const uint64_t c = 1 + rng.Below(7);
    for (auto &[id, f] : freq) f = c;
    const EvalReport r = ComputeMetrics(gold, pred, registry_, freq);
    EXPECT_EQ(r.weighted.micro.precision, r.unweighted.micro.precision);
    EXPECT_EQ(r.weighted.micro.recall, r.unweighted.micro.recall);
    EXPECT_EQ(r.weighted.micro.f1, r.unweighted.micro.f1);
  }
}

TEST(EvalOracleTest, MatchesBruteForceOnSmallInstances) {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t n = 1 + rng.Below(6);
    const size_t e = 1 + rng.Below(4);
    std::vector<std::string> ids;
    for (size_t j = 0; j < e; ++j) ids.push_back("E" + std::to_string(j));
    const EntityRegistry registry = MakeRegistry(ids);
    AnnotationStore gold, pred;
    FrequencyMap freq;
    testing::RandomInstance(rng, n, e, 5, gold, pred, freq);
    const EvalReport r = ComputeMetrics(gold, pred, registry, freq);
    for (bool w : {false, true}) {
      const auto oracle = testing::BruteForceCounts(gold, pred, e, freq, w);
      const MetricsView &view = r.view(w);
      Counts sum;
      for (size_t j = 0; j < e; ++j) {
        const auto &c = view.per_entity[j].counts;
        EXPECT_EQ(c.tp, oracle.per_entity[j].tp);
        EXPECT_EQ(c.fp, oracle.per_entity[j].fp);
        EXPECT_EQ(c.fn, oracle.per_entity[j].fn);
        sum += c;
      }
      EXPECT_EQ(sum.tp, view.micro.counts.tp);
      EXPECT_EQ(sum.fp, view.micro.counts.fp);
      EXPECT_EQ(sum.fn, view.micro.counts.fn);
      const auto m = testing::RatiosOf(oracle.micro);
      EXPECT_NEAR(view.micro.precision, m.precision, 1e-12);
      EXPECT_NEAR(view.micro.recall, m.recall, 1e-12);
      EXPECT_NEAR(view.micro.f1, m.f1, 1e-12);
    }
  }
}

TEST(RelativeGainTest, ArithmeticAndGuards) {
  EXPECT_NEAR(*RelativeGain(0.59, 0.40), 47.5, 1e-9);
  EXPECT_EQ(*RelativeGain(0.4, 0.4), 0.0);
  EXPECT_FALSE(RelativeGain(0.3, 0.0).has_value());
}

TEST_F(EvalTest, GainReportIdentityAndUndefinedMarker) {
  const AnnotationStore gold = {{"q1", Labels({0})}, {"q2", Labels({1})}};
  const AnnotationStore pred = {{"q1", Labels({0})}, {"q2", Labels({})}};
  const EvalReport r = ComputeMetrics(gold, pred, registry_);
  const GainReport same = RelativeGain(r, r);
  EXPECT_EQ(*same.unweighted.micro.f1, 0.0);
  EXPECT_EQ(*same.weighted.per_entity[0].precision, 0.0);
  // Sport has zero baseline recall.
  EXPECT_FALSE(same.unweighted.per_entity[1].recall.has_value());
  std::ostringstream out;
  WriteGainJsonl(out, same);
  EXPECT_NE(out.str().find("undefined"), std::string::npos);
}

TEST_F(EvalTest, ReportWriters) {
  const AnnotationStore gold = {{"q", Labels({0})}};
  const EvalReport r = ComputeMetrics(gold, gold, registry_);
  std::ostringstream jsonl, table;
  WriteReportJsonl(jsonl, r);
  WriteReportTable(table, r);
  EXPECT_NE(jsonl.str().find("\"micro\""), std::string::npos);
  EXPECT_NE(table.str().find("Genre"), std::string::npos);
}

TEST_F(EvalTest, PerfectRankerAtMatchingRecall) {
  AnnotationStore gold, base_pred;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> probs;
  for (int i = 0; i < 10; ++i) {
    const std::string id = "q" + std::to_string(i);
    const bool positive = i < 4;
    gold[id] = positive ? Labels({0}) : Labels({});
    base_pred[id] = positive && i < 2 ? Labels({0}) : Labels({});
    ids.push_back(id);
    probs.push_back({positive ? 0.9 - 0.01 * i : 0.1 + 0.01 * i, 0.0});
  }
  const EvalReport baseline = ComputeMetrics(gold, base_pred, registry_);
  ASSERT_DOUBLE_EQ(baseline.unweighted.per_entity[0].recall, 0.5);
  const MatchedResult r =
      MatchedOperatingPoint(ids, probs, gold, baseline, MatchMode::kMatchRecall, registry_);
  EXPECT_EQ(r.headline(), 1.0);
}

TEST_F(EvalTest, UnreachablePrecisionIsFlagged) {
  const AnnotationStore gold = {{"a", Labels({0})}, {"b", Labels({})}};
  const EvalReport baseline = ComputeMetrics(gold, gold, registry_);
  // The negative outranks the positive, so precision 1.0 is out of reach.
  const MatchedResult r = MatchedOperatingPoint({"a", "b"}, {{0.4, 0.0}, {0.8, 0.0}}, gold,
                                                baseline, MatchMode::kMatchPrecision, registry_);
  EXPECT_FALSE(r.choices[0].attainable);
  EXPECT_NEAR(r.choices[0].precision, 0.5, 1e-12);
}

TEST_F(EvalTest, MatchedPointAgainstSweepOracle) {
  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    AnnotationStore gold, base_pred;
    FrequencyMap freq;
    testing::RandomInstance(rng, 30, 2, 1, gold, base_pred, freq);
    const EvalReport baseline = ComputeMetrics(gold, base_pred, registry_);
    std::vector<std::string> ids;
    std::vector<std::vector<double>> probs;
    // A handful of constant levels: heavy ties, as with a weak scorer.
    for (const auto &[id, a] : gold) {
      ids.push_back(id);
      probs.push_back({0.25 * static_cast<double>(rng.Below(5)),
                       0.25 * static_cast<double>(rng.Below(5))});
    }
    for (MatchMode mode : {MatchMode::kMatchRecall, MatchMode::kMatchPrecision}) {
      const MatchedResult got =
          MatchedOperatingPoint(ids, probs, gold, baseline, mode, registry_);
      AnnotationStore pred;
      for (size_t e = 0; e < 2; ++e) {
        std::vector<double> column;
        std::vector<uint8_t> labels;
        for (size_t i = 0; i < ids.size(); ++i) {
          column.push_back(probs[i][e]);
          labels.push_back(gold[ids[i]].Contains(EntityId(static_cast<int>(e))));
        }
        const Metrics &b = baseline.unweighted.per_entity[e];
        double target;
        if (mode == MatchMode::kMatchRecall) {
          target = b.recall;
        } else {
          target = b.counts.tp + b.counts.fp > 0 ? b.precision : 1.0;
        }
        const ThresholdChoice want = testing::OracleChoice(
            testing::ExhaustiveSweep(column, labels),
            mode == MatchMode::kMatchRecall ? TuneKind::kMatchRecall : TuneKind::kMatchPrecision,
            target);
        EXPECT_EQ(got.choices[e].threshold, want.threshold);
        for (size_t i = 0; i < ids.size(); ++i) {
          if (column[i] >= want.threshold) pred[ids[i]].Set(EntityId(static_cast<int>(e)), Confidence::kHigh);
          pred[ids[i]];
        }
      }
      const auto oracle = testing::RatiosOf(testing::BruteForceCounts(gold, pred, 2, {}, false).micro);
      const double expected = mode == MatchMode::kMatchRecall ? oracle.precision : oracle.recall;
      EXPECT_NEAR(got.headline(), expected, 1e-12);
    }
  }
}

TEST_F(EvalTest, MatchedPointRejectsEmptyInput) {
  const EvalReport baseline = ComputeMetrics({{"q", {}}}, {{"q", {}}}, registry_);
  EXPECT_EQ(ErrorKindOf([&] {
              MatchedOperatingPoint({}, {}, {}, baseline, MatchMode::kMatchRecall, registry_);
            }),
            ErrorKind::kEmpty);
}

}  // namespace
}  // namespace qintent
