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
#ifndef QINTENT_EVALUATION_H_
#define QINTENT_EVALUATION_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qintent/classifier.h"
#include "qintent/taxonomy.h"

namespace qintent {

// Confusion cells, fractional only through frequency weighting.
struct Counts {
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;

  Counts &operator+=(const Counts &o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct Metrics {
  Counts counts;
  double precision = 0.0;  // 0 when nothing was predicted
  double recall = 0.0;     // 0 when there is no gold support
  double f1 = 0.0;

  static Metrics FromCounts(const Counts &counts);
};

struct MetricsView {
  std::vector<Metrics> per_entity;  // registry order
  Metrics micro;
};

struct EvalReport {
  std::vector<std::string> entity_ids;
  MetricsView unweighted;
  MetricsView weighted;
  std::string reference;  // annotator tags
  std::string candidate;

  const MetricsView &view(bool use_weights) const {
    return use_weights ? weighted : unweighted;
  }
};

using FrequencyMap = std::map<std::string, uint64_t>;

// Label sets are compared per query; each query contributes its frequency
// to the weighted view (queries absent from frequencies count once).
// Confidence levels are ignored. Throws kIdMismatch listing ids present in
// only one store.
EvalReport ComputeMetrics(const AnnotationStore &gold, const AnnotationStore &pred,
                          const EntityRegistry &registry,
                          const FrequencyMap &frequencies = {});

// Percentage change per metric. nullopt marks an undefined gain (baseline 0).
struct MetricGain {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

struct GainView {
  std::vector<MetricGain> per_entity;
  MetricGain micro;
};

struct GainReport {
  std::vector<std::string> entity_ids;
  GainView unweighted;
  GainView weighted;
};

std::optional<double> RelativeGain(double candidate, double baseline);
GainReport RelativeGain(const EvalReport &candidate, const EvalReport &baseline);

enum class MatchMode { kMatchRecall, kMatchPrecision };

struct MatchedResult {
  MatchMode mode = MatchMode::kMatchPrecision;
  bool weighted = false;
  std::vector<double> targets;
  std::vector<ThresholdChoice> choices;  // per entity, with attainability
  EvalReport report;                     // of the thresholded predictions

  // Recall@MatchingPrecision or Precision@MatchingRecall, micro-averaged.
  double headline() const;
};

// Tunes each entity's threshold so the candidate matches the baseline's
// per-entity recall (reporting precision) or precision (reporting recall).
// An entity the baseline never predicted gets a precision target of 1.
// probs[i] holds registry-ordered probabilities for query_ids[i].
// Throws kEmpty for empty input and kIdMismatch when gold lacks a query.
MatchedResult MatchedOperatingPoint(const std::vector<std::string> &query_ids,
                                    const std::vector<std::vector<double>> &probs,
                                    const AnnotationStore &gold,
                                    const EvalReport &baseline, MatchMode mode,
                                    const EntityRegistry &registry,
                                    const FrequencyMap *frequencies = nullptr);

// Aligned text table, one row per entity plus a micro row.
void WriteReportTable(std::ostream &out, const EvalReport &report);
// One JSON object per entity plus a "micro" record.
void WriteReportJsonl(std::ostream &out, const EvalReport &report);
void WriteGainJsonl(std::ostream &out, const GainReport &gains);

}  // namespace qintent

#endif  // QINTENT_EVALUATION_H_
