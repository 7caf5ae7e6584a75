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
#ifndef QINTENT_ABLATION_H_
#define QINTENT_ABLATION_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qintent/baseline.h"
#include "qintent/evaluation.h"
#include "qintent/llm_client.h"
#include "qintent/prompting.h"
#include "qintent/router.h"
#include "qintent/synthetic.h"

namespace qintent {

// Parsed annotations of one annotator over a query set. Failed or
// unparseable responses become empty annotations and are counted.
struct AnnotationRun {
  AnnotationStore annotations;
  size_t failures = 0;
  size_t unparseable = 0;
};

AnnotationRun AnnotateQueries(Annotator &annotator, const PromptConfig &prompt,
                              const EntityRegistry &registry,
                              const std::vector<QueryRecord> &queries,
                              const Persona *persona = nullptr,
                              const PromptTemplate &tmpl = PromptTemplate());

AnnotationStore LexicalAnnotate(const Gazetteer &gazetteer,
                                const std::vector<QueryRecord> &queries);

FrequencyMap Frequencies(const std::vector<QueryRecord> &queries);

struct VariantRow {
  PromptVariant variant = PromptVariant::kBaseline;
  EvalReport report;
  GainReport gain;  // against the lexical baseline
};

struct VariantGridResult {
  EvalReport lexical;
  std::vector<VariantRow> rows;
};

// Annotates the corpus once per prompt variant with the given mock and
// scores each against gold and against lexical matching.
VariantGridResult RunPromptVariantGrid(const MockConfig &mock, const Gazetteer &lexical,
                                       const SyntheticCorpus &corpus,
                                       const BatchOptions &options = {});

struct RouterStudyConfig {
  size_t k = 1;
  int random_trials = 5;
  double aggregation_threshold = kDefaultAggregationThreshold;
  double train_fraction = 0.8;
  size_t embed_dim = 256;
  uint64_t panel_seed = 0;
  RouterTrainConfig train;
};

struct RouterStudyResult {
  std::vector<std::string> persona_ids;
  std::vector<double> mean_relevance;  // held-out queries
  EvalReport router;                   // top-k personas by relevance
  std::vector<EvalReport> random;      // k random personas, one per trial
  EvalReport all;                      // every persona
  double random_micro_f1 = 0.0;        // unweighted, averaged over trials
  RouterModel model;
};

// Trains the router on simulated panel matrices for the first part of the
// corpus and compares persona selection strategies on the rest.
RouterStudyResult RunRouterStudy(const EntityRegistry &registry,
                                 const SyntheticCorpus &corpus,
                                 const std::vector<PanelPersona> &panel,
                                 const RouterStudyConfig &config);

void WriteVariantGrid(std::ostream &out, const VariantGridResult &grid);
void WriteRouterStudy(std::ostream &out, const RouterStudyResult &study);

}  // namespace qintent

#endif  // QINTENT_ABLATION_H_
