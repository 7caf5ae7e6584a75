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
#include "qintent/ablation.h"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <numeric>
#include <ostream>

#include "qintent/digest.h"
#include "qintent/error.h"
#include "qintent/features.h"
#include "qintent/text.h"

namespace qintent {

AnnotationRun AnnotateQueries(Annotator &annotator, const PromptConfig &prompt,
                              const EntityRegistry &registry,
                              const std::vector<QueryRecord> &queries,
                              const Persona *persona, const PromptTemplate &tmpl) {
  AnnotationRun run;
  if (queries.empty()) return run;
  std::vector<PromptText> prompts;
  prompts.reserve(queries.size());
  for (const auto &q : queries) prompts.push_back(BuildPrompt(prompt, registry, q.text, persona, tmpl));
  std::vector<AnnotationResult> results = annotator.AnnotateBatch(prompts);
  for (size_t i = 0; i < queries.size(); ++i) {
    Annotation &a = run.annotations[queries[i].id];
    const auto *raw = std::get_if<std::string>(&results[i]);
    if (raw == nullptr) {
      ++run.failures;
      continue;
    }
    try {
      a = ParseResponse(registry, *raw).annotation;
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::kUnparseableResponse) throw;
      ++run.unparseable;
    }
  }
  return run;
}

AnnotationStore LexicalAnnotate(const Gazetteer &gazetteer,
                                const std::vector<QueryRecord> &queries) {
  AnnotationStore out;
  for (const auto &q : queries) out[q.id] = gazetteer.LexicalMatch(q.text);
  return out;
}

FrequencyMap Frequencies(const std::vector<QueryRecord> &queries) {
  FrequencyMap f;
  for (const auto &q : queries) f[q.id] = q.frequency;
  return f;
}

VariantGridResult RunPromptVariantGrid(const MockConfig &mock, const Gazetteer &lexical,
                                       const SyntheticCorpus &corpus,
                                       const BatchOptions &options) {
  if (!mock.registry) throw Error(ErrorKind::kConfig, "mock annotator needs a registry");
  const EntityRegistry &registry = *mock.registry;
  const FrequencyMap freq = Frequencies(corpus.queries);
  VariantGridResult grid;
  grid.lexical = ComputeMetrics(corpus.gold, LexicalAnnotate(lexical, corpus.queries),
                                registry, freq);
  grid.lexical.reference = "gold";
  grid.lexical.candidate = "lexical";
  Annotator annotator(AnnotatorHandle{mock}, options);
  for (PromptVariant v : kAllPromptVariants) {
    PromptConfig prompt;
    prompt.variant = v;
    prompt.registry_hash = registry.hash();
    AnnotationRun run = AnnotateQueries(annotator, prompt, registry, corpus.queries);
    VariantRow row;
    row.variant = v;
    row.report = ComputeMetrics(corpus.gold, run.annotations, registry, freq);
    row.report.reference = "gold";
    row.report.candidate = std::string(PromptVariantName(v));
    row.gain = RelativeGain(row.report, grid.lexical);
    grid.rows.push_back(std::move(row));
  }
  return grid;
}

RouterStudyResult RunRouterStudy(const EntityRegistry &registry,
                                 const SyntheticCorpus &corpus,
                                 const std::vector<PanelPersona> &panel,
                                 const RouterStudyConfig &config) {
  const size_t num_p = panel.size();
  if (num_p == 0) throw Error(ErrorKind::kEmpty, "persona panel is empty");
  if (config.k < 1 || config.k > num_p) throw Error(ErrorKind::kOutOfRange, "k outside [1, P]");
  const size_t n = corpus.queries.size();
  const size_t n_train = static_cast<size_t>(config.train_fraction * static_cast<double>(n));
  if (n_train == 0 || n_train >= n) {
    throw Error(ErrorKind::kTooSmall, "router study needs both train and held-out queries");
  }

  const EncoderBackend encoder = EncoderBackend::HashedNgram(config.embed_dim);
  std::vector<RouterExample> examples;
  examples.reserve(n);
  for (const auto &q : corpus.queries) {
    const Annotation &gold = corpus.gold.at(q.id);
    examples.push_back({EmbedQuery(encoder, q.text),
                        SimulatePanelMatrix(panel, q, gold, registry, config.panel_seed),
                        LabelIndicator(gold, registry.size(), Confidence::kLow)});
  }
  std::vector<RouterExample> train(examples.begin(), examples.begin() + static_cast<long>(n_train));
  RouterStudyResult result;
  result.model = TrainRouter(train, config.train, encoder.descriptor()).model;
  result.persona_ids = result.model.persona_ids;
  result.mean_relevance.assign(num_p, 0.0);

  AnnotationStore gold_held, routed, everyone;
  std::vector<AnnotationStore> random(config.random_trials);
  std::vector<size_t> all_rows(num_p);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  for (size_t i = n_train; i < n; ++i) {
    const std::string &id = corpus.queries[i].id;
    const ConfidenceMatrix &matrix = examples[i].matrix;
    gold_held[id] = corpus.gold.at(id);
    const std::vector<double> rel = RouterForward(result.model, examples[i].embedding);
    for (size_t p = 0; p < num_p; ++p) result.mean_relevance[p] += rel[p];
    const std::vector<size_t> top = TopKIndices(rel, result.persona_ids, config.k);
    routed[id] = AggregateEnsemble(SelectRows(matrix, top), std::nullopt,
                                   config.aggregation_threshold);
    everyone[id] = AggregateEnsemble(matrix, std::nullopt, config.aggregation_threshold);
    for (int t = 0; t < config.random_trials; ++t) {
      Rng rng(Hash64(id, config.train.seed + 0x7a11 + static_cast<uint64_t>(t)));
      std::vector<size_t> rows = all_rows;
      rng.Shuffle(rows);
      rows.resize(config.k);
      random[t][id] = AggregateEnsemble(SelectRows(matrix, rows), std::nullopt,
                                        config.aggregation_threshold);
    }
  }
  for (double &r : result.mean_relevance) r /= static_cast<double>(n - n_train);
  const FrequencyMap freq = Frequencies(corpus.queries);
  result.router = ComputeMetrics(gold_held, routed, registry, freq);
  result.router.candidate = "router-" + std::to_string(config.k);
  result.all = ComputeMetrics(gold_held, everyone, registry, freq);
  result.all.candidate = "all";
  for (auto &store : random) {
    result.random.push_back(ComputeMetrics(gold_held, store, registry, freq));
    result.random.back().candidate = "random-" + std::to_string(config.k);
    result.random_micro_f1 += result.random.back().unweighted.micro.f1;
  }
  if (!result.random.empty()) result.random_micro_f1 /= static_cast<double>(result.random.size());
  return result;
}

namespace {

std::string Pct(const std::optional<double> &v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.2f%%", *v);
  return buf;
}

std::string F4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

void WriteVariantGrid(std::ostream &out, const VariantGridResult &grid) {
  out << "variant               F1      wF1     gain(F1)    gain(wF1)\n";
  auto line = [&](const std::string &name, const EvalReport &r, const GainReport *g) {
    out << name << std::string(name.size() < 20 ? 20 - name.size() : 1, ' ') << "  "
        << F4(r.unweighted.micro.f1) << "  " << F4(r.weighted.micro.f1);
    if (g) out << "  " << Pct(g->unweighted.micro.f1) << "  " << Pct(g->weighted.micro.f1);
    out << '\n';
  };
  line("lexical", grid.lexical, nullptr);
  for (const auto &row : grid.rows) {
    line(std::string(PromptVariantName(row.variant)), row.report, &row.gain);
  }
}

void WriteRouterStudy(std::ostream &out, const RouterStudyResult &study) {
  out << "mean held-out relevance:";
  for (size_t p = 0; p < study.persona_ids.size(); ++p) {
    out << ' ' << study.persona_ids[p] << '=' << F4(study.mean_relevance[p]);
  }
  out << '\n';
  out << "router   micro F1 " << F4(study.router.unweighted.micro.f1) << "  weighted "
      << F4(study.router.weighted.micro.f1) << '\n';
  out << "random   micro F1 " << F4(study.random_micro_f1) << "  (mean of "
      << study.random.size() << " trials)\n";
  out << "all      micro F1 " << F4(study.all.unweighted.micro.f1) << "  weighted "
      << F4(study.all.weighted.micro.f1) << '\n';
}

}  // namespace qintent
