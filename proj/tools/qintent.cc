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
// Command-line front end: one subcommand per pipeline stage, plus "run"
// for the whole pipeline and "serve" for online inference.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qintent/ablation.h"
#include "qintent/baseline.h"
#include "qintent/classifier.h"
#include "qintent/data.h"
#include "qintent/error.h"
#include "qintent/evaluation.h"
#include "qintent/llm_client.h"
#include "qintent/personas.h"
#include "qintent/pipeline.h"
#include "qintent/prompting.h"
#include "qintent/router.h"
#include "qintent/serve.h"
#include "qintent/synthetic.h"
#include "qintent/taxonomy.h"
#include "qintent/text.h"

namespace {

using namespace qintent;
using json = nlohmann::json;
namespace fs = std::filesystem;

std::atomic<bool> g_stop{false};

std::ofstream OpenOut(const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  return out;
}

std::ifstream OpenIn(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  return in;
}

// Writes to a file, or to stdout when path is empty or "-".
template <typename F>
void Emit(const std::string &path, F &&body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out = OpenOut(path);
  body(out);
}

std::vector<double> ParseDoubles(const std::string &csv) {
  std::vector<double> out;
  for (const auto &part : Split(csv, ',')) {
    if (!Trim(part).empty()) out.push_back(std::stod(std::string(Trim(part))));
  }
  return out;
}

// Persona annotation lines: {"id": ..., "persona": ..., "labels": {...}}.
std::map<std::string, std::map<std::string, Annotation>> ReadPersonaAnnotations(
    const std::string &path, const EntityRegistry &registry) {
  std::map<std::string, std::map<std::string, Annotation>> out;
  std::ifstream in = OpenIn(path);
  for (std::string line; std::getline(in, line);) {
    if (Trim(line).empty()) continue;
    json j = json::parse(line);
    Annotation a;
    for (const auto &[name, level] : j.at("labels").items()) {
      EntityId e = registry.ValidateLabel(name);
      auto c = ParseConfidence(level.get<std::string>());
      if (!c) throw Error(ErrorKind::kParse, "bad confidence in " + path);
      if (!e.is_none()) a.Set(e, *c);
    }
    out[j.at("id").get<std::string>()][j.at("persona").get<std::string>()] = a;
  }
  return out;
}

std::vector<ConfidenceMatrix> LoadMatrices(const std::string &path,
                                           const EntityRegistry &registry) {
  std::ifstream in = OpenIn(path);
  return ReadConfidenceMatrices(in, registry);
}

WeakLabelSet LoadWeak(const std::string &path, const EntityRegistry &registry) {
  std::ifstream in = OpenIn(path);
  return ReadWeakLabels(in, registry);
}

struct AnnotatorFlags {
  std::string gazetteer;
  std::string url;
  std::string auth_env;
  std::string model;
  double noise_rate = 0.0;
  uint64_t seed = 0;
  int max_retries = 3;
  int timeout_ms = 30000;
  int max_in_flight = 4;
  double rps = 2.0;
  std::string cache_dir;

  void Register(CLI::App *cmd) {
    cmd->add_option("--gazetteer", gazetteer, "Mock annotator gazetteer (JSON Lines)");
    cmd->add_option("--url", url, "HTTP annotator endpoint");
    cmd->add_option("--auth-env", auth_env, "Env var holding the bearer token");
    cmd->add_option("--model", model, "Model name sent to the endpoint");
    cmd->add_option("--noise-rate", noise_rate, "Mock confidence noise rate");
    cmd->add_option("--seed", seed, "Mock seed");
    cmd->add_option("--max-retries", max_retries);
    cmd->add_option("--timeout-ms", timeout_ms);
    cmd->add_option("--max-in-flight", max_in_flight);
    cmd->add_option("--rps", rps, "Requests per second (<= 0 disables limiting)");
    cmd->add_option("--cache-dir", cache_dir, "Response cache directory");
  }

  std::unique_ptr<Annotator> Make(std::shared_ptr<const EntityRegistry> registry) const {
    AnnotatorHandle handle;
    if (!url.empty()) {
      HttpEndpointConfig http;
      http.url = url;
      http.auth_env = auth_env;
      http.model = model;
      http.max_retries = max_retries;
      http.timeout = std::chrono::milliseconds(timeout_ms);
      handle.config = http;
    } else {
      if (gazetteer.empty()) throw Error(ErrorKind::kConfig, "need --gazetteer or --url");
      MockConfig mock;
      mock.seed = seed;
      mock.registry = registry;
      mock.gazetteer = std::make_shared<const Gazetteer>(LoadGazetteer(gazetteer, *registry));
      mock.noise_rate = noise_rate;
      handle.config = mock;
    }
    BatchOptions opts;
    opts.max_in_flight = max_in_flight;
    opts.requests_per_second = rps;
    opts.cache_dir = cache_dir;
    return std::make_unique<Annotator>(handle, opts);
  }
};

int Main(int argc, char **argv) {
  CLI::App app{"qintent: weak supervision for search query entity classification"};
  app.require_subcommand(1);
  std::string registry_path;
  auto add_registry = [&](CLI::App *cmd) {
    cmd->add_option("--registry", registry_path, "Entity registry (JSON Lines)")->required();
  };
  auto registry = [&] {
    return std::make_shared<const EntityRegistry>(LoadRegistry(registry_path));
  };

  // taxonomy
  auto *taxonomy = app.add_subcommand("taxonomy", "Show the registry and validate labels");
  add_registry(taxonomy);
  std::vector<std::string> check_labels;
  taxonomy->add_option("--check", check_labels, "Labels to validate");
  taxonomy->callback([&] {
    auto reg = registry();
    std::cout << "registry_hash " << reg->hash() << "\n";
    for (const auto &e : reg->entities()) std::cout << e.id << "\t" << e.definition << "\n";
    for (const auto &label : check_labels) {
      EntityId id = reg->ValidateLabel(label);
      std::cout << label << " -> " << (id.is_none() ? "None" : reg->name(id)) << "\n";
    }
  });

  // ingest
  auto *ingest = app.add_subcommand("ingest", "Normalize and deduplicate a query log");
  std::string ingest_in, ingest_out;
  ingest->add_option("--input", ingest_in, "TSV (text<TAB>frequency) or JSON Lines")->required();
  ingest->add_option("--output", ingest_out, "Query JSON Lines output");
  ingest->callback([&] {
    auto records = IngestQueryFile(ingest_in);
    Emit(ingest_out, [&](std::ostream &o) { WriteQueryJsonl(o, records); });
    std::cerr << records.size() << " queries\n";
  });

  // split
  auto *split = app.add_subcommand("split", "Seeded train/dev/test split");
  std::string split_queries, split_out, split_ratios = "0.7,0.1,0.2";
  uint64_t split_seed = 0;
  split->add_option("--queries", split_queries)->required();
  split->add_option("--ratios", split_ratios, "train,dev,test");
  split->add_option("--seed", split_seed);
  split->add_option("--output", split_out);
  split->callback([&] {
    auto r = ParseDoubles(split_ratios);
    if (r.size() != 3) throw Error(ErrorKind::kConfig, "--ratios needs three values");
    auto parts = SplitDataset(IngestQueryFile(split_queries), {r[0], r[1], r[2]}, split_seed);
    Emit(split_out, [&](std::ostream &o) { WriteSplitManifest(o, parts); });
  });

  // annotate
  auto *annotate = app.add_subcommand("annotate", "Annotate queries with an LLM or the mock");
  add_registry(annotate);
  AnnotatorFlags ann_flags;
  ann_flags.Register(annotate);
  std::string ann_queries, ann_out, ann_variant = "ConfidenceCotIcl", ann_personas,
                                    ann_persona, ann_template;
  annotate->add_option("--queries", ann_queries)->required();
  annotate->add_option("--variant", ann_variant, "Baseline|Confidence|ConfidenceCot|ConfidenceCotIcl");
  annotate->add_option("--personas", ann_personas, "Persona repository");
  annotate->add_option("--persona", ann_persona, "Persona ids; 'all' fans out over the repository");
  annotate->add_option("--template", ann_template, "Prompt template file");
  annotate->add_option("--output", ann_out);
  annotate->callback([&] {
    auto reg = registry();
    auto annotator = ann_flags.Make(reg);
    auto queries = IngestQueryFile(ann_queries);
    PromptConfig prompt;
    prompt.variant = ParsePromptVariant(ann_variant);
    prompt.registry_hash = reg->hash();
    PromptTemplate tmpl = ann_template.empty() ? PromptTemplate() : LoadPromptTemplate(ann_template);
    std::vector<Persona> personas;
    if (!ann_personas.empty()) personas = LoadPersonas(ann_personas);
    std::vector<const Persona *> selected;
    if (ann_persona == "all") {
      for (const auto &p : personas) selected.push_back(&p);
    } else if (!ann_persona.empty()) {
      for (const auto &id : Split(ann_persona, ',')) {
        const Persona *p = FindPersona(personas, Trim(id));
        if (!p) throw Error(ErrorKind::kMissingPersona, "unknown persona " + id);
        selected.push_back(p);
      }
    }
    Emit(ann_out, [&](std::ostream &o) {
      if (selected.empty()) {
        AnnotationRun run = AnnotateQueries(*annotator, prompt, *reg, queries, nullptr, tmpl);
        WriteAnnotations(o, run.annotations, *reg, &queries);
        std::cerr << run.failures << " failures, " << run.unparseable << " unparseable\n";
        return;
      }
      for (const Persona *p : selected) {
        AnnotationRun run = AnnotateQueries(*annotator, prompt, *reg, queries, p, tmpl);
        for (const auto &[id, a] : run.annotations) {
          json labels = json::object();
          for (const auto &[e, c] : a.entries()) labels[reg->name(e)] = ConfidenceName(c);
          o << json{{"id", id}, {"persona", p->id}, {"labels", labels}}.dump() << '\n';
        }
      }
    });
    std::cerr << annotator->request_count() << " requests, " << annotator->cache_hits()
              << " cache hits\n";
  });

  // matrix
  auto *matrix = app.add_subcommand("matrix", "Build Persona x Entity confidence matrices");
  add_registry(matrix);
  std::string mat_personas, mat_ann, mat_queries, mat_out;
  matrix->add_option("--personas", mat_personas)->required();
  matrix->add_option("--persona-annotations", mat_ann)->required();
  matrix->add_option("--queries", mat_queries)->required();
  matrix->add_option("--output", mat_out);
  matrix->callback([&] {
    auto reg = registry();
    auto personas = LoadPersonas(mat_personas);
    auto by_query = ReadPersonaAnnotations(mat_ann, *reg);
    auto queries = IngestQueryFile(mat_queries);
    Emit(mat_out, [&](std::ostream &o) {
      for (const auto &q : queries) {
        WriteConfidenceMatrix(o, BuildConfidenceMatrix(q, by_query[q.id], personas, *reg), *reg);
      }
    });
  });

  // router-train
  auto *rtrain = app.add_subcommand("router-train", "Train the persona selection router");
  add_registry(rtrain);
  std::string rt_matrices, rt_gold, rt_queries, rt_out, rt_loss;
  RouterTrainConfig rt_config;
  size_t rt_dim = 256;
  rtrain->add_option("--matrices", rt_matrices)->required();
  rtrain->add_option("--gold", rt_gold, "Gold annotations")->required();
  rtrain->add_option("--queries", rt_queries)->required();
  rtrain->add_option("--embed-dim", rt_dim);
  rtrain->add_option("--epochs", rt_config.epochs);
  rtrain->add_option("--lr", rt_config.learning_rate);
  rtrain->add_option("--batch-size", rt_config.batch_size);
  rtrain->add_option("--hidden", rt_config.hidden_dim);
  rtrain->add_option("--dropout", rt_config.dropout);
  rtrain->add_option("--seed", rt_config.seed);
  rtrain->add_option("--output", rt_out)->required();
  rtrain->add_option("--loss", rt_loss, "Loss history CSV");
  rtrain->callback([&] {
    auto reg = registry();
    auto gold = LoadAnnotations(rt_gold, *reg);
    std::map<std::string, std::string> text_of;
    for (const auto &q : IngestQueryFile(rt_queries)) text_of[q.id] = q.text;
    const EncoderBackend embedder = EncoderBackend::HashedNgram(rt_dim);
    std::vector<RouterExample> examples;
    for (auto &m : LoadMatrices(rt_matrices, *reg)) {
      auto t = text_of.find(m.query_id());
      auto g = gold.find(m.query_id());
      if (t == text_of.end() || g == gold.end()) continue;
      examples.push_back({EmbedQuery(embedder, t->second), m,
                          LabelIndicator(g->second, reg->size(), Confidence::kLow)});
    }
    auto result = TrainRouter(examples, rt_config, embedder.descriptor());
    SaveRouterModel(rt_out, result.model);
    if (!rt_loss.empty()) {
      auto out = OpenOut(rt_loss);
      WriteLossHistory(out, result.history);
    }
    std::cerr << examples.size() << " examples, final loss "
              << (result.history.empty() ? 0.0 : result.history.back().loss) << "\n";
  });

  // router-select
  auto *rselect = app.add_subcommand("router-select", "Top-k personas per query");
  std::string rs_model, rs_queries, rs_out;
  size_t rs_k = 3;
  rselect->add_option("--router", rs_model)->required();
  rselect->add_option("--queries", rs_queries)->required();
  rselect->add_option("--k", rs_k);
  rselect->add_option("--output", rs_out);
  rselect->callback([&] {
    RouterModel model = LoadRouterModel(rs_model);
    const EncoderBackend embedder = EncoderBackend::FromDescriptor(model.embedding);
    auto queries = IngestQueryFile(rs_queries);
    Emit(rs_out, [&](std::ostream &o) {
      for (const auto &q : queries) {
        o << json{{"id", q.id}, {"personas", SelectTopK(model, EmbedQuery(embedder, q.text), rs_k)}}
                 .dump()
          << '\n';
      }
    });
  });

  // aggregate
  auto *aggregate = app.add_subcommand("aggregate", "Ensemble persona matrices into labels");
  add_registry(aggregate);
  std::string agg_matrices, agg_weights, agg_out;
  double agg_threshold = kDefaultAggregationThreshold;
  aggregate->add_option("--matrices", agg_matrices)->required();
  aggregate->add_option("--weights", agg_weights, "Comma-separated per-persona weights");
  aggregate->add_option("--threshold", agg_threshold);
  aggregate->add_option("--output", agg_out);
  aggregate->callback([&] {
    auto reg = registry();
    std::vector<double> weights = ParseDoubles(agg_weights);
    AnnotationStore store;
    for (const auto &m : LoadMatrices(agg_matrices, *reg)) {
      std::optional<std::span<const double>> w;
      if (!weights.empty()) w = std::span<const double>(weights);
      store[m.query_id()] = AggregateEnsemble(m, w, agg_threshold);
    }
    Emit(agg_out, [&](std::ostream &o) { WriteAnnotations(o, store, *reg); });
  });

  // labels
  auto *labels = app.add_subcommand("labels", "Weak labels from annotations");
  add_registry(labels);
  std::string lab_ann, lab_queries, lab_filter = "High", lab_out, lab_prov;
  labels->add_option("--annotations", lab_ann)->required();
  labels->add_option("--queries", lab_queries)->required();
  labels->add_option("--filter", lab_filter, "Minimum confidence: Low|Medium|High");
  labels->add_option("--provenance", lab_prov);
  labels->add_option("--output", lab_out);
  labels->callback([&] {
    auto reg = registry();
    auto filter = ParseConfidence(lab_filter);
    if (!filter) throw Error(ErrorKind::kConfig, "bad --filter");
    auto weak = WeakLabelsFromAnnotations(LoadAnnotations(lab_ann, *reg),
                                          IngestQueryFile(lab_queries), *reg, *filter, lab_prov);
    Emit(lab_out, [&](std::ostream &o) { WriteWeakLabels(o, weak, *reg); });
  });

  // train
  auto *train = app.add_subcommand("train", "Train the entity classifier");
  add_registry(train);
  std::string tr_train, tr_dev, tr_out, tr_history, tr_vectors;
  ClassifierTrainConfig tr_config;
  size_t tr_dim = 1024;
  train->add_option("--train", tr_train, "Weak labels for training")->required();
  train->add_option("--dev", tr_dev, "Weak labels for checkpoint selection");
  train->add_option("--dim", tr_dim, "Hashed n-gram dimension");
  train->add_option("--vectors", tr_vectors, "Precomputed vector file instead of hashing");
  train->add_option("--epochs", tr_config.epochs);
  train->add_option("--lr", tr_config.learning_rate);
  train->add_option("--batch-size", tr_config.batch_size);
  train->add_option("--hidden", tr_config.head_hidden);
  train->add_option("--patience", tr_config.patience);
  train->add_option("--seed", tr_config.seed);
  train->add_option("--output", tr_out)->required();
  train->add_option("--history", tr_history, "Per-epoch metrics CSV");
  train->callback([&] {
    auto reg = registry();
    EncoderBackend encoder = tr_vectors.empty() ? EncoderBackend::HashedNgram(tr_dim)
                                                : EncoderBackend::Precomputed(tr_vectors);
    WeakLabelSet dev;
    if (!tr_dev.empty()) dev = LoadWeak(tr_dev, *reg);
    auto result = TrainClassifier(LoadWeak(tr_train, *reg), dev, encoder, *reg, tr_config);
    SaveClassifierModel(tr_out, result.model);
    if (!tr_history.empty()) {
      auto out = OpenOut(tr_history);
      out << "epoch,train_loss,dev_micro_f1\n";
      for (const auto &h : result.history) {
        out << h.epoch << ',' << h.train_loss << ',' << h.dev_micro_f1 << '\n';
      }
    }
    std::cerr << "best epoch " << result.best_epoch << "\n";
  });

  // tune
  auto *tune = app.add_subcommand("tune", "Per-entity decision thresholds");
  add_registry(tune);
  std::string tu_model, tu_dev, tu_mode = "MaxF1", tu_gaz, tu_out, tu_model_out;
  tune->add_option("--model", tu_model)->required();
  tune->add_option("--dev", tu_dev, "Labeled dev set (weak label file)")->required();
  tune->add_option("--mode", tu_mode, "MaxF1|MatchRecall|MatchPrecision");
  tune->add_option("--baseline-gazetteer", tu_gaz, "Lexical baseline for the match modes");
  tune->add_option("--output", tu_out, "Thresholds JSON");
  tune->add_option("--model-out", tu_model_out, "Model file with tuned thresholds");
  tune->callback([&] {
    auto reg = registry();
    EntityClassifier classifier(LoadClassifierModel(tu_model), *reg);
    WeakLabelSet dev = LoadWeak(tu_dev, *reg);
    TuneMode mode;
    if (tu_mode == "MaxF1") {
      mode.kind = TuneKind::kMaxF1;
    } else if (tu_mode == "MatchRecall" || tu_mode == "MatchPrecision") {
      mode.kind = tu_mode == "MatchRecall" ? TuneKind::kMatchRecall : TuneKind::kMatchPrecision;
      if (tu_gaz.empty()) throw Error(ErrorKind::kConfig, "match modes need --baseline-gazetteer");
      Gazetteer gaz = LoadGazetteer(tu_gaz, *reg);
      AnnotationStore ref, lex;
      for (const auto &item : dev.items) {
        Annotation a;
        for (size_t e = 0; e < item.labels.size(); ++e) {
          if (item.labels[e]) a.Set(EntityId(static_cast<int>(e)), Confidence::kHigh);
        }
        ref[item.id] = a;
        lex[item.id] = gaz.LexicalMatch(item.text);
      }
      for (const Metrics &m : ComputeMetrics(ref, lex, *reg).unweighted.per_entity) {
        const bool predicted = m.counts.tp + m.counts.fp > 0;
        mode.targets.push_back(mode.kind == TuneKind::kMatchRecall
                                   ? m.recall
                                   : (predicted ? m.precision : 1.0));
      }
    } else {
      throw Error(ErrorKind::kConfig, "unknown --mode " + tu_mode);
    }
    auto choices = TuneThresholds(classifier, dev, mode);
    for (size_t e = 0; e < choices.size(); ++e) {
      classifier.mutable_model().thresholds[e] = choices[e].threshold;
      if (!choices[e].attainable) {
        std::cerr << reg->entities()[e].id << ": target unattainable, closest threshold "
                  << choices[e].threshold << "\n";
      }
    }
    Emit(tu_out, [&](std::ostream &o) { WriteThresholds(o, classifier.model()); });
    if (!tu_model_out.empty()) SaveClassifierModel(tu_model_out, classifier.model());
  });

  // eval
  auto *eval = app.add_subcommand("eval", "Unweighted and frequency-weighted metrics");
  add_registry(eval);
  std::string ev_gold, ev_pred, ev_queries, ev_baseline, ev_format = "table", ev_out;
  eval->add_option("--gold", ev_gold)->required();
  eval->add_option("--pred", ev_pred)->required();
  eval->add_option("--queries", ev_queries, "Query file supplying frequencies");
  eval->add_option("--baseline", ev_baseline, "Baseline annotations for relative gains");
  eval->add_option("--format", ev_format, "table|jsonl");
  eval->add_option("--output", ev_out);
  eval->callback([&] {
    auto reg = registry();
    FrequencyMap freq;
    if (!ev_queries.empty()) freq = Frequencies(IngestQueryFile(ev_queries));
    const AnnotationStore gold = LoadAnnotations(ev_gold, *reg);
    EvalReport report = ComputeMetrics(gold, LoadAnnotations(ev_pred, *reg), *reg, freq);
    report.reference = ev_gold;
    report.candidate = ev_pred;
    Emit(ev_out, [&](std::ostream &o) {
      if (ev_format == "jsonl") {
        WriteReportJsonl(o, report);
      } else {
        WriteReportTable(o, report);
      }
      if (!ev_baseline.empty()) {
        EvalReport base = ComputeMetrics(gold, LoadAnnotations(ev_baseline, *reg), *reg, freq);
        WriteGainJsonl(o, RelativeGain(report, base));
      }
    });
  });

  // ablation
  auto *ablation = app.add_subcommand("ablation", "Prompt-variant grid and persona selection study");
  add_registry(ablation);
  size_t ab_queries = 500;
  uint64_t ab_seed = 7;
  double ab_noise = 0.0;
  size_t ab_k = 1;
  ablation->add_option("--queries", ab_queries, "Synthetic queries per study");
  ablation->add_option("--seed", ab_seed);
  ablation->add_option("--noise-rate", ab_noise);
  ablation->add_option("--k", ab_k, "Personas selected per query");
  ablation->callback([&] {
    auto base = registry();
    AmbiguityScenario scenario = MakeAmbiguityScenario(*base, ab_queries, ab_seed);
    MockConfig mock;
    mock.seed = ab_seed;
    mock.registry = std::make_shared<const EntityRegistry>(scenario.registry);
    mock.gazetteer = std::make_shared<const Gazetteer>(scenario.gazetteer);
    mock.noise_rate = ab_noise;
    std::cout << "# prompt variants (mock annotator, ambiguous gazetteer)\n";
    WriteVariantGrid(std::cout, RunPromptVariantGrid(mock, BankGazetteer(*base, 0.4, ab_seed),
                                                     scenario.corpus));
    SyntheticConfig sc;
    sc.num_queries = ab_queries;
    sc.seed = ab_seed;
    SyntheticCorpus corpus = GenerateCorpus(*base, sc);
    std::vector<PanelPersona> panel = {{"oracle", PanelBehavior::kOracle, 0.0, {}},
                                       {"adversarial", PanelBehavior::kAdversarial, 0.0, {}},
                                       {"random", PanelBehavior::kRandom, 0.2, {}},
                                       {"noisy", PanelBehavior::kNoisy, 0.1, {}}};
    RouterStudyConfig rc;
    rc.k = ab_k;
    rc.train.seed = ab_seed;
    std::cout << "# persona selection (router-" << ab_k << " vs random-" << ab_k << ")\n";
    WriteRouterStudy(std::cout, RunRouterStudy(*base, corpus, panel, rc));
  });

  // synth
  auto *synth = app.add_subcommand("synth", "Write a synthetic query log, gold labels and gazetteer");
  add_registry(synth);
  SyntheticConfig syn;
  std::string syn_dir;
  double syn_fraction = 1.0;
  synth->add_option("--num", syn.num_queries);
  synth->add_option("--seed", syn.seed);
  synth->add_option("--noise", syn.paraphrase_noise, "Paraphrase noise per phrase");
  synth->add_option("--gazetteer-fraction", syn_fraction);
  synth->add_option("--out-dir", syn_dir)->required();
  synth->callback([&] {
    auto reg = registry();
    SyntheticCorpus corpus = GenerateCorpus(*reg, syn);
    fs::create_directories(syn_dir);
    {
      auto out = OpenOut((fs::path(syn_dir) / "queries.tsv").string());
      WriteQueryLines(out, corpus.queries);
    }
    {
      auto out = OpenOut((fs::path(syn_dir) / "gold.jsonl").string());
      WriteAnnotations(out, corpus.gold, *reg, &corpus.queries);
    }
    {
      auto out = OpenOut((fs::path(syn_dir) / "gazetteer.jsonl").string());
      BankGazetteer(*reg, syn_fraction, syn.seed).Write(out, *reg);
    }
    std::cerr << corpus.queries.size() << " queries written to " << syn_dir << "\n";
  });

  // run
  auto *run = app.add_subcommand("run", "Run the end-to-end pipeline from a config file");
  std::string run_config, run_out;
  std::vector<std::string> run_sets;
  run->add_option("--config", run_config)->required();
  run->add_option("--set", run_sets, "Config override key=value (repeatable)");
  run->add_option("--output-dir", run_out);
  run->callback([&] {
    std::vector<std::string> overrides = run_sets;
    if (!run_out.empty()) overrides.push_back("output_dir=" + fs::absolute(run_out).string());
    RunConfig config = LoadRunConfig(run_config, overrides);
    PipelineStats stats;
    Manifest manifest = RunPipeline(config, &stats);
    std::cout << manifest.json;
    std::cerr << manifest.artifacts.size() << " artifacts, " << stats.llm_requests
              << " annotator requests, " << stats.cache_hits << " cache hits\n";
  });

  // serve
  auto *serve = app.add_subcommand("serve", "Answer newline-delimited queries on stdio or TCP");
  add_registry(serve);
  std::string sv_model, sv_thresholds;
  int sv_port = -1;
  serve->add_option("--model", sv_model)->required();
  serve->add_option("--thresholds", sv_thresholds, "Thresholds JSON overriding the model's");
  serve->add_option("--port", sv_port, "TCP port; stdio when omitted");
  serve->callback([&] {
    auto reg = registry();
    ClassifierModel model = LoadClassifierModel(sv_model);
    if (!sv_thresholds.empty()) {
      auto in = OpenIn(sv_thresholds);
      ReadThresholdsInto(in, model);
    }
    EntityClassifier classifier(std::move(model), *reg);
    if (sv_port < 0) {
      ServeStream(classifier, std::cin, std::cout);
      return;
    }
    std::signal(SIGINT, [](int) { g_stop.store(true); });
    std::signal(SIGTERM, [](int) { g_stop.store(true); });
    ServeTcp(classifier, static_cast<uint16_t>(sv_port), g_stop,
             [](uint16_t port) { std::cerr << "listening on 127.0.0.1:" << port << "\n"; });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  try {
    return Main(argc, argv);
  } catch (const qintent::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == qintent::ErrorKind::kConfig ? 2 : 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
