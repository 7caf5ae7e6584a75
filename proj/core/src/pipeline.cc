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
#include "qintent/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <memory>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "qintent/ablation.h"
#include "qintent/baseline.h"
#include "qintent/digest.h"
#include "qintent/error.h"
#include "qintent/evaluation.h"
#include "qintent/features.h"
#include "qintent/personas.h"
#include "qintent/text.h"

namespace qintent {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view PersonaModeName(PersonaMode mode) {
  switch (mode) {
    case PersonaMode::kNone: return "none";
    case PersonaMode::kRandomK: return "random-k";
    case PersonaMode::kRouterK: return "router-k";
  }
  return "none";
}

PersonaMode ParsePersonaMode(std::string_view name) {
  for (PersonaMode m : {PersonaMode::kNone, PersonaMode::kRandomK, PersonaMode::kRouterK}) {
    if (PersonaModeName(m) == name) return m;
  }
  throw Error(ErrorKind::kConfig, "unknown persona mode '" + std::string(name) + "'");
}

namespace {

std::string_view TuneKindName(TuneKind k) {
  switch (k) {
    case TuneKind::kMaxF1: return "MaxF1";
    case TuneKind::kMatchRecall: return "MatchRecall";
    case TuneKind::kMatchPrecision: return "MatchPrecision";
  }
  return "MaxF1";
}

TuneKind ParseTuneKind(std::string_view s) {
  for (TuneKind k : {TuneKind::kMaxF1, TuneKind::kMatchRecall, TuneKind::kMatchPrecision}) {
    if (TuneKindName(k) == s) return k;
  }
  throw Error(ErrorKind::kConfig, "unknown tune mode '" + std::string(s) + "'");
}

// Typed reads from a JSON object that consume keys, so leftovers can be
// reported as unknown.
class Reader {
 public:
  Reader(json obj, std::string where) : obj_(std::move(obj)), where_(std::move(where)) {
    if (!obj_.is_object()) throw Error(ErrorKind::kConfig, where_ + " must be an object");
  }
  ~Reader() = default;

  template <typename T>
  void Get(const char *key, T &out) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception &e) {
      throw Error(ErrorKind::kConfig, where_ + "." + key + ": " + e.what());
    }
    obj_.erase(it);
  }

  bool Has(const char *key) const { return obj_.contains(key); }

  Reader Sub(const char *key) {
    json sub = json::object();
    if (auto it = obj_.find(key); it != obj_.end()) {
      sub = *it;
      obj_.erase(it);
    }
    return Reader(std::move(sub), where_ + "." + key);
  }

  void Finish() const {
    if (!obj_.empty()) {
      throw Error(ErrorKind::kConfig, "unknown config key " + where_ + "." + obj_.begin().key());
    }
  }

 private:
  json obj_;
  std::string where_;
};

fs::path Resolve(const fs::path &base, const std::string &p) {
  if (p.empty()) return {};
  fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

void ApplyOverride(json &doc, const std::string &spec) {
  const size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorKind::kConfig, "override '" + spec + "' is not key=value");
  }
  std::string pointer = "/" + spec.substr(0, eq);
  std::replace(pointer.begin(), pointer.end(), '.', '/');
  const std::string raw = spec.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  doc[json::json_pointer(pointer)] = std::move(value);
}

}  // namespace

RunConfig ParseRunConfig(const std::string &json_text, const fs::path &base_dir,
                         const std::vector<std::string> &overrides) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorKind::kConfig, "config is not valid JSON");
  for (const auto &o : overrides) ApplyOverride(doc, o);

  RunConfig c;
  Reader r(std::move(doc), "config");
  std::string registry, personas, gazetteer, baseline, queries, gold, tmpl, cache, out;
  r.Get("registry", registry);
  r.Get("personas", personas);
  r.Get("gazetteer", gazetteer);
  r.Get("baseline_gazetteer", baseline);
  r.Get("queries", queries);
  r.Get("gold", gold);
  r.Get("prompt_template", tmpl);
  r.Get("cache_dir", cache);
  r.Get("output_dir", out);
  r.Get("seed", c.seed);
  if (registry.empty()) throw Error(ErrorKind::kConfig, "config.registry is required");
  if (queries.empty()) throw Error(ErrorKind::kConfig, "config.queries is required");
  if (out.empty()) out = "out";
  c.registry = Resolve(base_dir, registry);
  c.personas = Resolve(base_dir, personas);
  c.gazetteer = Resolve(base_dir, gazetteer);
  c.baseline_gazetteer = Resolve(base_dir, baseline.empty() ? gazetteer : baseline);
  c.queries = Resolve(base_dir, queries);
  c.gold = Resolve(base_dir, gold);
  c.prompt_template = Resolve(base_dir, tmpl);
  c.output_dir = Resolve(base_dir, out);
  c.cache_dir = cache.empty() ? c.output_dir / "cache" : Resolve(base_dir, cache);

  {
    Reader s = r.Sub("split");
    s.Get("train", c.split.train);
    s.Get("dev", c.split.dev);
    s.Get("test", c.split.test);
    s.Finish();
  }
  {
    Reader a = r.Sub("annotator");
    a.Get("kind", c.annotator);
    if (c.annotator != "mock" && c.annotator != "http") {
      throw Error(ErrorKind::kConfig, "annotator.kind must be mock or http");
    }
    a.Get("url", c.http.url);
    a.Get("auth_env", c.http.auth_env);
    a.Get("model", c.http.model);
    int64_t timeout_ms = c.http.timeout.count();
    int64_t backoff_ms = c.http.backoff_base.count();
    a.Get("timeout_ms", timeout_ms);
    a.Get("backoff_ms", backoff_ms);
    c.http.timeout = std::chrono::milliseconds(timeout_ms);
    c.http.backoff_base = std::chrono::milliseconds(backoff_ms);
    a.Get("max_retries", c.http.max_retries);
    a.Get("noise_rate", c.noise_rate);
    json bias = json::array();
    a.Get("persona_bias", bias);
    for (const auto &b : bias) {
      BiasSpec spec;
      std::string action = "add";
      try {
        spec.persona = b.at("persona").get<std::string>();
        spec.entity = b.at("entity").get<std::string>();
        if (b.contains("action")) action = b["action"].get<std::string>();
      } catch (const json::exception &e) {
        throw Error(ErrorKind::kConfig, std::string("annotator.persona_bias: ") + e.what());
      }
      if (action == "add") {
        spec.action = BiasAction::kAdd;
      } else if (action == "remove") {
        spec.action = BiasAction::kRemove;
      } else {
        throw Error(ErrorKind::kConfig, "persona_bias action must be add or remove");
      }
      c.persona_bias.push_back(std::move(spec));
    }
    a.Finish();
  }
  {
    Reader b = r.Sub("batch");
    b.Get("max_in_flight", c.batch.max_in_flight);
    b.Get("requests_per_second", c.batch.requests_per_second);
    b.Finish();
  }
  {
    Reader p = r.Sub("prompt");
    std::string variant(PromptVariantName(c.variant));
    p.Get("variant", variant);
    c.variant = ParsePromptVariant(variant);
    p.Get("max_icl_examples", c.max_icl_examples);
    p.Finish();
  }
  {
    Reader p = r.Sub("persona_selection");
    std::string mode(PersonaModeName(c.persona_mode));
    p.Get("mode", mode);
    c.persona_mode = ParsePersonaMode(mode);
    p.Get("k", c.persona_k);
    p.Get("aggregation_threshold", c.aggregation_threshold);
    p.Get("router_max_queries", c.router_max_queries);
    p.Get("rebalance_cap", c.rebalance_cap);
    p.Get("embed_dim", c.router_embed_dim);
    p.Finish();
  }
  c.router.seed = c.seed;
  {
    Reader t = r.Sub("router");
    t.Get("learning_rate", c.router.learning_rate);
    t.Get("epochs", c.router.epochs);
    t.Get("batch_size", c.router.batch_size);
    t.Get("seed", c.router.seed);
    t.Get("hidden_dim", c.router.hidden_dim);
    t.Get("dropout", c.router.dropout);
    t.Get("weight_decay", c.router.weight_decay);
    t.Finish();
  }
  {
    Reader l = r.Sub("labels");
    std::string filter(ConfidenceName(c.label_filter));
    l.Get("filter", filter);
    auto parsed = ParseConfidence(filter);
    if (!parsed) throw Error(ErrorKind::kConfig, "labels.filter must be Low, Medium or High");
    c.label_filter = *parsed;
    l.Finish();
  }
  c.encoder.dim = 1024;
  {
    Reader e = r.Sub("encoder");
    std::string kind(EncoderKindName(c.encoder.kind));
    e.Get("kind", kind);
    try {
      c.encoder.kind = ParseEncoderKind(kind);
    } catch (const Error &err) {
      throw Error(ErrorKind::kConfig, err.what());
    }
    e.Get("dim", c.encoder.dim);
    e.Get("seed", c.encoder.seed);
    std::string path;
    e.Get("path", path);
    c.encoder.path = Resolve(base_dir, path).string();
    e.Finish();
  }
  c.classifier.seed = c.seed;
  {
    Reader t = r.Sub("classifier");
    t.Get("learning_rate", c.classifier.learning_rate);
    t.Get("epochs", c.classifier.epochs);
    t.Get("batch_size", c.classifier.batch_size);
    t.Get("seed", c.classifier.seed);
    t.Get("head_hidden", c.classifier.head_hidden);
    t.Get("patience", c.classifier.patience);
    t.Get("weight_decay", c.classifier.weight_decay);
    t.Get("dev_threshold", c.classifier.dev_threshold);
    t.Finish();
  }
  {
    Reader t = r.Sub("tune");
    std::string mode(TuneKindName(c.tune));
    t.Get("mode", mode);
    c.tune = ParseTuneKind(mode);
    t.Finish();
  }
  r.Finish();

  if (c.persona_k < 1) throw Error(ErrorKind::kConfig, "persona_selection.k must be >= 1");
  if (!(c.noise_rate >= 0.0 && c.noise_rate < 1.0)) {
    throw Error(ErrorKind::kConfig, "annotator.noise_rate must be in [0, 1)");
  }
  return c;
}

RunConfig LoadRunConfig(const fs::path &path, const std::vector<std::string> &overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseRunConfig(ss.str(), fs::absolute(path).parent_path(), overrides);
}

void ValidateRunConfig(const RunConfig &c) {
  auto need = [](const fs::path &p, const char *what) {
    if (p.empty()) throw Error(ErrorKind::kConfig, std::string(what) + " path is not set");
    if (!fs::is_regular_file(p)) {
      throw Error(ErrorKind::kConfig, std::string(what) + " not found: " + p.string());
    }
  };
  need(c.registry, "registry");
  need(c.queries, "queries");
  need(c.baseline_gazetteer, "baseline gazetteer");
  if (c.annotator == "mock") need(c.gazetteer, "mock gazetteer");
  if (c.annotator == "http" && c.http.url.empty()) {
    throw Error(ErrorKind::kConfig, "annotator.url is required for http");
  }
  if (c.persona_mode != PersonaMode::kNone) need(c.personas, "personas");
  if (c.persona_mode == PersonaMode::kRouterK) need(c.gold, "gold (router training)");
  if (!c.gold.empty()) need(c.gold, "gold");
  if (!c.prompt_template.empty()) need(c.prompt_template, "prompt template");
  if (c.encoder.kind == EncoderKind::kPrecomputedVectors) need(c.encoder.path, "vector file");
}

std::string RunConfig::ToJson() const {
  json bias = json::array();
  for (const auto &b : persona_bias) {
    bias.push_back({{"persona", b.persona},
                    {"entity", b.entity},
                    {"action", b.action == BiasAction::kAdd ? "add" : "remove"}});
  }
  json j = {
      {"registry", registry.string()},
      {"personas", personas.string()},
      {"gazetteer", gazetteer.string()},
      {"baseline_gazetteer", baseline_gazetteer.string()},
      {"queries", queries.string()},
      {"gold", gold.string()},
      {"prompt_template", prompt_template.string()},
      {"cache_dir", cache_dir.string()},
      {"output_dir", output_dir.string()},
      {"seed", seed},
      {"split", {{"train", split.train}, {"dev", split.dev}, {"test", split.test}}},
      {"annotator",
       {{"kind", annotator},
        {"url", http.url},
        {"auth_env", http.auth_env},
        {"model", http.model},
        {"timeout_ms", http.timeout.count()},
        {"backoff_ms", http.backoff_base.count()},
        {"max_retries", http.max_retries},
        {"noise_rate", noise_rate},
        {"persona_bias", bias}}},
      {"batch",
       {{"max_in_flight", batch.max_in_flight},
        {"requests_per_second", batch.requests_per_second}}},
      {"prompt",
       {{"variant", PromptVariantName(variant)}, {"max_icl_examples", max_icl_examples}}},
      {"persona_selection",
       {{"mode", PersonaModeName(persona_mode)},
        {"k", persona_k},
        {"aggregation_threshold", aggregation_threshold},
        {"router_max_queries", router_max_queries},
        {"rebalance_cap", rebalance_cap},
        {"embed_dim", router_embed_dim}}},
      {"router", json::parse(router.ToJson())},
      {"labels", {{"filter", ConfidenceName(label_filter)}}},
      {"encoder",
       {{"kind", EncoderKindName(encoder.kind)},
        {"dim", encoder.dim},
        {"seed", encoder.seed},
        {"path", encoder.path}}},
      {"classifier", json::parse(classifier.ToJson())},
      {"tune", {{"mode", TuneKindName(tune)}}},
  };
  return j.dump();
}

namespace {

// Output directory bookkeeping: every file written is digested in order.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {}

  void Write(const std::string &name, const std::string &file,
             const std::function<void(std::ostream &)> &body) {
    const fs::path path = dir_ / file;
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
      body(out);
      if (!out) throw Error(ErrorKind::kIo, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
    artifacts_.push_back({name, file, FileSha256Hex(path)});
  }

  const std::vector<Artifact> &artifacts() const { return artifacts_; }
  const fs::path &dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<Artifact> artifacts_;
};

template <typename F>
auto Stage(const char *name, F &&body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error &e) {
    if (e.kind() == ErrorKind::kStage) throw;
    throw Error(ErrorKind::kStage, std::string("stage ") + name + ": " + e.what());
  } catch (const std::exception &e) {
    throw Error(ErrorKind::kStage, std::string("stage ") + name + ": " + e.what());
  }
}

struct PersonaCall {
  size_t query;
  size_t persona;
};

// One prompt per (query, persona) pair, annotated as a single batch.
std::vector<Annotation> AnnotatePairs(Annotator &annotator, const PromptConfig &prompt,
                                      const EntityRegistry &registry,
                                      const std::vector<QueryRecord> &queries,
                                      const std::vector<Persona> &personas,
                                      const std::vector<PersonaCall> &calls,
                                      const PromptTemplate &tmpl) {
  std::vector<Annotation> out(calls.size());
  if (calls.empty()) return out;
  std::vector<PromptText> prompts;
  for (const auto &c : calls) {
    prompts.push_back(
        BuildPrompt(prompt, registry, queries[c.query].text, &personas[c.persona], tmpl));
  }
  const std::vector<AnnotationResult> results = annotator.AnnotateBatch(prompts);
  for (size_t i = 0; i < calls.size(); ++i) {
    const auto *raw = std::get_if<std::string>(&results[i]);
    if (raw == nullptr) continue;  // failures count as no labels
    try {
      out[i] = ParseResponse(registry, *raw).annotation;
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::kUnparseableResponse) throw;
    }
  }
  return out;
}

}  // namespace

Manifest RunPipeline(const RunConfig &config, PipelineStats *stats) {
  ValidateRunConfig(config);

  // Inputs are loaded up front so malformed files fail before any output.
  auto registry = std::make_shared<const EntityRegistry>(
      Stage("load", [&] { return LoadRegistry(config.registry); }));
  auto [baseline_gazetteer, mock_gazetteer, personas, tmpl, gold] = Stage("load", [&] {
    Gazetteer base = LoadGazetteer(config.baseline_gazetteer, *registry);
    auto mock = std::make_shared<Gazetteer>();
    if (config.annotator == "mock") *mock = LoadGazetteer(config.gazetteer, *registry);
    std::vector<Persona> ps;
    if (config.persona_mode != PersonaMode::kNone) ps = LoadPersonas(config.personas);
    PromptTemplate t = config.prompt_template.empty() ? PromptTemplate()
                                                      : LoadPromptTemplate(config.prompt_template);
    std::optional<AnnotationStore> g;
    if (!config.gold.empty()) g = LoadAnnotations(config.gold, *registry);
    return std::make_tuple(std::move(base), std::shared_ptr<const Gazetteer>(mock),
                           std::move(ps), std::move(t), std::move(g));
  });
  if (config.persona_mode != PersonaMode::kNone && config.persona_k > personas.size()) {
    throw Error(ErrorKind::kConfig, "persona_selection.k exceeds the persona count");
  }

  fs::create_directories(config.output_dir);
  ArtifactWriter writer(config.output_dir);
  json input_digests = json::object();
  for (const auto &[name, path] :
       std::vector<std::pair<std::string, fs::path>>{{"registry", config.registry},
                                                     {"queries", config.queries},
                                                     {"gazetteer", config.gazetteer},
                                                     {"baseline_gazetteer", config.baseline_gazetteer},
                                                     {"personas", config.personas},
                                                     {"gold", config.gold},
                                                     {"prompt_template", config.prompt_template},
                                                     {"vectors", fs::path(config.encoder.path)}}) {
    if (!path.empty() && fs::is_regular_file(path)) input_digests[name] = FileSha256Hex(path);
  }
  // Paths do not enter the digest; file contents do.
  json echo = json::parse(config.ToJson());
  for (const char *key : {"registry", "personas", "gazetteer", "baseline_gazetteer", "queries",
                          "gold", "prompt_template", "cache_dir", "output_dir"}) {
    echo.erase(key);
  }
  echo["encoder"].erase("path");
  const std::string config_digest =
      Sha256Hex(json{{"config", echo}, {"inputs", input_digests}}.dump()).substr(0, 16);

  // ingest
  const std::vector<QueryRecord> records =
      Stage("ingest", [&] { return IngestQueryFile(config.queries); });
  writer.Write("queries", "queries.jsonl", [&](std::ostream &o) { WriteQueryJsonl(o, records); });

  // split
  const DatasetSplit split =
      Stage("split", [&] { return SplitDataset(records, config.split, config.seed); });
  writer.Write("split", "split.jsonl", [&](std::ostream &o) { WriteSplitManifest(o, split); });

  // annotate
  MockConfig mock;
  mock.seed = config.seed;
  mock.registry = registry;
  mock.gazetteer = mock_gazetteer;
  mock.noise_rate = config.noise_rate;
  for (const auto &b : config.persona_bias) {
    EntityId e = registry->ValidateLabel(b.entity);
    if (e.is_none()) throw Error(ErrorKind::kConfig, "persona_bias entity cannot be None");
    mock.persona_bias.push_back({b.persona, e, b.action});
  }
  AnnotatorHandle handle;
  if (config.annotator == "mock") {
    handle.config = mock;
  } else {
    handle.config = config.http;
  }
  BatchOptions batch = config.batch;
  batch.cache_dir = config.cache_dir;
  Annotator annotator(handle, batch);
  PromptConfig prompt;
  prompt.variant = config.variant;
  prompt.registry_hash = registry->hash();
  prompt.max_icl_examples_per_entity = config.max_icl_examples;

  AnnotationStore annotations;  // the annotator's final labels per query
  if (config.persona_mode == PersonaMode::kNone) {
    annotations = Stage("annotate", [&] {
      return AnnotateQueries(annotator, prompt, *registry, records, nullptr, tmpl).annotations;
    });
    writer.Write("annotations", "annotations.jsonl",
                 [&](std::ostream &o) { WriteAnnotations(o, annotations, *registry, &records); });
  } else {
    std::map<std::string, size_t> index_of;
    for (size_t i = 0; i < records.size(); ++i) index_of[records[i].id] = i;
    std::vector<std::string> persona_ids;
    for (const auto &p : personas) persona_ids.push_back(p.id);
    std::vector<std::vector<size_t>> chosen(records.size());
    std::map<std::pair<size_t, size_t>, Annotation> by_pair;  // (query, persona)
    auto annotate_pairs = [&](const std::vector<PersonaCall> &calls) {
      std::vector<PersonaCall> todo;
      for (const auto &c : calls) {
        if (!by_pair.count({c.query, c.persona})) todo.push_back(c);
      }
      std::vector<Annotation> got =
          AnnotatePairs(annotator, prompt, *registry, records, personas, todo, tmpl);
      for (size_t i = 0; i < todo.size(); ++i) {
        by_pair[{todo[i].query, todo[i].persona}] = std::move(got[i]);
      }
    };
    auto matrix_for = [&](size_t q, const std::vector<size_t> &rows) {
      std::map<std::string, Annotation> per;
      std::vector<Persona> ordered;
      for (size_t p : rows) {
        per[personas[p].id] = by_pair.at({q, p});
        ordered.push_back(personas[p]);
      }
      return BuildConfidenceMatrix(records[q], per, ordered, *registry);
    };

    if (config.persona_mode == PersonaMode::kRandomK) {
      Stage("annotate", [&] {
        std::vector<PersonaCall> calls;
        for (size_t q = 0; q < records.size(); ++q) {
          std::vector<size_t> rows(personas.size());
          std::iota(rows.begin(), rows.end(), 0);
          Rng rng(Hash64(records[q].id, config.seed ^ 0x5e1ec7ULL));
          rng.Shuffle(rows);
          rows.resize(config.persona_k);
          chosen[q] = rows;
          for (size_t p : rows) calls.push_back({q, p});
        }
        annotate_pairs(calls);
        return 0;
      });
    } else {
      // Router training set: rebalanced train split annotated by every persona.
      std::vector<RouterExample> examples;
      std::vector<ConfidenceMatrix> train_matrices;
      const EncoderBackend embedder =
          EncoderBackend::HashedNgram(config.router_embed_dim, config.encoder.seed);
      Stage("annotate", [&] {
        AnnotationStore train_gold;
        for (const auto &q : split.train) {
          if (gold->count(q.id)) train_gold[q.id] = gold->at(q.id);
        }
        std::vector<QueryRecord> pool;
        for (const auto &q : split.train) {
          if (train_gold.count(q.id)) pool.push_back(q);
        }
        if (pool.empty()) throw Error(ErrorKind::kMissingAnnotation, "no gold for train queries");
        pool = RebalanceByEntity(pool, train_gold, config.rebalance_cap, config.seed);
        if (pool.size() > config.router_max_queries) pool.resize(config.router_max_queries);
        std::vector<PersonaCall> calls;
        for (const auto &q : pool) {
          for (size_t p = 0; p < personas.size(); ++p) calls.push_back({index_of.at(q.id), p});
        }
        annotate_pairs(calls);
        std::vector<size_t> all(personas.size());
        std::iota(all.begin(), all.end(), 0);
        for (const auto &q : pool) {
          ConfidenceMatrix m = matrix_for(index_of.at(q.id), all);
          examples.push_back({EmbedQuery(embedder, q.text), m,
                              LabelIndicator(train_gold.at(q.id), registry->size(),
                                             Confidence::kLow)});
          train_matrices.push_back(std::move(m));
        }
        return 0;
      });
      writer.Write("matrices", "matrices.csv", [&](std::ostream &o) {
        for (const auto &m : train_matrices) WriteConfidenceMatrix(o, m, *registry);
      });
      RouterTrainResult trained =
          Stage("router", [&] { return TrainRouter(examples, config.router, embedder.descriptor()); });
      writer.Write("router_model", "router.json",
                   [&](std::ostream &o) { WriteRouterModel(o, trained.model); });
      writer.Write("router_loss", "router_loss.csv",
                   [&](std::ostream &o) { WriteLossHistory(o, trained.history); });
      Stage("annotate", [&] {
        std::vector<PersonaCall> calls;
        for (size_t q = 0; q < records.size(); ++q) {
          const auto rel = RouterForward(trained.model, EmbedQuery(embedder, records[q].text));
          std::vector<size_t> top = TopKIndices(rel, trained.model.persona_ids, config.persona_k);
          // Router rows follow its persona order, which matches the repository.
          chosen[q] = top;
          for (size_t p : top) calls.push_back({q, p});
        }
        annotate_pairs(calls);
        return 0;
      });
    }
    writer.Write("persona_annotations", "persona_annotations.jsonl", [&](std::ostream &o) {
      for (const auto &[key, a] : by_pair) {
        json labels = json::object();
        for (const auto &[e, c] : a.entries()) labels[registry->name(e)] = ConfidenceName(c);
        o << json{{"id", records[key.first].id},
                  {"persona", personas[key.second].id},
                  {"labels", labels}}
                 .dump()
          << '\n';
      }
    });
    annotations = Stage("aggregate", [&] {
      AnnotationStore agg;
      for (size_t q = 0; q < records.size(); ++q) {
        agg[records[q].id] =
            AggregateEnsemble(matrix_for(q, chosen[q]), std::nullopt, config.aggregation_threshold);
      }
      return agg;
    });
    writer.Write("aggregated_annotations", "aggregated.jsonl",
                 [&](std::ostream &o) { WriteAnnotations(o, annotations, *registry, &records); });
  }

  // weak labels for train and dev
  std::vector<QueryRecord> labeled = split.train;
  labeled.insert(labeled.end(), split.dev.begin(), split.dev.end());
  const WeakLabelSet weak = Stage("labels", [&] {
    return WeakLabelsFromAnnotations(annotations, labeled, *registry, config.label_filter,
                                     std::string(handle.model()) + ":" +
                                         std::string(PromptVariantName(config.variant)));
  });
  writer.Write("weak_labels", "weak_labels.jsonl",
               [&](std::ostream &o) { WriteWeakLabels(o, weak, *registry); });
  WeakLabelSet train_set = weak, dev_set = weak;
  train_set.items.assign(weak.items.begin(), weak.items.begin() + static_cast<long>(split.train.size()));
  dev_set.items.assign(weak.items.begin() + static_cast<long>(split.train.size()), weak.items.end());

  // classifier
  const EncoderBackend encoder = Stage("train", [&] {
    return config.encoder.kind == EncoderKind::kPrecomputedVectors
               ? EncoderBackend::Precomputed(config.encoder.path)
               : EncoderBackend::FromDescriptor(config.encoder);
  });
  ClassifierTrainResult trained = Stage("train", [&] {
    return TrainClassifier(train_set, dev_set, encoder, *registry, config.classifier);
  });
  writer.Write("train_history", "train_history.csv", [&](std::ostream &o) {
    o << "epoch,train_loss,dev_micro_f1\n";
    char buf[96];
    for (const auto &h : trained.history) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", h.epoch, h.train_loss, h.dev_micro_f1);
      o << buf;
    }
  });

  // thresholds, tuned on the weakly labeled dev split
  EntityClassifier classifier(std::move(trained.model), encoder, *registry);
  Stage("tune", [&] {
    TuneMode mode;
    mode.kind = config.tune;
    if (config.tune != TuneKind::kMaxF1) {
      AnnotationStore dev_weak, dev_lex;
      for (const auto &item : dev_set.items) {
        Annotation a;
        for (size_t e = 0; e < item.labels.size(); ++e) {
          if (item.labels[e]) a.Set(EntityId(static_cast<int>(e)), Confidence::kHigh);
        }
        dev_weak[item.id] = a;
        dev_lex[item.id] = baseline_gazetteer.LexicalMatch(item.text);
      }
      const EvalReport base = ComputeMetrics(dev_weak, dev_lex, *registry);
      for (const Metrics &m : base.unweighted.per_entity) {
        const bool predicted = m.counts.tp + m.counts.fp > 0;
        mode.targets.push_back(config.tune == TuneKind::kMatchRecall
                                   ? m.recall
                                   : (predicted ? m.precision : 1.0));
      }
    }
    const auto choices = TuneThresholds(classifier, dev_set, mode);
    for (size_t e = 0; e < choices.size(); ++e) {
      classifier.mutable_model().thresholds[e] = choices[e].threshold;
    }
    return 0;
  });
  writer.Write("classifier_model", "classifier.json",
               [&](std::ostream &o) { WriteClassifierModel(o, classifier.model()); });
  writer.Write("thresholds", "thresholds.json",
               [&](std::ostream &o) { WriteThresholds(o, classifier.model()); });

  // evaluation on the test split
  const AnnotationStore baseline_ann = LexicalAnnotate(baseline_gazetteer, split.test);
  writer.Write("baseline_annotations", "baseline_annotations.jsonl",
               [&](std::ostream &o) { WriteAnnotations(o, baseline_ann, *registry, &split.test); });
  Stage("evaluate", [&] {
    AnnotationStore reference, llm, predicted;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> probs;
    for (const auto &q : split.test) {
      if (gold) {
        auto it = gold->find(q.id);
        if (it == gold->end()) {
          throw Error(ErrorKind::kMissingAnnotation, "gold lacks test query " + q.id);
        }
        reference[q.id] = it->second;
      } else {
        reference[q.id] = annotations.at(q.id);
      }
      llm[q.id] = annotations.at(q.id);
      ids.push_back(q.id);
      probs.push_back(classifier.PredictProbs(q.text));
      Annotation a;
      for (EntityId e : ApplyThresholds(classifier.model(), probs.back())) {
        a.Set(e, Confidence::kHigh);
      }
      predicted[q.id] = std::move(a);
    }
    const FrequencyMap freq = Frequencies(split.test);
    const std::string ref_tag = gold ? "gold" : "annotator";
    EvalReport lexical = ComputeMetrics(reference, baseline_ann, *registry, freq);
    lexical.reference = ref_tag;
    lexical.candidate = "lexical";
    EvalReport model = ComputeMetrics(reference, predicted, *registry, freq);
    model.reference = ref_tag;
    model.candidate = "classifier";
    std::vector<EvalReport> reports = {lexical, model};
    if (gold) {
      EvalReport agreement = ComputeMetrics(reference, llm, *registry, freq);
      agreement.reference = ref_tag;
      agreement.candidate = "annotator";
      reports.push_back(agreement);
    }
    for (MatchMode mm : {MatchMode::kMatchPrecision, MatchMode::kMatchRecall}) {
      MatchedResult r =
          MatchedOperatingPoint(ids, probs, reference, lexical, mm, *registry, &freq);
      r.report.candidate = mm == MatchMode::kMatchPrecision ? "classifier@matching_precision"
                                                            : "classifier@matching_recall";
      reports.push_back(std::move(r.report));
    }
    writer.Write("eval_report", "eval_report.jsonl", [&](std::ostream &o) {
      for (const auto &r : reports) WriteReportJsonl(o, r);
      std::ostringstream gains;
      WriteGainJsonl(gains, RelativeGain(model, lexical));
      std::istringstream lines(gains.str());
      for (std::string line; std::getline(lines, line);) {
        json j = json::parse(line);
        j["report"] = "gain:classifier_vs_lexical";
        o << j.dump() << '\n';
      }
    });
    return 0;
  });

  Manifest manifest;
  manifest.config_digest = config_digest;
  manifest.artifacts = writer.artifacts();
  json arts = json::array();
  for (const auto &a : manifest.artifacts) {
    arts.push_back({{"name", a.name}, {"path", a.path}, {"sha256", a.sha256}});
  }
  json m = {{"format", "qintent-manifest"},
            {"config_digest", config_digest},
            {"inputs", input_digests},
            {"seeds",
             {{"pipeline", config.seed},
              {"split", config.seed},
              {"annotator", config.seed},
              {"router", config.router.seed},
              {"classifier", config.classifier.seed},
              {"encoder", config.encoder.seed}}},
            {"artifacts", arts}};
  manifest.json = m.dump(2) + "\n";
  {
    std::ofstream out(config.output_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    out << manifest.json;
  }
  if (stats) {
    stats->llm_requests = annotator.request_count();
    stats->cache_hits = annotator.cache_hits();
  }
  return manifest;
}

}  // namespace qintent
