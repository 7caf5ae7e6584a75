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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "qintent/digest.h"
#include "qintent/error.h"
#include "qintent/text.h"

namespace qintent {

using json = nlohmann::json;

QueryEmbedding EmbedQuery(const EncoderBackend &provider, std::string_view text) {
  try {
    return QueryEmbedding{provider.Encode(text), provider.tag()};
  } catch (const Error &e) {
    if (e.kind() != ErrorKind::kMissingVector) throw;
    throw Error(ErrorKind::kMissingEmbedding, e.what());
  }
}

void RouterModel::CheckShapes() const {
  const size_t p = persona_count();
  if (input_dim == 0 || hidden_dim == 0 || p == 0 || w1.size() != input_dim * hidden_dim ||
      b1.size() != hidden_dim || w2.size() != hidden_dim * p || b2.size() != p) {
    throw Error(ErrorKind::kShapeMismatch, "router tensors inconsistent with d/h/P");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorKind::kShapeMismatch, "dropout rate must be in [0, 1)");
  }
}

RouterModel MakeRouterModel(size_t input_dim, size_t hidden_dim,
                            std::vector<std::string> persona_ids,
                            std::string registry_hash, double dropout_rate) {
  RouterModel m;
  m.input_dim = input_dim;
  m.hidden_dim = hidden_dim;
  m.persona_ids = std::move(persona_ids);
  m.registry_hash = std::move(registry_hash);
  m.dropout_rate = dropout_rate;
  m.w1.assign(input_dim * hidden_dim, 0.0);
  m.b1.assign(hidden_dim, 0.0);
  m.w2.assign(hidden_dim * m.persona_ids.size(), 0.0);
  m.b2.assign(m.persona_ids.size(), 0.0);
  m.CheckShapes();
  return m;
}

std::string RouterTrainConfig::ToJson() const {
  return json{{"learning_rate", learning_rate}, {"epochs", epochs},
              {"batch_size", batch_size},       {"seed", seed},
              {"hidden_dim", hidden_dim},       {"dropout", dropout},
              {"beta1", beta1},                 {"beta2", beta2},
              {"epsilon", epsilon},             {"weight_decay", weight_decay},
              {"entity_weights", entity_weights}}
      .dump();
}

namespace {

struct ForwardState {
  std::vector<double> pre;     // W1^T e + b1
  std::vector<double> mask;    // dropout multiplier per hidden unit
  std::vector<double> hidden;  // ReLU(pre) * mask
  std::vector<double> relevance;
};

ForwardState Forward(const RouterModel &m, std::span<const double> e,
                     std::optional<uint64_t> dropout_seed) {
  const size_t d = m.input_dim;
  const size_t h = m.hidden_dim;
  const size_t p = m.persona_count();
  if (e.size() != d) {
    throw Error(ErrorKind::kShapeMismatch, "embedding has dimension " +
                                               std::to_string(e.size()) + ", router expects " +
                                               std::to_string(d));
  }
  ForwardState s;
  s.pre = m.b1;
  for (size_t i = 0; i < d; ++i) {
    const double x = e[i];
    if (x == 0.0) continue;
    const double *row = &m.w1[i * h];
    for (size_t j = 0; j < h; ++j) s.pre[j] += x * row[j];
  }
  s.mask.assign(h, 1.0);
  if (dropout_seed && m.dropout_rate > 0.0) {
    Rng rng(*dropout_seed);
    const double keep_scale = 1.0 / (1.0 - m.dropout_rate);
    for (size_t j = 0; j < h; ++j) {
      s.mask[j] = rng.Uniform() < m.dropout_rate ? 0.0 : keep_scale;
    }
  }
  s.hidden.resize(h);
  for (size_t j = 0; j < h; ++j) s.hidden[j] = std::max(s.pre[j], 0.0) * s.mask[j];
  std::vector<double> logits = m.b2;
  for (size_t j = 0; j < h; ++j) {
    const double a = s.hidden[j];
    if (a == 0.0) continue;
    const double *row = &m.w2[j * p];
    for (size_t q = 0; q < p; ++q) logits[q] += a * row[q];
  }
  s.relevance = Softmax(logits);
  return s;
}

void CheckMatrix(const RouterModel &m, const ConfidenceMatrix &matrix) {
  if (matrix.persona_ids() != m.persona_ids) {
    throw Error(ErrorKind::kShapeMismatch,
                "matrix persona rows differ from router persona order");
  }
  if (!m.registry_hash.empty() && matrix.registry_hash() != m.registry_hash) {
    throw Error(ErrorKind::kRegistryMismatch, "matrix registry hash differs from router");
  }
}

}  // namespace

std::vector<double> RouterForward(const RouterModel &model,
                                  const QueryEmbedding &embedding, bool train_mode,
                                  uint64_t seed) {
  model.CheckShapes();
  return Forward(model, embedding.vector,
                 train_mode ? std::optional<uint64_t>(seed) : std::nullopt)
      .relevance;
}

std::vector<double> PredictEntities(std::span<const double> relevance,
                                    const ConfidenceMatrix &matrix) {
  if (relevance.size() != matrix.rows()) {
    throw Error(ErrorKind::kShapeMismatch,
                std::to_string(relevance.size()) + " relevances for " +
                    std::to_string(matrix.rows()) + " personas");
  }
  std::vector<double> scores(matrix.cols(), 0.0);
  for (size_t p = 0; p < matrix.rows(); ++p) {
    const double r = relevance[p] / 3.0;
    if (r == 0.0) continue;
    for (size_t e = 0; e < matrix.cols(); ++e) scores[e] += r * matrix.at(p, e);
  }
  return scores;
}

RouterGradients RouterLossAndGradients(const RouterModel &model,
                                       std::span<const RouterExample> examples,
                                       std::span<const double> entity_weights,
                                       std::optional<uint64_t> dropout_seed) {
  model.CheckShapes();
  const size_t d = model.input_dim;
  const size_t h = model.hidden_dim;
  const size_t p = model.persona_count();
  RouterGradients g;
  g.w1.assign(d * h, 0.0);
  g.b1.assign(h, 0.0);
  g.w2.assign(h * p, 0.0);
  g.b2.assign(p, 0.0);
  if (examples.empty()) return g;
  const double inv_n = 1.0 / static_cast<double>(examples.size());

  std::vector<double> dr(p), dlogit(p), dhidden(h);
  for (size_t n = 0; n < examples.size(); ++n) {
    const RouterExample &ex = examples[n];
    CheckMatrix(model, ex.matrix);
    const size_t num_e = ex.matrix.cols();
    if (ex.gold.size() != num_e) {
      throw Error(ErrorKind::kShapeMismatch, "gold vector length differs from registry");
    }
    if (!entity_weights.empty() && entity_weights.size() != num_e) {
      throw Error(ErrorKind::kShapeMismatch, "entity weight length differs from registry");
    }
    double weight_total = 0.0;
    for (size_t e = 0; e < num_e; ++e) {
      weight_total += entity_weights.empty() ? 1.0 : entity_weights[e];
    }

    std::optional<uint64_t> mask_seed;
    if (dropout_seed) mask_seed = Mix64(*dropout_seed + n);
    ForwardState s = Forward(model, ex.embedding.vector, mask_seed);
    std::vector<double> scores = PredictEntities(s.relevance, ex.matrix);

    std::fill(dr.begin(), dr.end(), 0.0);
    for (size_t e = 0; e < num_e; ++e) {
      const double w = (entity_weights.empty() ? 1.0 : entity_weights[e]) / weight_total;
      const double y = ex.gold[e];
      const double sc = scores[e];
      g.loss += inv_n * w * ClampedBce(sc, y, kScoreClamp);
      if (sc <= kScoreClamp || sc >= 1.0 - kScoreClamp) continue;  // clamped: flat
      const double ds = inv_n * w * (sc - y) / (sc * (1.0 - sc));
      for (size_t q = 0; q < p; ++q) dr[q] += ds * ex.matrix.at(q, e) / 3.0;
    }
    double dot = 0.0;
    for (size_t q = 0; q < p; ++q) dot += s.relevance[q] * dr[q];
    for (size_t q = 0; q < p; ++q) dlogit[q] = s.relevance[q] * (dr[q] - dot);

    for (size_t q = 0; q < p; ++q) g.b2[q] += dlogit[q];
    for (size_t j = 0; j < h; ++j) {
      double acc = 0.0;
      const double *row = &model.w2[j * p];
      double *grow = &g.w2[j * p];
      for (size_t q = 0; q < p; ++q) {
        grow[q] += s.hidden[j] * dlogit[q];
        acc += row[q] * dlogit[q];
      }
      dhidden[j] = s.pre[j] > 0.0 ? acc * s.mask[j] : 0.0;
      g.b1[j] += dhidden[j];
    }
    const auto &e_vec = ex.embedding.vector;
    for (size_t i = 0; i < d; ++i) {
      const double x = e_vec[i];
      if (x == 0.0) continue;
      double *grow = &g.w1[i * h];
      for (size_t j = 0; j < h; ++j) grow[j] += x * dhidden[j];
    }
  }
  return g;
}

RouterTrainResult TrainRouter(const std::vector<RouterExample> &examples,
                              const RouterTrainConfig &config,
                              const EncoderDescriptor &embedding) {
  if (examples.empty()) throw Error(ErrorKind::kEmpty, "router training set is empty");
  if (!(config.learning_rate > 0.0)) throw Error(ErrorKind::kConfig, "learning_rate must be > 0");
  if (config.epochs < 1) throw Error(ErrorKind::kConfig, "epochs must be >= 1");
  if (config.batch_size < 1) throw Error(ErrorKind::kConfig, "batch_size must be >= 1");

  const RouterExample &first = examples.front();
  const size_t d = first.embedding.vector.size();
  for (const auto &ex : examples) {
    if (ex.embedding.vector.size() != d) {
      throw Error(ErrorKind::kShapeMismatch, "examples disagree on embedding dimension");
    }
    if (ex.matrix.persona_ids() != first.matrix.persona_ids() ||
        ex.matrix.registry_hash() != first.matrix.registry_hash()) {
      throw Error(ErrorKind::kShapeMismatch, "examples disagree on persona order or registry");
    }
  }

  RouterModel model = MakeRouterModel(d, config.hidden_dim, first.matrix.persona_ids(),
                                      first.matrix.registry_hash(), config.dropout);
  model.embedding = embedding;
  model.train_config_json = config.ToJson();
  const size_t p = model.persona_count();

  Rng init(config.seed);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
  for (double &w : model.w1) w = init.Uniform(-bound1, bound1);
  for (double &b : model.b1) b = init.Uniform(-bound1, bound1);
  for (double &w : model.w2) w = init.Uniform(-bound2, bound2);
  for (double &b : model.b2) b = init.Uniform(-bound2, bound2);

  AdamWConfig adam{config.learning_rate, config.beta1, config.beta2, config.epsilon,
                   config.weight_decay};
  AdamW opt_w1(adam, model.w1.size()), opt_b1(adam, model.b1.size());
  AdamW opt_w2(adam, model.w2.size()), opt_b2(adam, p);

  RouterTrainResult result;
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<RouterExample> batch;
  uint64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle(Mix64(config.seed ^ (0x9e37ULL + static_cast<uint64_t>(epoch))));
    shuffle.Shuffle(order);
    int batch_index = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (size_t k = start; k < end; ++k) batch.push_back(examples[order[k]]);
      RouterGradients g = RouterLossAndGradients(
          model, batch, config.entity_weights, Mix64(config.seed + 0x51ULL * ++step));
      if (!std::isfinite(g.loss)) {
        throw Error(ErrorKind::kNanLoss, "router loss is not finite at epoch " +
                                             std::to_string(epoch) + " batch " +
                                             std::to_string(batch_index));
      }
      result.history.push_back({epoch, batch_index++, g.loss});
      opt_w1.Step(model.w1, g.w1);
      opt_b1.Step(model.b1, g.b1);
      opt_w2.Step(model.w2, g.w2);
      opt_b2.Step(model.b2, g.b2);
    }
  }
  result.model = std::move(model);
  return result;
}

std::vector<size_t> TopKIndices(std::span<const double> relevance,
                                std::span<const std::string> ids, size_t k) {
  if (k < 1 || k > relevance.size()) {
    throw Error(ErrorKind::kOutOfRange, "k=" + std::to_string(k) + " with " +
                                            std::to_string(relevance.size()) + " personas");
  }
  std::vector<size_t> idx(relevance.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    if (relevance[a] != relevance[b]) return relevance[a] > relevance[b];
    return ids[a] < ids[b];
  });
  idx.resize(k);
  return idx;
}

std::vector<std::string> SelectTopK(const RouterModel &model,
                                    const QueryEmbedding &embedding, size_t k) {
  std::vector<double> relevance = RouterForward(model, embedding);
  std::vector<std::string> out;
  for (size_t i : TopKIndices(relevance, model.persona_ids, k)) {
    out.push_back(model.persona_ids[i]);
  }
  return out;
}

void WriteRouterModel(std::ostream &out, const RouterModel &m) {
  m.CheckShapes();
  json j = {
      {"format", "qintent-router"},
      {"version", 1},
      {"d", m.input_dim},
      {"h", m.hidden_dim},
      {"P", m.persona_count()},
      {"persona_ids", m.persona_ids},
      {"registry_hash", m.registry_hash},
      {"dropout_rate", m.dropout_rate},
      {"embedding",
       {{"kind", EncoderKindName(m.embedding.kind)},
        {"dim", m.embedding.dim},
        {"seed", m.embedding.seed},
        {"path", m.embedding.path}}},
      {"w1", m.w1},
      {"b1", m.b1},
      {"w2", m.w2},
      {"b2", m.b2},
      {"train_config",
       m.train_config_json.empty() ? json::object() : json::parse(m.train_config_json)},
  };
  out << j.dump() << '\n';
}

RouterModel ReadRouterModel(std::istream &in) {
  RouterModel m;
  try {
    json j = json::parse(in);
    if (j.at("format") != "qintent-router") {
      throw Error(ErrorKind::kParse, "not a router model file");
    }
    m.input_dim = j.at("d").get<size_t>();
    m.hidden_dim = j.at("h").get<size_t>();
    m.persona_ids = j.at("persona_ids").get<std::vector<std::string>>();
    m.registry_hash = j.at("registry_hash").get<std::string>();
    m.dropout_rate = j.at("dropout_rate").get<double>();
    const json &emb = j.at("embedding");
    m.embedding.kind = ParseEncoderKind(emb.at("kind").get<std::string>());
    m.embedding.dim = emb.at("dim").get<size_t>();
    m.embedding.seed = emb.at("seed").get<uint64_t>();
    m.embedding.path = emb.at("path").get<std::string>();
    m.w1 = j.at("w1").get<std::vector<double>>();
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    m.b2 = j.at("b2").get<std::vector<double>>();
    m.train_config_json = j.at("train_config").dump();
    if (j.at("P").get<size_t>() != m.persona_ids.size()) {
      throw Error(ErrorKind::kShapeMismatch, "P disagrees with persona_ids");
    }
  } catch (const json::exception &e) {
    throw Error(ErrorKind::kParse, std::string("router model: ") + e.what());
  }
  m.CheckShapes();
  return m;
}

void SaveRouterModel(const std::filesystem::path &path, const RouterModel &model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  WriteRouterModel(out, model);
}

RouterModel LoadRouterModel(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ReadRouterModel(in);
}

void WriteLossHistory(std::ostream &out, const std::vector<LossRecord> &history) {
  out << "epoch,batch,loss\n";
  char buf[64];
  for (const auto &r : history) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.loss);
    out << r.epoch << ',' << r.batch << ',' << buf << '\n';
  }
}

}  // namespace qintent
