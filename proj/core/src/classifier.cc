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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "qintent/digest.h"
#include "qintent/error.h"
#include "qintent/text.h"

namespace qintent {

using json = nlohmann::json;

std::vector<uint8_t> LabelIndicator(const Annotation &annotation, size_t entity_count,
                                    Confidence filter) {
  std::vector<uint8_t> out(entity_count, 0);
  for (const auto &[entity, confidence] : annotation.entries()) {
    if (static_cast<size_t>(entity.index()) >= entity_count) {
      throw Error(ErrorKind::kOutOfRange, "annotation entity outside registry");
    }
    if (confidence >= filter) out[entity.index()] = 1;
  }
  return out;
}

WeakLabelSet WeakLabelsFromAnnotations(const AnnotationStore &annotations,
                                       const std::vector<QueryRecord> &queries,
                                       const EntityRegistry &registry, Confidence filter,
                                       std::string provenance) {
  WeakLabelSet out;
  out.provenance = std::move(provenance);
  out.filter = filter;
  out.registry_hash = registry.hash();
  std::vector<std::string> missing;
  for (const auto &q : queries) {
    auto it = annotations.find(q.id);
    if (it == annotations.end()) {
      missing.push_back(q.id);
      continue;
    }
    out.items.push_back({q.id, q.text, LabelIndicator(it->second, registry.size(), filter)});
  }
  if (!missing.empty()) throw Error(ErrorKind::kMissingAnnotation, Join(missing, ", "));
  return out;
}

void WriteWeakLabels(std::ostream &out, const WeakLabelSet &labels,
                     const EntityRegistry &registry) {
  out << json{{"provenance", labels.provenance},
              {"filter", ConfidenceName(labels.filter)},
              {"registry_hash", labels.registry_hash}}
             .dump()
      << '\n';
  for (const auto &item : labels.items) {
    std::vector<std::string> names;
    for (size_t e = 0; e < item.labels.size(); ++e) {
      if (item.labels[e]) names.push_back(registry.entities()[e].id);
    }
    out << json{{"id", item.id}, {"text", item.text}, {"labels", names}}.dump() << '\n';
  }
}

WeakLabelSet ReadWeakLabels(std::istream &in, const EntityRegistry &registry) {
  WeakLabelSet out;
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      if (header) {
        out.provenance = j.at("provenance").get<std::string>();
        auto filter = ParseConfidence(j.at("filter").get<std::string>());
        if (!filter) throw Error(ErrorKind::kParse, "bad confidence filter");
        out.filter = *filter;
        out.registry_hash = j.at("registry_hash").get<std::string>();
        if (out.registry_hash != registry.hash()) {
          throw Error(ErrorKind::kRegistryMismatch, "weak labels registry hash");
        }
        header = false;
        continue;
      }
      LabeledQuery item;
      item.id = j.at("id").get<std::string>();
      item.text = j.at("text").get<std::string>();
      item.labels.assign(registry.size(), 0);
      for (const auto &name : j.at("labels")) {
        EntityId e = registry.ValidateLabel(name.get<std::string>());
        if (!e.is_none()) item.labels[e.index()] = 1;
      }
      out.items.push_back(std::move(item));
    } catch (const json::exception &e) {
      throw Error(ErrorKind::kParse,
                  "weak label line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void ClassifierModel::CheckShapes() const {
  const size_t e = entity_count();
  const size_t d = input_dim;
  const size_t m = head_hidden;
  if (e == 0 || d == 0 || m == 0 || u1.size() != e * d * m || c1.size() != e * m ||
      u2.size() != e * m || c2.size() != e || thresholds.size() != e) {
    throw Error(ErrorKind::kShapeMismatch, "classifier tensors inconsistent with D/m/E");
  }
  for (double t : thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw Error(ErrorKind::kOutOfRange, "threshold outside [0, 1]");
    }
  }
}

std::string ClassifierTrainConfig::ToJson() const {
  return json{{"learning_rate", learning_rate}, {"epochs", epochs},
              {"batch_size", batch_size},       {"seed", seed},
              {"head_hidden", head_hidden},     {"patience", patience},
              {"beta1", beta1},                 {"beta2", beta2},
              {"epsilon", epsilon},             {"weight_decay", weight_decay},
              {"dev_threshold", dev_threshold}}
      .dump();
}

ClassifierModel InitClassifier(const EncoderBackend &encoder,
                               const EntityRegistry &registry,
                               const ClassifierTrainConfig &config) {
  ClassifierModel m;
  m.encoder = encoder.descriptor();
  m.input_dim = encoder.dim();
  m.head_hidden = config.head_hidden;
  m.entity_ids = registry.Ids();
  m.registry_hash = registry.hash();
  m.train_config_json = config.ToJson();
  const size_t e = m.entity_count();
  const size_t d = m.input_dim;
  const size_t h = m.head_hidden;
  if (h == 0) throw Error(ErrorKind::kConfig, "head_hidden must be positive");
  m.u1.resize(e * d * h);
  m.c1.resize(e * h);
  m.u2.resize(e * h);
  m.c2.resize(e);
  m.thresholds.assign(e, config.dev_threshold);
  Rng rng(config.seed);
  const double b1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (double &w : m.u1) w = rng.Uniform(-b1, b1);
  for (double &w : m.c1) w = rng.Uniform(-b1, b1);
  for (double &w : m.u2) w = rng.Uniform(-b2, b2);
  for (double &w : m.c2) w = rng.Uniform(-b2, b2);
  m.CheckShapes();
  return m;
}

namespace {

// Hidden pre-activations of head e for sparse features.
void HeadPre(const ClassifierModel &m, size_t e, const SparseVector &x,
             std::vector<double> &pre) {
  const size_t d = m.input_dim;
  const size_t h = m.head_hidden;
  pre.assign(m.c1.begin() + e * h, m.c1.begin() + (e + 1) * h);
  const double *block = &m.u1[e * d * h];
  for (size_t k = 0; k < x.index.size(); ++k) {
    const double v = x.value[k];
    const double *row = block + static_cast<size_t>(x.index[k]) * h;
    for (size_t j = 0; j < h; ++j) pre[j] += v * row[j];
  }
}

double HeadLogit(const ClassifierModel &m, size_t e, const std::vector<double> &pre) {
  const size_t h = m.head_hidden;
  double z = m.c2[e];
  const double *u2 = &m.u2[e * h];
  for (size_t j = 0; j < h; ++j) z += u2[j] * std::max(pre[j], 0.0);
  return z;
}

void CheckFeatures(const ClassifierModel &m, const SparseVector &x) {
  if (!x.index.empty() && x.index.back() >= m.input_dim) {
    throw Error(ErrorKind::kShapeMismatch, "feature index beyond encoder dimension");
  }
}

double MicroF1(const ClassifierModel &m, const std::vector<SparseVector> &features,
               const std::vector<std::vector<uint8_t>> &labels) {
  double tp = 0, fp = 0, fn = 0;
  for (size_t n = 0; n < features.size(); ++n) {
    std::vector<double> z = ClassifierLogits(m, features[n]);
    for (size_t e = 0; e < z.size(); ++e) {
      const bool pred = Sigmoid(z[e]) >= m.thresholds[e];
      const bool gold = labels[n][e] != 0;
      tp += pred && gold;
      fp += pred && !gold;
      fn += !pred && gold;
    }
  }
  const double denom = 2 * tp + fp + fn;
  return denom > 0 ? 2 * tp / denom : 0.0;
}

}  // namespace

std::vector<double> ClassifierLogits(const ClassifierModel &model,
                                     const SparseVector &features) {
  CheckFeatures(model, features);
  std::vector<double> z(model.entity_count());
  std::vector<double> pre;
  for (size_t e = 0; e < z.size(); ++e) {
    HeadPre(model, e, features, pre);
    z[e] = HeadLogit(model, e, pre);
  }
  return z;
}

ClassifierGradients ClassifierLossAndGradients(
    const ClassifierModel &model, std::span<const SparseVector> features,
    std::span<const std::vector<uint8_t>> labels) {
  if (features.size() != labels.size()) {
    throw Error(ErrorKind::kShapeMismatch, "features and labels differ in length");
  }
  const size_t num_e = model.entity_count();
  const size_t d = model.input_dim;
  const size_t h = model.head_hidden;
  ClassifierGradients g;
  g.u1.assign(model.u1.size(), 0.0);
  g.c1.assign(model.c1.size(), 0.0);
  g.u2.assign(model.u2.size(), 0.0);
  g.c2.assign(model.c2.size(), 0.0);
  if (features.empty()) return g;
  const double scale = 1.0 / static_cast<double>(features.size() * num_e);

  std::vector<double> pre;
  for (size_t n = 0; n < features.size(); ++n) {
    const SparseVector &x = features[n];
    CheckFeatures(model, x);
    if (labels[n].size() != num_e) {
      throw Error(ErrorKind::kShapeMismatch, "label vector length differs from registry");
    }
    for (size_t e = 0; e < num_e; ++e) {
      HeadPre(model, e, x, pre);
      const double z = HeadLogit(model, e, pre);
      const double y = labels[n][e];
      g.loss += scale * LogisticLoss(z, y);
      const double dz = scale * (Sigmoid(z) - y);
      g.c2[e] += dz;
      const double *u2 = &model.u2[e * h];
      double *gu2 = &g.u2[e * h];
      double *gc1 = &g.c1[e * h];
      double *gblock = &g.u1[e * d * h];
      for (size_t j = 0; j < h; ++j) {
        if (pre[j] <= 0.0) continue;
        gu2[j] += dz * pre[j];
        const double da = dz * u2[j];
        gc1[j] += da;
        for (size_t k = 0; k < x.index.size(); ++k) {
          gblock[static_cast<size_t>(x.index[k]) * h + j] += da * x.value[k];
        }
      }
    }
  }
  return g;
}

ClassifierTrainResult TrainClassifier(const WeakLabelSet &train, const WeakLabelSet &dev,
                                      const EncoderBackend &encoder,
                                      const EntityRegistry &registry,
                                      const ClassifierTrainConfig &config) {
  if (train.items.empty()) throw Error(ErrorKind::kEmpty, "classifier train set is empty");
  if (config.epochs < 1 || config.batch_size < 1) {
    throw Error(ErrorKind::kConfig, "epochs and batch_size must be >= 1");
  }
  if (!(config.learning_rate >= 0.0)) throw Error(ErrorKind::kConfig, "negative learning rate");
  for (const WeakLabelSet *set : {&train, &dev}) {
    if (!set->registry_hash.empty() && set->registry_hash != registry.hash()) {
      throw Error(ErrorKind::kRegistryMismatch, "label set registry differs");
    }
  }

  auto encode_all = [&](const WeakLabelSet &set, std::vector<SparseVector> &features,
                        std::vector<std::vector<uint8_t>> &labels) {
    for (const auto &item : set.items) {
      if (item.labels.size() != registry.size()) {
        throw Error(ErrorKind::kShapeMismatch, "labels do not cover the registry");
      }
      features.push_back(ToSparse(encoder.Encode(item.text)));
      labels.push_back(item.labels);
    }
  };
  std::vector<SparseVector> train_x, dev_x;
  std::vector<std::vector<uint8_t>> train_y, dev_y;
  encode_all(train, train_x, train_y);
  encode_all(dev, dev_x, dev_y);

  ClassifierModel model = InitClassifier(encoder, registry, config);
  AdamWConfig adam{config.learning_rate, config.beta1, config.beta2, config.epsilon,
                   config.weight_decay};
  AdamW opt_u1(adam, model.u1.size()), opt_c1(adam, model.c1.size());
  AdamW opt_u2(adam, model.u2.size()), opt_c2(adam, model.c2.size());

  ClassifierTrainResult result;
  ClassifierModel best = model;
  double best_f1 = -1.0;
  int since_best = 0;
  std::vector<size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<SparseVector> bx;
  std::vector<std::vector<uint8_t>> by;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle(Mix64(config.seed ^ (0xc1a5ULL + static_cast<uint64_t>(epoch))));
    shuffle.Shuffle(order);
    double epoch_loss = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      bx.clear();
      by.clear();
      for (size_t k = start; k < end; ++k) {
        bx.push_back(train_x[order[k]]);
        by.push_back(train_y[order[k]]);
      }
      ClassifierGradients g = ClassifierLossAndGradients(model, bx, by);
      if (!std::isfinite(g.loss)) {
        throw Error(ErrorKind::kNanLoss,
                    "classifier loss is not finite at epoch " + std::to_string(epoch));
      }
      epoch_loss += g.loss * static_cast<double>(end - start);
      seen += end - start;
      opt_u1.Step(model.u1, g.u1);
      opt_c1.Step(model.c1, g.c1);
      opt_u2.Step(model.u2, g.u2);
      opt_c2.Step(model.c2, g.c2);
    }
    EpochMetrics metrics{epoch, epoch_loss / static_cast<double>(seen), 0.0};
    if (!dev_x.empty()) {
      metrics.dev_micro_f1 = MicroF1(model, dev_x, dev_y);
      if (metrics.dev_micro_f1 > best_f1) {
        best_f1 = metrics.dev_micro_f1;
        best = model;
        result.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }
    } else {
      best = model;
      result.best_epoch = epoch;
    }
    result.history.push_back(metrics);
    if (!dev_x.empty() && config.patience > 0 && since_best >= config.patience) break;
  }
  result.model = std::move(best);
  return result;
}

EntityClassifier::EntityClassifier(ClassifierModel model, const EntityRegistry &registry)
    : EntityClassifier(model, EncoderBackend::FromDescriptor(model.encoder), registry) {}

EntityClassifier::EntityClassifier(ClassifierModel model, EncoderBackend encoder,
                                   const EntityRegistry &registry)
    : model_(std::move(model)), encoder_(std::move(encoder)) {
  model_.CheckShapes();
  if (model_.registry_hash != registry.hash()) {
    throw Error(ErrorKind::kRegistryMismatch,
                "model registry " + model_.registry_hash + " vs " + registry.hash());
  }
  if (encoder_.dim() != model_.input_dim) {
    throw Error(ErrorKind::kShapeMismatch, "encoder dimension differs from model");
  }
}

std::vector<double> EntityClassifier::PredictProbs(std::string_view query) const {
  std::vector<double> z = ClassifierLogits(model_, ToSparse(encoder_.Encode(query)));
  for (double &v : z) v = Sigmoid(v);
  return z;
}

std::vector<EntityId> ApplyThresholds(std::span<const double> thresholds,
                                      std::span<const double> probs) {
  if (thresholds.size() != probs.size()) {
    throw Error(ErrorKind::kShapeMismatch, "threshold and probability counts differ");
  }
  std::vector<EntityId> out;
  for (size_t e = 0; e < probs.size(); ++e) {
    if (probs[e] >= thresholds[e]) out.emplace_back(static_cast<int>(e));
  }
  return out;
}

ThresholdChoice TuneColumn(std::span<const double> probs, std::span<const uint8_t> labels,
                           std::span<const double> weights, TuneKind kind, double target) {
  if (probs.size() != labels.size() || (!weights.empty() && weights.size() != probs.size())) {
    throw Error(ErrorKind::kShapeMismatch, "tuning inputs differ in length");
  }
  constexpr double kTol = 1e-12;
  const size_t n = probs.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return probs[a] > probs[b]; });
  auto weight = [&](size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double positives = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (labels[i]) positives += weight(i);
  }

  // Candidates in descending order: 1, the distinct probabilities, 0.
  std::vector<double> candidates = {1.0};
  for (size_t i : order) {
    if (probs[i] < candidates.back()) candidates.push_back(probs[i]);
  }
  if (candidates.back() > 0.0) candidates.push_back(0.0);

  ThresholdChoice chosen;
  bool found = false;
  ThresholdChoice closest;
  bool have_closest = false;
  double tp = 0.0, fp = 0.0;
  size_t cursor = 0;
  for (double t : candidates) {
    while (cursor < n && probs[order[cursor]] >= t) {
      const size_t i = order[cursor++];
      (labels[i] ? tp : fp) += weight(i);
    }
    ThresholdChoice c;
    c.threshold = t;
    c.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    c.recall = positives > 0 ? tp / positives : 0.0;
    c.f1 = c.precision + c.recall > 0
               ? 2 * c.precision * c.recall / (c.precision + c.recall)
               : 0.0;
    switch (kind) {
      case TuneKind::kMaxF1:
        if (!found || c.f1 > chosen.f1) {
          chosen = c;
          found = true;
        }
        break;
      case TuneKind::kMatchRecall:
        if (!found && c.recall >= target - kTol) {
          chosen = c;
          found = true;
        }
        if (!have_closest || c.recall > closest.recall) {
          closest = c;
          have_closest = true;
        }
        break;
      case TuneKind::kMatchPrecision:
        if (c.precision >= target - kTol) {
          chosen = c;  // keeps the smallest qualifying threshold
          found = true;
        }
        if (!have_closest || c.precision > closest.precision) {
          closest = c;
          have_closest = true;
        }
        break;
    }
  }
  if (!found) {
    closest.attainable = false;
    return closest;
  }
  return chosen;
}

std::vector<ThresholdChoice> TuneThresholds(const std::vector<std::vector<double>> &probs,
                                            const std::vector<std::vector<uint8_t>> &labels,
                                            std::span<const double> weights,
                                            const TuneMode &mode) {
  if (probs.empty()) throw Error(ErrorKind::kEmpty, "no rows to tune thresholds on");
  if (labels.size() != probs.size()) {
    throw Error(ErrorKind::kShapeMismatch, "probability and label rows differ");
  }
  const size_t num_e = probs.front().size();
  if (mode.kind != TuneKind::kMaxF1 && mode.targets.size() != num_e) {
    throw Error(ErrorKind::kShapeMismatch, "need one target per entity");
  }
  std::vector<ThresholdChoice> out;
  std::vector<double> col(probs.size());
  std::vector<uint8_t> lab(probs.size());
  for (size_t e = 0; e < num_e; ++e) {
    for (size_t n = 0; n < probs.size(); ++n) {
      if (probs[n].size() != num_e || labels[n].size() != num_e) {
        throw Error(ErrorKind::kShapeMismatch, "ragged probability table");
      }
      col[n] = probs[n][e];
      lab[n] = labels[n][e];
    }
    const double target = mode.kind == TuneKind::kMaxF1 ? 0.0 : mode.targets[e];
    out.push_back(TuneColumn(col, lab, weights, mode.kind, target));
  }
  return out;
}

std::vector<ThresholdChoice> TuneThresholds(const EntityClassifier &classifier,
                                            const WeakLabelSet &dev,
                                            const TuneMode &mode) {
  if (dev.items.empty()) throw Error(ErrorKind::kEmpty, "dev set is empty");
  std::vector<std::vector<double>> probs;
  std::vector<std::vector<uint8_t>> labels;
  for (const auto &item : dev.items) {
    probs.push_back(classifier.PredictProbs(item.text));
    labels.push_back(item.labels);
  }
  return TuneThresholds(probs, labels, {}, mode);
}

void WriteClassifierModel(std::ostream &out, const ClassifierModel &m) {
  m.CheckShapes();
  json j = {
      {"format", "qintent-classifier"},
      {"version", 1},
      {"encoder",
       {{"kind", EncoderKindName(m.encoder.kind)},
        {"dim", m.encoder.dim},
        {"seed", m.encoder.seed},
        {"path", m.encoder.path}}},
      {"D", m.input_dim},
      {"m", m.head_hidden},
      {"entity_ids", m.entity_ids},
      {"registry_hash", m.registry_hash},
      {"u1", m.u1},
      {"c1", m.c1},
      {"u2", m.u2},
      {"c2", m.c2},
      {"thresholds", m.thresholds},
      {"train_config",
       m.train_config_json.empty() ? json::object() : json::parse(m.train_config_json)},
  };
  out << j.dump() << '\n';
}

ClassifierModel ReadClassifierModel(std::istream &in) {
  ClassifierModel m;
  try {
    json j = json::parse(in);
    if (j.at("format") != "qintent-classifier") {
      throw Error(ErrorKind::kParse, "not a classifier model file");
    }
    const json &enc = j.at("encoder");
    m.encoder.kind = ParseEncoderKind(enc.at("kind").get<std::string>());
    m.encoder.dim = enc.at("dim").get<size_t>();
    m.encoder.seed = enc.at("seed").get<uint64_t>();
    m.encoder.path = enc.at("path").get<std::string>();
    m.input_dim = j.at("D").get<size_t>();
    m.head_hidden = j.at("m").get<size_t>();
    m.entity_ids = j.at("entity_ids").get<std::vector<std::string>>();
    m.registry_hash = j.at("registry_hash").get<std::string>();
    m.u1 = j.at("u1").get<std::vector<double>>();
    m.c1 = j.at("c1").get<std::vector<double>>();
    m.u2 = j.at("u2").get<std::vector<double>>();
    m.c2 = j.at("c2").get<std::vector<double>>();
    m.thresholds = j.at("thresholds").get<std::vector<double>>();
    m.train_config_json = j.at("train_config").dump();
  } catch (const json::exception &e) {
    throw Error(ErrorKind::kParse, std::string("classifier model: ") + e.what());
  }
  m.CheckShapes();
  return m;
}

void SaveClassifierModel(const std::filesystem::path &path, const ClassifierModel &model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  WriteClassifierModel(out, model);
}

ClassifierModel LoadClassifierModel(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ReadClassifierModel(in);
}

void WriteThresholds(std::ostream &out, const ClassifierModel &model) {
  json t = json::object();
  for (size_t e = 0; e < model.entity_count(); ++e) {
    t[model.entity_ids[e]] = model.thresholds[e];
  }
  // nlohmann::json objects are key-sorted, so output order is stable.
  out << json{{"registry_hash", model.registry_hash}, {"thresholds", t}}.dump() << '\n';
}

void ReadThresholdsInto(std::istream &in, ClassifierModel &model) {
  try {
    json j = json::parse(in);
    if (j.at("registry_hash").get<std::string>() != model.registry_hash) {
      throw Error(ErrorKind::kRegistryMismatch, "thresholds file registry hash");
    }
    const json &t = j.at("thresholds");
    std::vector<double> thresholds(model.entity_count());
    for (size_t e = 0; e < model.entity_count(); ++e) {
      thresholds[e] = t.at(model.entity_ids[e]).get<double>();
    }
    model.thresholds = std::move(thresholds);
  } catch (const json::exception &e) {
    throw Error(ErrorKind::kParse, std::string("thresholds: ") + e.what());
  }
  model.CheckShapes();
}

}  // namespace qintent
