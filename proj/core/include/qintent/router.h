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
#ifndef QINTENT_ROUTER_H_
#define QINTENT_ROUTER_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qintent/features.h"
#include "qintent/optim.h"
#include "qintent/personas.h"

namespace qintent {

struct QueryEmbedding {
  std::vector<double> vector;
  std::string provider;
};

// Throws kMissingEmbedding when a precomputed provider lacks the query.
QueryEmbedding EmbedQuery(const EncoderBackend &provider, std::string_view text);

// Persona-selection router: two linear layers with ReLU and dropout between
// them, softmax over personas.
//   hidden    = dropout(ReLU(W1^T e + b1))
//   relevance = softmax(W2^T hidden + b2)
// Weights are row-major: w1 is d x h, w2 is h x P.
struct RouterModel {
  size_t input_dim = 0;
  size_t hidden_dim = 0;
  std::vector<double> w1, b1, w2, b2;
  double dropout_rate = 0.0;
  std::vector<std::string> persona_ids;
  std::string registry_hash;
  EncoderDescriptor embedding;
  std::string train_config_json;  // echo of the training configuration

  size_t persona_count() const { return persona_ids.size(); }

  // Throws kShapeMismatch on inconsistent tensor sizes.
  void CheckShapes() const;
};

RouterModel MakeRouterModel(size_t input_dim, size_t hidden_dim,
                            std::vector<std::string> persona_ids,
                            std::string registry_hash, double dropout_rate);

struct RouterTrainConfig {
  double learning_rate = 1e-3;
  int epochs = 20;
  int batch_size = 32;
  uint64_t seed = 0;
  size_t hidden_dim = 64;
  double dropout = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  std::vector<double> entity_weights;  // empty means uniform

  std::string ToJson() const;
};

inline constexpr double kScoreClamp = 1e-7;

// Relevance per persona (length P). In train mode a dropout mask is drawn
// from the seed; otherwise the seed is ignored.
std::vector<double> RouterForward(const RouterModel &model,
                                  const QueryEmbedding &embedding,
                                  bool train_mode = false, uint64_t seed = 0);

// Entity scores = relevance^T (values / 3), each in [0,1].
std::vector<double> PredictEntities(std::span<const double> relevance,
                                    const ConfidenceMatrix &matrix);

struct RouterExample {
  QueryEmbedding embedding;
  ConfidenceMatrix matrix;
  std::vector<uint8_t> gold;  // indicator over registry entities
};

struct RouterGradients {
  double loss = 0.0;
  std::vector<double> w1, b1, w2, b2;
};

// Mean over examples of the (entity-weighted) mean binary cross-entropy
// between predicted entity scores and gold, with analytic gradients. When
// dropout_seed is set, example i uses mask seed Mix64(*dropout_seed + i).
RouterGradients RouterLossAndGradients(const RouterModel &model,
                                       std::span<const RouterExample> examples,
                                       std::span<const double> entity_weights,
                                       std::optional<uint64_t> dropout_seed);

struct LossRecord {
  int epoch = 0;
  int batch = 0;
  double loss = 0.0;
};

struct RouterTrainResult {
  RouterModel model;
  std::vector<LossRecord> history;
};

// Seeded fan-in uniform init, shuffled mini-batches, AdamW. Throws kEmpty
// for no examples and kNanLoss if the loss diverges.
RouterTrainResult TrainRouter(const std::vector<RouterExample> &examples,
                              const RouterTrainConfig &config,
                              const EncoderDescriptor &embedding = {});

// The k most relevant persona ids, by descending relevance; ties go to the
// lexicographically smaller id.
std::vector<std::string> SelectTopK(const RouterModel &model,
                                    const QueryEmbedding &embedding, size_t k);
std::vector<size_t> TopKIndices(std::span<const double> relevance,
                                std::span<const std::string> ids, size_t k);

void WriteRouterModel(std::ostream &out, const RouterModel &model);
RouterModel ReadRouterModel(std::istream &in);
void SaveRouterModel(const std::filesystem::path &path, const RouterModel &model);
RouterModel LoadRouterModel(const std::filesystem::path &path);

void WriteLossHistory(std::ostream &out, const std::vector<LossRecord> &history);

}  // namespace qintent

#endif  // QINTENT_ROUTER_H_
