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
#ifndef QINTENT_CLASSIFIER_H_
#define QINTENT_CLASSIFIER_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qintent/data.h"
#include "qintent/features.h"
#include "qintent/optim.h"
#include "qintent/taxonomy.h"

namespace qintent {

struct LabeledQuery {
  std::string id;
  std::string text;
  std::vector<uint8_t> labels;  // indicator over registry entities
};

// Hard labels distilled from one annotator's output.
struct WeakLabelSet {
  std::vector<LabeledQuery> items;
  std::string provenance;
  Confidence filter = Confidence::kHigh;
  std::string registry_hash;
};

// Indicator is 1 iff the annotated confidence is at least the filter level.
std::vector<uint8_t> LabelIndicator(const Annotation &annotation, size_t entity_count,
                                    Confidence filter);

// One item per query, in query order. Throws kMissingAnnotation listing
// queries without an annotation.
WeakLabelSet WeakLabelsFromAnnotations(const AnnotationStore &annotations,
                                       const std::vector<QueryRecord> &queries,
                                       const EntityRegistry &registry,
                                       Confidence filter = Confidence::kHigh,
                                       std::string provenance = "");

void WriteWeakLabels(std::ostream &out, const WeakLabelSet &labels,
                     const EntityRegistry &registry);
WeakLabelSet ReadWeakLabels(std::istream &in, const EntityRegistry &registry);

// Per-entity heads over a shared encoder:
//   a_e = ReLU(U1_e^T x + c1_e),  z_e = U2_e . a_e + c2_e,  p_e = sigmoid(z_e)
// Head e's U1 block is D x m row-major starting at e * D * m.
struct ClassifierModel {
  EncoderDescriptor encoder;
  size_t input_dim = 0;
  size_t head_hidden = 0;
  std::vector<std::string> entity_ids;
  std::string registry_hash;
  std::vector<double> u1, c1, u2, c2;
  std::vector<double> thresholds;
  std::string train_config_json;

  size_t entity_count() const { return entity_ids.size(); }
  void CheckShapes() const;
};

struct ClassifierTrainConfig {
  double learning_rate = 1e-3;
  int epochs = 30;
  int batch_size = 32;
  uint64_t seed = 0;
  size_t head_hidden = 32;
  int patience = 5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  double dev_threshold = 0.5;

  std::string ToJson() const;
};

// Seeded fan-in uniform initialization; thresholds start at dev_threshold.
ClassifierModel InitClassifier(const EncoderBackend &encoder,
                               const EntityRegistry &registry,
                               const ClassifierTrainConfig &config);

// Logits for already-encoded features.
std::vector<double> ClassifierLogits(const ClassifierModel &model,
                                     const SparseVector &features);

struct ClassifierGradients {
  double loss = 0.0;
  std::vector<double> u1, c1, u2, c2;
};

// Mean logistic loss over (query, entity) pairs and its gradients.
ClassifierGradients ClassifierLossAndGradients(
    const ClassifierModel &model, std::span<const SparseVector> features,
    std::span<const std::vector<uint8_t>> labels);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_micro_f1 = 0.0;
};

struct ClassifierTrainResult {
  ClassifierModel model;
  std::vector<EpochMetrics> history;
  int best_epoch = 0;
};

// Mini-batch AdamW on the logistic loss. Keeps the checkpoint with the best
// dev micro-F1 and stops after patience epochs without improvement.
// Throws kEmpty for an empty train set, kNanLoss on divergence.
ClassifierTrainResult TrainClassifier(const WeakLabelSet &train, const WeakLabelSet &dev,
                                      const EncoderBackend &encoder,
                                      const EntityRegistry &registry,
                                      const ClassifierTrainConfig &config);

// A model bound to its encoder and checked against a registry.
class EntityClassifier {
 public:
  // Throws kRegistryMismatch when the model was trained on another registry.
  EntityClassifier(ClassifierModel model, const EntityRegistry &registry);
  EntityClassifier(ClassifierModel model, EncoderBackend encoder,
                   const EntityRegistry &registry);

  std::vector<double> PredictProbs(std::string_view query) const;

  const ClassifierModel &model() const { return model_; }
  ClassifierModel &mutable_model() { return model_; }
  const EncoderBackend &encoder() const { return encoder_; }

 private:
  ClassifierModel model_;
  EncoderBackend encoder_;
};

// Sigmoid of each head's logit.
inline std::vector<double> PredictProbs(const EntityClassifier &classifier,
                                        std::string_view query) {
  return classifier.PredictProbs(query);
}

// Entity selected iff prob >= threshold.
std::vector<EntityId> ApplyThresholds(std::span<const double> thresholds,
                                      std::span<const double> probs);
inline std::vector<EntityId> ApplyThresholds(const ClassifierModel &model,
                                             std::span<const double> probs) {
  return ApplyThresholds(model.thresholds, probs);
}

enum class TuneKind { kMaxF1, kMatchRecall, kMatchPrecision };

struct TuneMode {
  TuneKind kind = TuneKind::kMaxF1;
  std::vector<double> targets;  // per entity; unused for kMaxF1
};

// Chosen operating point for one entity. attainable is false when no
// candidate meets the target; the threshold is then the closest point.
struct ThresholdChoice {
  double threshold = 0.5;
  bool attainable = true;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Candidate thresholds: the distinct probabilities plus 0 and 1. MaxF1
// takes the best F1 (ties: larger threshold); MatchRecall the largest
// threshold with recall >= target; MatchPrecision the smallest threshold
// with precision >= target. Precision with no predictions and recall with
// no positives are 0. weights may be empty (all 1).
ThresholdChoice TuneColumn(std::span<const double> probs, std::span<const uint8_t> labels,
                           std::span<const double> weights, TuneKind kind,
                           double target = 0.0);

// probs and labels are N x E, row per query.
std::vector<ThresholdChoice> TuneThresholds(const std::vector<std::vector<double>> &probs,
                                            const std::vector<std::vector<uint8_t>> &labels,
                                            std::span<const double> weights,
                                            const TuneMode &mode);

// Scores the dev set with the classifier, then tunes per entity. Throws
// kEmpty for an empty dev set.
std::vector<ThresholdChoice> TuneThresholds(const EntityClassifier &classifier,
                                            const WeakLabelSet &dev,
                                            const TuneMode &mode);

void WriteClassifierModel(std::ostream &out, const ClassifierModel &model);
ClassifierModel ReadClassifierModel(std::istream &in);
void SaveClassifierModel(const std::filesystem::path &path, const ClassifierModel &model);
ClassifierModel LoadClassifierModel(const std::filesystem::path &path);

// {"registry_hash": ..., "thresholds": {"Entity": t, ...}}
void WriteThresholds(std::ostream &out, const ClassifierModel &model);
// Replaces the model's thresholds; throws kRegistryMismatch on hash mismatch.
void ReadThresholdsInto(std::istream &in, ClassifierModel &model);

}  // namespace qintent

#endif  // QINTENT_CLASSIFIER_H_
