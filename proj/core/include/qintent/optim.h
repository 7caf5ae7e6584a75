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
#ifndef QINTENT_OPTIM_H_
#define QINTENT_OPTIM_H_

#include <cstdint>
#include <span>
#include <vector>

namespace qintent {

double Sigmoid(double z);

// Binary cross-entropy of logit z against target y in {0,1}, in the
// log-sum-exp form max(z,0) - z*y + log1p(exp(-|z|)). Finite for every
// finite z.
double LogisticLoss(double z, double y);

// Numerically stable softmax (max-shifted).
std::vector<double> Softmax(std::span<const double> logits);

// Binary cross-entropy of a probability p against y, with p clamped to
// [eps, 1 - eps].
double ClampedBce(double p, double y, double eps);

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay, one instance per parameter tensor:
//   theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
class AdamW {
 public:
  AdamW(const AdamWConfig &config, size_t size);

  void Step(std::span<double> params, std::span<const double> grads);

  int64_t steps() const { return steps_; }

 private:
  AdamWConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  int64_t steps_ = 0;
};

}  // namespace qintent

#endif  // QINTENT_OPTIM_H_
