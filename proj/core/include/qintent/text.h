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

#ifndef QINTENT_TEXT_H_
#define QINTENT_TEXT_H_

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace qintent {

// Strips leading and trailing ASCII whitespace.
std::string_view Trim(std::string_view s);

// Query normalization: trim, collapse internal whitespace runs to a single
// space, ASCII case-fold. Gazetteer phrases go through the same function.
std::string NormalizeText(std::string_view s);

// Splits normalized text on single spaces.
std::vector<std::string> Tokenize(std::string_view normalized);

std::string ToLower(std::string_view s);

std::vector<std::string> Split(std::string_view s, char sep);

std::string Join(const std::vector<std::string> &parts, std::string_view sep);

// Deterministic random source. Wraps mt19937_64 (whose output sequence is
// fixed by the standard) with portable bounded draws, so shuffles and
// samples are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }

  // Uniform integer in [0, bound). bound must be positive.
  uint64_t Below(uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform();

  // Uniform double in [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  bool Bernoulli(double p) { return Uniform() < p; }

  template <typename T>
  void Shuffle(std::vector<T> &items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = Below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qintent

#endif  // QINTENT_TEXT_H_
