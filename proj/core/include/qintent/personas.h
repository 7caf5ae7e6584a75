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
#ifndef QINTENT_PERSONAS_H_
#define QINTENT_PERSONAS_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qintent/data.h"
#include "qintent/taxonomy.h"

namespace qintent {

enum class PersonaCategory { kExpert, kNonDomainExpert, kNicheExpert };

std::string_view PersonaCategoryName(PersonaCategory c);

struct Persona {
  std::string id;
  std::string name;
  PersonaCategory category = PersonaCategory::kExpert;
  std::string description;  // prompt preamble
};

// JSON Lines {"id":..., "name":..., "category":..., "description":...}.
// Category accepts "Expert", "NonDomainExpert", "NicheExpert".
std::vector<Persona> ReadPersonas(std::istream &in);
std::vector<Persona> LoadPersonas(const std::filesystem::path &path);

const Persona *FindPersona(const std::vector<Persona> &personas,
                           std::string_view id);

// Persona x Entity matrix for one query. Values are in {0,1,2,3}: 0 means
// the persona did not select the entity, 1-3 are Low/Medium/High.
class ConfidenceMatrix {
 public:
  ConfidenceMatrix() = default;
  ConfidenceMatrix(std::string query_id, std::vector<std::string> persona_ids,
                   std::string registry_hash, size_t entity_count);

  const std::string &query_id() const { return query_id_; }
  const std::vector<std::string> &persona_ids() const { return persona_ids_; }
  const std::string &registry_hash() const { return registry_hash_; }

  size_t rows() const { return persona_ids_.size(); }
  size_t cols() const { return cols_; }

  int at(size_t persona, size_t entity) const { return values_[persona * cols_ + entity]; }

  // Throws kOutOfRange for values outside {0,1,2,3}.
  void set(size_t persona, size_t entity, int value);

  std::span<const uint8_t> row(size_t persona) const {
    return {values_.data() + persona * cols_, cols_};
  }

  bool operator==(const ConfidenceMatrix &) const = default;

 private:
  std::string query_id_;
  std::vector<std::string> persona_ids_;
  std::string registry_hash_;
  size_t cols_ = 0;
  std::vector<uint8_t> values_;
};

// values[p][e] = 3/2/1 for High/Medium/Low, 0 when absent.
// Throws kMissingPersona when a persona has no annotation.
ConfidenceMatrix BuildConfidenceMatrix(
    const QueryRecord &query,
    const std::map<std::string, Annotation> &annotations,
    const std::vector<Persona> &personas, const EntityRegistry &registry);

// Matrix restricted to the given rows, in the given order.
ConfidenceMatrix SelectRows(const ConfidenceMatrix &matrix, std::span<const size_t> rows);

inline constexpr double kDefaultAggregationThreshold = 1.5;

// Weighted mean of each entity column; entity selected when the mean is at
// least threshold. Confidence back-mapping: >= 2.5 High, >= 1.5 Medium,
// otherwise Low. Weights default to uniform.
Annotation AggregateEnsemble(const ConfidenceMatrix &matrix,
                             std::optional<std::span<const double>> weights,
                             double threshold = kDefaultAggregationThreshold);

// Header "query_id,registry_hash,<entity ids...>" followed by one row per
// persona: "persona_id,<E integers>". Blocks are concatenated for many
// queries.
void WriteConfidenceMatrix(std::ostream &out, const ConfidenceMatrix &matrix,
                           const EntityRegistry &registry);
std::vector<ConfidenceMatrix> ReadConfidenceMatrices(
    std::istream &in, const EntityRegistry &registry);

}  // namespace qintent

#endif  // QINTENT_PERSONAS_H_
