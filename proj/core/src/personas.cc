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
#include "qintent/personas.h"

#include <fstream>
#include <set>

#include "json.hpp"
#include "qintent/error.h"
#include "qintent/text.h"

namespace qintent {

using json = nlohmann::json;

std::string_view PersonaCategoryName(PersonaCategory c) {
  switch (c) {
    case PersonaCategory::kExpert: return "Expert";
    case PersonaCategory::kNonDomainExpert: return "NonDomainExpert";
    case PersonaCategory::kNicheExpert: return "NicheExpert";
  }
  return "Expert";
}

namespace {

PersonaCategory ParseCategory(const std::string &s, int line_no) {
  if (s == "Expert") return PersonaCategory::kExpert;
  if (s == "NonDomainExpert") return PersonaCategory::kNonDomainExpert;
  if (s == "NicheExpert") return PersonaCategory::kNicheExpert;
  throw Error(ErrorKind::kParse, "persona line " + std::to_string(line_no) +
                                     ": unknown category '" + s + "'");
}

}  // namespace

std::vector<Persona> ReadPersonas(std::istream &in) {
  std::vector<Persona> personas;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    Persona p;
    std::string category;
    try {
      json j = json::parse(line);
      p.id = j.at("id").get<std::string>();
      p.name = j.at("name").get<std::string>();
      category = j.at("category").get<std::string>();
      p.description = j.at("description").get<std::string>();
    } catch (const json::exception &e) {
      throw Error(ErrorKind::kParse,
                  "persona line " + std::to_string(line_no) + ": " + e.what());
    }
    p.category = ParseCategory(category, line_no);
    if (p.id.empty()) throw Error(ErrorKind::kParse, "persona with empty id");
    if (Trim(p.description).empty()) {
      throw Error(ErrorKind::kParse, "persona " + p.id + " has empty description");
    }
    if (!seen.insert(p.id).second) throw Error(ErrorKind::kDuplicateId, p.id);
    personas.push_back(std::move(p));
  }
  if (personas.empty()) throw Error(ErrorKind::kEmpty, "persona repository is empty");
  return personas;
}

std::vector<Persona> LoadPersonas(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open personas " + path.string());
  return ReadPersonas(in);
}

const Persona *FindPersona(const std::vector<Persona> &personas,
                           std::string_view id) {
  for (const auto &p : personas) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

ConfidenceMatrix::ConfidenceMatrix(std::string query_id,
                                   std::vector<std::string> persona_ids,
                                   std::string registry_hash, size_t entity_count)
    : query_id_(std::move(query_id)),
      persona_ids_(std::move(persona_ids)),
      registry_hash_(std::move(registry_hash)),
      cols_(entity_count),
      values_(persona_ids_.size() * entity_count, 0) {}

void ConfidenceMatrix::set(size_t persona, size_t entity, int value) {
  if (value < 0 || value > 3) {
    throw Error(ErrorKind::kOutOfRange,
                "confidence value " + std::to_string(value) + " not in {0,1,2,3}");
  }
  if (persona >= rows() || entity >= cols_) {
    throw Error(ErrorKind::kShapeMismatch, "matrix index out of bounds");
  }
  values_[persona * cols_ + entity] = static_cast<uint8_t>(value);
}

ConfidenceMatrix BuildConfidenceMatrix(
    const QueryRecord &query,
    const std::map<std::string, Annotation> &annotations,
    const std::vector<Persona> &personas, const EntityRegistry &registry) {
  std::vector<std::string> ids;
  ids.reserve(personas.size());
  for (const auto &p : personas) ids.push_back(p.id);
  ConfidenceMatrix matrix(query.id, ids, registry.hash(), registry.size());
  for (size_t p = 0; p < personas.size(); ++p) {
    auto it = annotations.find(personas[p].id);
    if (it == annotations.end()) {
      throw Error(ErrorKind::kMissingPersona,
                  personas[p].id + " for query " + query.id);
    }
    for (const auto &[entity, confidence] : it->second.entries()) {
      matrix.set(p, static_cast<size_t>(entity.index()), ConfidenceValue(confidence));
    }
  }
  return matrix;
}

ConfidenceMatrix SelectRows(const ConfidenceMatrix &matrix, std::span<const size_t> rows) {
  std::vector<std::string> ids;
  for (size_t r : rows) {
    if (r >= matrix.rows()) throw Error(ErrorKind::kOutOfRange, "matrix row out of range");
    ids.push_back(matrix.persona_ids()[r]);
  }
  ConfidenceMatrix out(matrix.query_id(), std::move(ids), matrix.registry_hash(), matrix.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t e = 0; e < matrix.cols(); ++e) out.set(i, e, matrix.at(rows[i], e));
  }
  return out;
}

Annotation AggregateEnsemble(const ConfidenceMatrix &matrix,
                             std::optional<std::span<const double>> weights,
                             double threshold) {
  if (!(threshold > 0.0)) {
    throw Error(ErrorKind::kPrecondition, "aggregation threshold must be positive");
  }
  const size_t rows = matrix.rows();
  std::vector<double> w(rows, 1.0);
  if (weights) {
    if (weights->size() != rows) {
      throw Error(ErrorKind::kWeightLength,
                  std::to_string(weights->size()) + " weights for " +
                      std::to_string(rows) + " personas");
    }
    w.assign(weights->begin(), weights->end());
  }
  double total = 0.0;
  for (double x : w) {
    if (x < 0.0) throw Error(ErrorKind::kPrecondition, "negative persona weight");
    total += x;
  }
  if (!(total > 0.0)) throw Error(ErrorKind::kPrecondition, "persona weights sum to zero");

  Annotation out;
  for (size_t e = 0; e < matrix.cols(); ++e) {
    double acc = 0.0;
    for (size_t p = 0; p < rows; ++p) acc += w[p] * matrix.at(p, e);
    double score = acc / total;
    if (score < threshold) continue;
    Confidence c = score >= 2.5   ? Confidence::kHigh
                   : score >= 1.5 ? Confidence::kMedium
                                  : Confidence::kLow;
    out.Assign(EntityId(static_cast<int>(e)), c);
  }
  return out;
}

void WriteConfidenceMatrix(std::ostream &out, const ConfidenceMatrix &matrix,
                           const EntityRegistry &registry) {
  if (matrix.registry_hash() != registry.hash()) {
    throw Error(ErrorKind::kRegistryMismatch, "matrix for query " + matrix.query_id());
  }
  out << matrix.query_id() << ',' << matrix.registry_hash();
  for (const auto &e : registry.entities()) out << ',' << e.id;
  out << '\n';
  for (size_t p = 0; p < matrix.rows(); ++p) {
    out << matrix.persona_ids()[p];
    for (size_t e = 0; e < matrix.cols(); ++e) out << ',' << matrix.at(p, e);
    out << '\n';
  }
}

std::vector<ConfidenceMatrix> ReadConfidenceMatrices(
    std::istream &in, const EntityRegistry &registry) {
  const size_t cols = registry.size();
  std::vector<ConfidenceMatrix> out;
  struct Pending {
    std::string query_id;
    std::string hash;
    std::vector<std::string> personas;
    std::vector<std::vector<int>> rows;
  };
  std::optional<Pending> pending;
  auto flush = [&] {
    if (!pending) return;
    ConfidenceMatrix m(pending->query_id, pending->personas, pending->hash, cols);
    for (size_t p = 0; p < pending->rows.size(); ++p) {
      for (size_t e = 0; e < cols; ++e) m.set(p, e, pending->rows[p][e]);
    }
    out.push_back(std::move(m));
    pending.reset();
  };
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    std::vector<std::string> fields = Split(line, ',');
    for (auto &f : fields) f = std::string(Trim(f));
    if (fields.size() == cols + 2) {
      flush();
      if (fields[1] != registry.hash()) {
        throw Error(ErrorKind::kRegistryMismatch,
                    "matrix line " + std::to_string(line_no) + " has hash " + fields[1]);
      }
      for (size_t e = 0; e < cols; ++e) {
        if (fields[e + 2] != registry.entities()[e].id) {
          throw Error(ErrorKind::kRegistryMismatch,
                      "matrix column " + std::to_string(e) + " is " + fields[e + 2]);
        }
      }
      pending = Pending{fields[0], fields[1], {}, {}};
    } else if (fields.size() == cols + 1 && pending) {
      std::vector<int> row(cols);
      for (size_t e = 0; e < cols; ++e) {
        try {
          row[e] = std::stoi(fields[e + 1]);
        } catch (const std::exception &) {
          throw Error(ErrorKind::kParse, "matrix line " + std::to_string(line_no));
        }
      }
      pending->personas.push_back(fields[0]);
      pending->rows.push_back(std::move(row));
    } else {
      throw Error(ErrorKind::kParse, "matrix line " + std::to_string(line_no) +
                                         ": unexpected field count");
    }
  }
  flush();
  return out;
}

}  // namespace qintent
