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
#ifndef QINTENT_TAXONOMY_H_
#define QINTENT_TAXONOMY_H_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qintent {

// Column index of an entity in a registry. The "None" label is the
// sentinel, which is never a column: it denotes the empty label set.
class EntityId {
 public:
  constexpr EntityId() = default;
  constexpr explicit EntityId(int index) : index_(index) {}

  static constexpr EntityId None() { return EntityId(); }

  constexpr bool is_none() const { return index_ < 0; }
  constexpr int index() const { return index_; }

  constexpr auto operator<=>(const EntityId &) const = default;

 private:
  int index_ = -1;
};

inline constexpr std::string_view kNoneLabel = "None";

// Confidence levels requested from annotators. The numeric values are the
// confidence-matrix encoding; 0 is reserved for "not selected".
enum class Confidence : uint8_t { kLow = 1, kMedium = 2, kHigh = 3 };

std::string_view ConfidenceName(Confidence c);

// Case-insensitive parse of "low" / "medium" / "high".
std::optional<Confidence> ParseConfidence(std::string_view token);

// Maps a matrix value in {1,2,3} back to a level; 0 or out of range is empty.
std::optional<Confidence> ConfidenceFromValue(int value);

inline int ConfidenceValue(Confidence c) { return static_cast<int>(c); }

// One annotator's view of a query: selected entities with confidences.
// An empty annotation is the "None" label.
class Annotation {
 public:
  // Inserts or raises the confidence of an entity; duplicates keep the max.
  void Set(EntityId id, Confidence c);

  // Overwrites the confidence of an entity.
  void Assign(EntityId id, Confidence c) { entries_[id] = c; }

  void Erase(EntityId id) { entries_.erase(id); }

  std::optional<Confidence> Get(EntityId id) const;
  bool Contains(EntityId id) const { return entries_.count(id) > 0; }
  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }

  // Entities ordered by registry column.
  const std::map<EntityId, Confidence> &entries() const { return entries_; }

  std::vector<EntityId> Labels() const;

  bool operator==(const Annotation &) const = default;

 private:
  std::map<EntityId, Confidence> entries_;
};

// Query id -> annotation, for one annotator.
using AnnotationStore = std::map<std::string, Annotation>;

struct EntityDef {
  std::string id;
  std::string definition;
  std::vector<std::string> icl_examples;
};

// Closed, ordered entity universe. Order defines the column order of every
// confidence matrix and classifier output. Immutable after construction.
class EntityRegistry {
 public:
  EntityRegistry() = default;

  // Validates ids (non-empty, no whitespace, unique, not "None") and
  // definitions (non-empty).
  explicit EntityRegistry(std::vector<EntityDef> entities);

  size_t size() const { return entities_.size(); }
  const std::vector<EntityDef> &entities() const { return entities_; }
  const EntityDef &at(EntityId id) const;
  const std::string &name(EntityId id) const { return at(id).id; }

  std::optional<EntityId> Find(std::string_view id) const;

  // Case-insensitive lookup; only used by the response parser.
  std::optional<EntityId> FindFolded(std::string_view id) const;

  // Exact match after trimming; "None" maps to the sentinel.
  // Throws kUnknownLabel carrying the offending string.
  EntityId ValidateLabel(std::string_view label) const;

  // Hex digest over the ids in order; embedded in every artifact whose
  // layout depends on column order.
  const std::string &hash() const { return hash_; }

  std::vector<std::string> Ids() const;

 private:
  std::vector<EntityDef> entities_;
  std::unordered_map<std::string, int> index_;
  std::unordered_map<std::string, int> folded_index_;
  std::string hash_;
};

// Reads the JSON Lines registry format:
//   {"id": "...", "definition": "...", "icl_examples": ["...", ...]}
EntityRegistry LoadRegistry(const std::filesystem::path &path);
EntityRegistry ReadRegistry(std::istream &in);

std::string RegistryHash(const std::vector<std::string> &ids);

// Free-function spelling of EntityRegistry::ValidateLabel.
inline EntityId ValidateLabel(const EntityRegistry &registry,
                              std::string_view label) {
  return registry.ValidateLabel(label);
}

}  // namespace qintent

#endif  // QINTENT_TAXONOMY_H_
