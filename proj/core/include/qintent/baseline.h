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
#ifndef QINTENT_BASELINE_H_
#define QINTENT_BASELINE_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qintent/taxonomy.h"

namespace qintent {

inline constexpr size_t kMaxPhraseTokens = 5;

// A phrase occurrence inside a normalized query.
struct PhraseMatch {
  size_t token_begin = 0;
  size_t token_end = 0;  // exclusive
  std::string phrase;
  std::vector<EntityId> entities;  // more than one when the phrase is ambiguous
};

// Per-entity sets of normalized phrases of 1 to 5 tokens. A phrase may be
// listed under several entities.
class Gazetteer {
 public:
  Gazetteer() = default;

  // Normalizes and adds a phrase. Throws kParse for empty or over-long
  // phrases.
  void Add(EntityId entity, std::string_view phrase);

  // All occurrences of gazetteer phrases as contiguous token runs of the
  // normalized query, ordered by start token then length.
  std::vector<PhraseMatch> Match(std::string_view query) const;

  // Entities with at least one matching phrase, all at High confidence.
  Annotation LexicalMatch(std::string_view query) const;

  // Phrase -> entities, ordered by phrase.
  std::map<std::string, std::vector<EntityId>> Phrases() const;

  size_t phrase_count() const { return phrases_.size(); }

  // Writes {"entity":..., "phrases":[...]} lines in registry order.
  void Write(std::ostream &out, const EntityRegistry &registry) const;

 private:
  std::unordered_map<std::string, std::vector<EntityId>> phrases_;
};

Gazetteer ReadGazetteer(std::istream &in, const EntityRegistry &registry);
Gazetteer LoadGazetteer(const std::filesystem::path &path,
                        const EntityRegistry &registry);

inline Annotation LexicalMatch(const Gazetteer &gazetteer,
                               std::string_view query) {
  return gazetteer.LexicalMatch(query);
}

}  // namespace qintent

#endif  // QINTENT_BASELINE_H_
