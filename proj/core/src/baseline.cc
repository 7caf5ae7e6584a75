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
#include "qintent/baseline.h"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "qintent/error.h"
#include "qintent/text.h"

namespace qintent {

using json = nlohmann::json;

void Gazetteer::Add(EntityId entity, std::string_view phrase) {
  std::string normalized = NormalizeText(phrase);
  size_t tokens = Tokenize(normalized).size();
  if (tokens == 0 || tokens > kMaxPhraseTokens) {
    throw Error(ErrorKind::kParse,
                "gazetteer phrase must have 1-5 tokens: '" + std::string(phrase) + "'");
  }
  auto &entities = phrases_[normalized];
  auto it = std::lower_bound(entities.begin(), entities.end(), entity);
  if (it == entities.end() || *it != entity) entities.insert(it, entity);
}

std::vector<PhraseMatch> Gazetteer::Match(std::string_view query) const {
  std::vector<PhraseMatch> matches;
  std::vector<std::string> tokens = Tokenize(NormalizeText(query));
  for (size_t b = 0; b < tokens.size(); ++b) {
    std::string span;
    for (size_t e = b; e < tokens.size() && e - b < kMaxPhraseTokens; ++e) {
      if (e > b) span.push_back(' ');
      span += tokens[e];
      auto it = phrases_.find(span);
      if (it == phrases_.end()) continue;
      matches.push_back(PhraseMatch{b, e + 1, span, it->second});
    }
  }
  return matches;
}

Annotation Gazetteer::LexicalMatch(std::string_view query) const {
  Annotation out;
  for (const PhraseMatch &m : Match(query)) {
    for (EntityId e : m.entities) out.Set(e, Confidence::kHigh);
  }
  return out;
}

std::map<std::string, std::vector<EntityId>> Gazetteer::Phrases() const {
  return {phrases_.begin(), phrases_.end()};
}

void Gazetteer::Write(std::ostream &out, const EntityRegistry &registry) const {
  std::vector<std::vector<std::string>> per_entity(registry.size());
  for (const auto &[phrase, entities] : Phrases()) {
    for (EntityId e : entities) per_entity[e.index()].push_back(phrase);
  }
  for (size_t i = 0; i < per_entity.size(); ++i) {
    if (per_entity[i].empty()) continue;
    out << json{{"entity", registry.entities()[i].id}, {"phrases", per_entity[i]}}.dump()
        << '\n';
  }
}

Gazetteer ReadGazetteer(std::istream &in, const EntityRegistry &registry) {
  Gazetteer gazetteer;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      throw Error(ErrorKind::kParse,
                  "gazetteer line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("entity") || !j.contains("phrases") || !j["phrases"].is_array()) {
      throw Error(ErrorKind::kParse,
                  "gazetteer line " + std::to_string(line_no) +
                      ": expected {\"entity\":..., \"phrases\":[...]}");
    }
    EntityId entity = registry.ValidateLabel(j["entity"].get<std::string>());
    if (entity.is_none()) {
      throw Error(ErrorKind::kParse, "gazetteer cannot list phrases for None");
    }
    for (const auto &p : j["phrases"]) gazetteer.Add(entity, p.get<std::string>());
  }
  return gazetteer;
}

Gazetteer LoadGazetteer(const std::filesystem::path &path,
                        const EntityRegistry &registry) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open gazetteer " + path.string());
  return ReadGazetteer(in, registry);
}

}  // namespace qintent
