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
#include "qintent/taxonomy.h"

#include <fstream>

#include "json.hpp"
#include "qintent/digest.h"
#include "qintent/error.h"
#include "qintent/text.h"

namespace qintent {

using json = nlohmann::json;

std::string_view ConfidenceName(Confidence c) {
  switch (c) {
    case Confidence::kLow: return "Low";
    case Confidence::kMedium: return "Medium";
    case Confidence::kHigh: return "High";
  }
  return "Low";
}

std::optional<Confidence> ParseConfidence(std::string_view token) {
  std::string t = ToLower(Trim(token));
  if (t == "low") return Confidence::kLow;
  if (t == "medium") return Confidence::kMedium;
  if (t == "high") return Confidence::kHigh;
  return std::nullopt;
}

std::optional<Confidence> ConfidenceFromValue(int value) {
  if (value < 1 || value > 3) return std::nullopt;
  return static_cast<Confidence>(value);
}

void Annotation::Set(EntityId id, Confidence c) {
  auto [it, inserted] = entries_.emplace(id, c);
  if (!inserted && it->second < c) it->second = c;
}

std::optional<Confidence> Annotation::Get(EntityId id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<EntityId> Annotation::Labels() const {
  std::vector<EntityId> out;
  out.reserve(entries_.size());
  for (const auto &[id, c] : entries_) out.push_back(id);
  return out;
}

EntityRegistry::EntityRegistry(std::vector<EntityDef> entities)
    : entities_(std::move(entities)) {
  for (size_t i = 0; i < entities_.size(); ++i) {
    const EntityDef &e = entities_[i];
    if (e.id.empty()) {
      throw Error(ErrorKind::kParse, "entity " + std::to_string(i) + " has empty id");
    }
    for (char c : e.id) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        throw Error(ErrorKind::kParse, "entity id contains whitespace: '" + e.id + "'");
      }
    }
    if (e.id == kNoneLabel) {
      throw Error(ErrorKind::kParse, "'None' is reserved and cannot be an entity");
    }
    if (e.definition.empty()) {
      throw Error(ErrorKind::kParse, "entity " + e.id + " has empty definition");
    }
    if (!index_.emplace(e.id, static_cast<int>(i)).second) {
      throw Error(ErrorKind::kDuplicateId, e.id);
    }
    // First occurrence wins for folded lookups.
    folded_index_.emplace(ToLower(e.id), static_cast<int>(i));
  }
  hash_ = RegistryHash(Ids());
}

const EntityDef &EntityRegistry::at(EntityId id) const {
  if (id.is_none() || static_cast<size_t>(id.index()) >= entities_.size()) {
    throw Error(ErrorKind::kOutOfRange,
                "entity index " + std::to_string(id.index()));
  }
  return entities_[id.index()];
}

std::optional<EntityId> EntityRegistry::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return EntityId(it->second);
}

std::optional<EntityId> EntityRegistry::FindFolded(std::string_view id) const {
  if (auto exact = Find(id)) return exact;
  auto it = folded_index_.find(ToLower(id));
  if (it == folded_index_.end()) return std::nullopt;
  return EntityId(it->second);
}

EntityId EntityRegistry::ValidateLabel(std::string_view label) const {
  std::string_view trimmed = Trim(label);
  if (trimmed == kNoneLabel) return EntityId::None();
  if (auto id = Find(trimmed)) return *id;
  throw Error(ErrorKind::kUnknownLabel, std::string(label));
}

std::vector<std::string> EntityRegistry::Ids() const {
  std::vector<std::string> ids;
  ids.reserve(entities_.size());
  for (const auto &e : entities_) ids.push_back(e.id);
  return ids;
}

std::string RegistryHash(const std::vector<std::string> &ids) {
  std::string buf;
  for (const auto &id : ids) {
    buf += id;
    buf += '\n';
  }
  return Sha256Hex(buf).substr(0, 16);
}

EntityRegistry ReadRegistry(std::istream &in) {
  std::vector<EntityDef> defs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      EntityDef def;
      def.id = j.at("id").get<std::string>();
      def.definition = j.at("definition").get<std::string>();
      if (j.contains("icl_examples")) {
        def.icl_examples = j.at("icl_examples").get<std::vector<std::string>>();
      }
      defs.push_back(std::move(def));
    } catch (const json::exception &e) {
      throw Error(ErrorKind::kParse,
                  "registry line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (defs.empty()) throw Error(ErrorKind::kEmpty, "registry has no entities");
  return EntityRegistry(std::move(defs));
}

EntityRegistry LoadRegistry(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open registry " + path.string());
  return ReadRegistry(in);
}

}  // namespace qintent
