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
#include "qintent/prompting.h"

#include <fstream>
#include <sstream>

#include "qintent/error.h"
#include "qintent/text.h"

namespace qintent {
namespace {

// Keep in sync with data/prompts/v1.txt.
constexpr std::string_view kTemplateV1 =
    "{persona}\n"
    "You label search queries from a video streaming service with the entity "
    "categories they contain. A query can contain several categories at once.\n"
    "\n"
    "Entity categories:\n"
    "{entity_definitions}\n"
    "{cot_steps}\n"
    "{icl_block}\n"
    "{confidence_instruction}\n"
    "Answer format: list one line per entity found in the query as "
    "EntityId|Confidence, where Confidence is one of Low, Medium, High. If the "
    "query contains none of the categories, answer with the single line None.\n"
    "\n"
    "Query: {query}\n";

constexpr std::string_view kConfidenceInstruction =
    "Confidence levels: for every entity you list, say High when the query "
    "clearly contains it, Medium when it probably does, and Low when it is "
    "plausible but uncertain.";

struct Section {
  std::string_view name;
  std::string value;
};

// Replaces every "{name}" with its value. A line that consisted only of
// placeholders whose values are empty is removed.
std::string Render(std::string_view body, const std::vector<Section> &sections) {
  std::vector<std::string> lines = Split(body, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  std::string out;
  for (const std::string &line : lines) {
    std::string rendered = line;
    bool had_placeholder = false;
    for (const Section &s : sections) {
      const std::string key = "{" + std::string(s.name) + "}";
      size_t pos;
      while ((pos = rendered.find(key)) != std::string::npos) {
        had_placeholder = true;
        rendered.replace(pos, key.size(), s.value);
      }
    }
    if (had_placeholder && Trim(rendered).empty()) continue;
    out += rendered;
    out += '\n';
  }
  return out;
}

}  // namespace

std::string_view PromptVariantName(PromptVariant v) {
  switch (v) {
    case PromptVariant::kBaseline: return "Baseline";
    case PromptVariant::kConfidence: return "Confidence";
    case PromptVariant::kConfidenceCot: return "ConfidenceCot";
    case PromptVariant::kConfidenceCotIcl: return "ConfidenceCotIcl";
  }
  return "Baseline";
}

PromptVariant ParsePromptVariant(std::string_view name) {
  for (PromptVariant v : kAllPromptVariants) {
    if (ToLower(PromptVariantName(v)) == ToLower(name)) return v;
  }
  throw Error(ErrorKind::kConfig, "unknown prompt variant '" + std::string(name) + "'");
}

PromptTemplate::PromptTemplate() : version_("v1"), body_(kTemplateV1) {}

PromptTemplate::PromptTemplate(std::string version, std::string body)
    : version_(std::move(version)), body_(std::move(body)) {
  if (body_.find("{query}") == std::string::npos) {
    throw Error(ErrorKind::kParse, "prompt template lacks a {query} placeholder");
  }
}

PromptTemplate LoadPromptTemplate(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open template " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return PromptTemplate(path.stem().string(), ss.str());
}

std::string RenderEntityDefinitions(const EntityRegistry &registry) {
  std::string out;
  for (const auto &e : registry.entities()) {
    if (!out.empty()) out += '\n';
    out += "- " + e.id + ": " + e.definition;
  }
  return out;
}

std::string RenderCotSteps(const EntityRegistry &registry) {
  std::string out =
      "Reasoning steps: compare the query with the categories one at a time, "
      "using the examples as reference, and note what you find at each step.";
  int step = 1;
  for (const auto &e : registry.entities()) {
    out += "\nStep " + std::to_string(step++) + ": Check whether the query contains the " +
           e.id + " entity. " + e.definition;
  }
  out += "\nStep " + std::to_string(step) +
         ": If the query fits none of the categories above, assign the label None.";
  return out;
}

std::string RenderIclBlock(const EntityRegistry &registry, int max_examples) {
  std::string out;
  for (const auto &e : registry.entities()) {
    if (e.icl_examples.empty() || max_examples <= 0) continue;
    std::vector<std::string> shown(
        e.icl_examples.begin(),
        e.icl_examples.begin() +
            std::min<size_t>(e.icl_examples.size(), static_cast<size_t>(max_examples)));
    if (out.empty()) out = "Examples per entity:";
    out += "\n" + e.id + " entity examples: " + Join(shown, ", ") + ", etc.";
  }
  return out;
}

PromptText BuildPrompt(const PromptConfig &config, const EntityRegistry &registry,
                       std::string_view query, const Persona *persona,
                       const PromptTemplate &tmpl) {
  std::string q(Trim(query));
  if (q.empty()) throw Error(ErrorKind::kPrecondition, "empty query");
  if (!config.registry_hash.empty() && config.registry_hash != registry.hash()) {
    throw Error(ErrorKind::kRegistryMismatch, "prompt config registry hash");
  }
  const int v = static_cast<int>(config.variant);
  std::vector<Section> sections = {
      {section::kPersona, persona ? persona->description : ""},
      {section::kEntityDefinitions, RenderEntityDefinitions(registry)},
      {section::kCot, v >= 2 ? RenderCotSteps(registry) : ""},
      {section::kIcl,
       v >= 3 ? RenderIclBlock(registry, config.max_icl_examples_per_entity) : ""},
      {section::kConfidence, v >= 1 ? std::string(kConfidenceInstruction) : ""},
      {section::kQuery, q},
  };
  PromptText out;
  out.text = Render(tmpl.body(), sections);
  for (const Section &s : sections) {
    if (!s.value.empty()) out.sections.emplace_back(s.name);
  }
  out.query = q;
  if (persona) out.persona_id = persona->id;
  return out;
}

ParsedResponse ParseResponse(const EntityRegistry &registry, std::string_view raw) {
  ParsedResponse out;
  bool saw_none = false;
  size_t valid = 0;
  for (const std::string &raw_line : Split(raw, '\n')) {
    std::string_view line = Trim(raw_line);
    while (!line.empty() && (line.front() == '-' || line.front() == '*')) {
      line = Trim(line.substr(1));
    }
    if (line.empty()) continue;
    size_t bar = line.find('|');
    if (bar == std::string_view::npos) {
      if (ToLower(line) == "none") {
        saw_none = true;
      } else {
        out.warnings.push_back("malformed line: " + std::string(line));
      }
      continue;
    }
    std::string_view label = Trim(line.substr(0, bar));
    std::string_view level = Trim(line.substr(bar + 1));
    auto entity = registry.FindFolded(label);
    if (!entity) {
      out.warnings.push_back("unknown label: " + std::string(label));
      continue;
    }
    auto confidence = ParseConfidence(level);
    if (!confidence) {
      out.warnings.push_back("bad confidence: " + std::string(line));
      continue;
    }
    out.annotation.Set(*entity, *confidence);
    ++valid;
  }
  if (valid == 0 && !saw_none) {
    throw Error(ErrorKind::kUnparseableResponse,
                "no entity lines and no None in response");
  }
  return out;
}

std::string RenderResponse(const EntityRegistry &registry,
                           const Annotation &annotation) {
  if (annotation.empty()) return std::string(kNoneLabel);
  std::string out;
  for (const auto &[entity, confidence] : annotation.entries()) {
    if (!out.empty()) out += '\n';
    out += registry.name(entity) + "|" + std::string(ConfidenceName(confidence));
  }
  return out;
}

}  // namespace qintent
