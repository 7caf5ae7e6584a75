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
#ifndef QINTENT_PROMPTING_H_
#define QINTENT_PROMPTING_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qintent/personas.h"
#include "qintent/taxonomy.h"

namespace qintent {

// Cumulative prompt variants: each adds one section to the previous one.
enum class PromptVariant {
  kBaseline = 0,
  kConfidence = 1,
  kConfidenceCot = 2,
  kConfidenceCotIcl = 3,
};

std::string_view PromptVariantName(PromptVariant v);
PromptVariant ParsePromptVariant(std::string_view name);
inline constexpr PromptVariant kAllPromptVariants[] = {
    PromptVariant::kBaseline, PromptVariant::kConfidence,
    PromptVariant::kConfidenceCot, PromptVariant::kConfidenceCotIcl};

inline constexpr int kDefaultMaxIclExamples = 4;

struct PromptConfig {
  PromptVariant variant = PromptVariant::kConfidenceCotIcl;
  std::string registry_hash;
  int max_icl_examples_per_entity = kDefaultMaxIclExamples;
};

// Section tags, in rendering order.
namespace section {
inline constexpr std::string_view kPersona = "persona";
inline constexpr std::string_view kEntityDefinitions = "entity_definitions";
inline constexpr std::string_view kCot = "cot_steps";
inline constexpr std::string_view kIcl = "icl_block";
inline constexpr std::string_view kConfidence = "confidence_instruction";
inline constexpr std::string_view kQuery = "query";
}  // namespace section

struct PromptText {
  std::string text;
  std::vector<std::string> sections;
  // Carried alongside the text so offline annotators can key on them.
  std::string query;
  std::string persona_id;
};

// Plain-text template with named placeholders {persona},
// {entity_definitions}, {cot_steps}, {icl_block}, {confidence_instruction}
// and {query}. A line holding only a placeholder whose section is empty is
// dropped.
class PromptTemplate {
 public:
  // The built-in template (version "v1").
  PromptTemplate();
  PromptTemplate(std::string version, std::string body);

  const std::string &version() const { return version_; }
  const std::string &body() const { return body_; }

 private:
  std::string version_;
  std::string body_;
};

PromptTemplate LoadPromptTemplate(const std::filesystem::path &path);

PromptText BuildPrompt(const PromptConfig &config, const EntityRegistry &registry,
                       std::string_view query, const Persona *persona = nullptr,
                       const PromptTemplate &tmpl = PromptTemplate());

// Individual sections; exposed for tests and tooling.
std::string RenderEntityDefinitions(const EntityRegistry &registry);
std::string RenderCotSteps(const EntityRegistry &registry);
std::string RenderIclBlock(const EntityRegistry &registry, int max_examples);

struct ParsedResponse {
  Annotation annotation;
  std::vector<std::string> warnings;
};

// Tolerant parse of "EntityId|Confidence" lines. Entity ids are matched
// case-insensitively, confidences likewise; duplicates keep the highest
// confidence. A lone "None" yields an empty annotation. Throws
// kUnparseableResponse when no valid line and no "None" were found.
ParsedResponse ParseResponse(const EntityRegistry &registry, std::string_view raw);

// Renders an annotation in the response format, registry order, or "None".
std::string RenderResponse(const EntityRegistry &registry,
                           const Annotation &annotation);

}  // namespace qintent

#endif  // QINTENT_PROMPTING_H_
