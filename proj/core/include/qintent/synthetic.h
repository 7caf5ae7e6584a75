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
#ifndef QINTENT_SYNTHETIC_H_
#define QINTENT_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "qintent/baseline.h"
#include "qintent/data.h"
#include "qintent/personas.h"
#include "qintent/taxonomy.h"

namespace qintent {

// Desk-scale stand-ins for proprietary query logs. Everything here is
// deterministic given a seed.

struct BankPhrase {
  const char *phrase;
  const char *entity;
};

// 100 unambiguous phrases spread over the shipped 22-entity registry.
const std::vector<BankPhrase> &PhraseBank();

// Gazetteer holding a seeded subset of the bank; fraction 1 keeps every
// phrase, 0.4 keeps round(0.4 * 100) of them.
Gazetteer BankGazetteer(const EntityRegistry &registry, double fraction = 1.0,
                        uint64_t seed = 0);

struct SyntheticConfig {
  size_t num_queries = 1000;
  uint64_t seed = 0;
  double paraphrase_noise = 0.1;  // per phrase: typo or plural
  double none_rate = 0.05;        // queries with filler words only
  double zipf_exponent = 1.1;
  uint64_t max_frequency = 1000;
};

struct SyntheticCorpus {
  std::vector<QueryRecord> queries;
  AnnotationStore gold;  // every gold label at High
};

// Queries combine one or two bank phrases from distinct entities with
// filler words. Gold follows the phrases chosen, before paraphrase noise.
// Frequencies follow a power law over a random rank order.
SyntheticCorpus GenerateCorpus(const EntityRegistry &registry,
                               const SyntheticConfig &config);

// Phrases that the gazetteer maps to two entities; the registry's ICL
// examples name the intended one.
struct AmbiguityScenario {
  EntityRegistry registry;
  Gazetteer gazetteer;
  SyntheticCorpus corpus;
};

AmbiguityScenario MakeAmbiguityScenario(const EntityRegistry &base, size_t num_queries,
                                        uint64_t seed);

enum class PanelBehavior {
  kOracle,       // agrees with gold, always High
  kAdversarial,  // selects exactly the entities gold does not
  kRandom,       // independent coin flips per entity
  kNoisy,        // gold with each cell flipped at a fixed rate
  kSpecialist,   // gold restricted to a focus set of entities
};

struct PanelPersona {
  std::string id;
  PanelBehavior behavior = PanelBehavior::kOracle;
  double rate = 0.2;  // flip probability (random, noisy)
  std::vector<EntityId> focus;
};

// Simulated persona response to one query, seeded by (seed, query, persona).
Annotation SimulatePersona(const PanelPersona &persona, const std::string &query_id,
                           const Annotation &gold, size_t entity_count, uint64_t seed);

ConfidenceMatrix SimulatePanelMatrix(const std::vector<PanelPersona> &panel,
                                     const QueryRecord &query, const Annotation &gold,
                                     const EntityRegistry &registry, uint64_t seed);

}  // namespace qintent

#endif  // QINTENT_SYNTHETIC_H_
