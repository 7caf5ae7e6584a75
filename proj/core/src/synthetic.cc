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
#include "qintent/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string_view>
#include <utility>

#include "qintent/digest.h"
#include "qintent/error.h"
#include "qintent/text.h"

namespace qintent {

const std::vector<BankPhrase> &PhraseBank() {
  static const std::vector<BankPhrase> kBank = {
      {"movies", "IntentMovie"},
      {"films", "IntentMovie"},
      {"movie night", "IntentMovie"},
      {"feature film", "IntentMovie"},
      {"tv shows", "IntentTvSeries"},
      {"series", "IntentTvSeries"},
      {"sitcoms", "IntentTvSeries"},
      {"miniseries", "IntentTvSeries"},
      {"episodes", "IntentTvSeries"},
      {"alien abduction", "Theme"},
      {"time travel", "Theme"},
      {"zombies", "Theme"},
      {"heist", "Theme"},
      {"based on true story", "Theme"},
      {"haunted house", "Theme"},
      {"dystopian", "Theme"},
      {"road trip", "Theme"},
      {"horror", "Genre"},
      {"comedy", "Genre"},
      {"romantic comedy", "Genre"},
      {"thriller", "Genre"},
      {"drama", "Genre"},
      {"animated", "Genre"},
      {"sci fi", "Genre"},
      {"western", "Genre"},
      {"tom hanks", "CastAndCrew"},
      {"meryl streep", "CastAndCrew"},
      {"christopher nolan", "CastAndCrew"},
      {"denzel washington", "CastAndCrew"},
      {"greta gerwig", "CastAndCrew"},
      {"breaking bad", "TVSeriesName"},
      {"the office", "TVSeriesName"},
      {"stranger things", "TVSeriesName"},
      {"the crown", "TVSeriesName"},
      {"succession", "TVSeriesName"},
      {"interstellar", "MovieName"},
      {"oppenheimer", "MovieName"},
      {"titanic", "MovieName"},
      {"inception", "MovieName"},
      {"casablanca", "MovieName"},
      {"netflix", "StreamingService"},
      {"hbo max", "StreamingService"},
      {"amazon prime", "StreamingService"},
      {"apple tv", "StreamingService"},
      {"hulu", "StreamingService"},
      {"new releases", "Recency"},
      {"latest", "Recency"},
      {"recent", "Recency"},
      {"just released", "Recency"},
      {"popular", "Popularity"},
      {"trending", "Popularity"},
      {"most watched", "Popularity"},
      {"top rated", "Popularity"},
      {"2023", "ReleaseYear"},
      {"2019", "ReleaseYear"},
      {"2021", "ReleaseYear"},
      {"2015", "ReleaseYear"},
      {"90s", "Decade"},
      {"80s", "Decade"},
      {"1970s", "Decade"},
      {"2000s", "Decade"},
      {"free", "FreeContent"},
      {"free to watch", "FreeContent"},
      {"no subscription", "FreeContent"},
      {"spanish", "AudioLanguage"},
      {"korean", "AudioLanguage"},
      {"hindi", "AudioLanguage"},
      {"french", "AudioLanguage"},
      {"japanese", "AudioLanguage"},
      {"marvel", "Franchise"},
      {"star wars", "Franchise"},
      {"harry potter", "Franchise"},
      {"fast and furious", "Franchise"},
      {"christmas", "Holiday"},
      {"halloween", "Holiday"},
      {"thanksgiving", "Holiday"},
      {"easter", "Holiday"},
      {"football", "Sport"},
      {"basketball", "Sport"},
      {"nba", "Sport"},
      {"wimbledon", "Sport"},
      {"manchester united", "Sport"},
      {"spongebob", "Character"},
      {"sherlock holmes", "Character"},
      {"peppa pig", "Character"},
      {"blippi", "Character"},
      {"harley quinn", "Character"},
      {"oscar winning", "Award"},
      {"emmy winning", "Award"},
      {"golden globe", "Award"},
      {"kids", "ContentRating"},
      {"pg 13", "ContentRating"},
      {"rated r", "ContentRating"},
      {"family friendly", "ContentRating"},
      {"rent", "OfferType"},
      {"buy", "OfferType"},
      {"pay per view", "OfferType"},
      {"documentaries", "IntentDocumentary"},
      {"docuseries", "IntentDocumentary"},
      {"true crime", "IntentDocumentary"},
  };
  return kBank;
}

namespace {

constexpr std::string_view kFillers[] = {
    "watch",  "stream",        "online",     "tonight",        "full",
    "hd",     "show me",       "find",       "something like", "with subtitles",
    "good",   "where to watch", "list of",   "streaming now",  "best",
};

EntityId BankEntity(const EntityRegistry &registry, const char *name) {
  auto id = registry.Find(name);
  if (!id) {
    throw Error(ErrorKind::kUnknownLabel,
                std::string("registry lacks synthetic entity ") + name);
  }
  return *id;
}

// Adjacent-character swap inside a long token, else a plural suffix.
std::string Perturb(const std::string &phrase, Rng &rng) {
  std::vector<std::string> tokens = Tokenize(phrase);
  std::vector<size_t> long_tokens;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].size() >= 5) long_tokens.push_back(i);
  }
  if (!long_tokens.empty() && rng.Bernoulli(0.5)) {
    std::string &t = tokens[long_tokens[rng.Below(long_tokens.size())]];
    const size_t pos = 1 + rng.Below(t.size() - 2);
    std::swap(t[pos], t[pos + 1]);
  } else if (tokens.back().back() != 's') {
    tokens.back().push_back('s');
  } else {
    tokens.back().pop_back();
  }
  return Join(tokens, " ");
}

struct Draft {
  std::string text;
  Annotation gold;
};

Draft DraftQuery(const EntityRegistry &registry,
                 const std::vector<std::pair<std::string, EntityId>> &phrases,
                 const SyntheticConfig &config, Rng &rng) {
  Draft d;
  std::vector<std::string> parts;
  if (rng.Bernoulli(config.none_rate)) {
    parts.emplace_back(kFillers[rng.Below(std::size(kFillers))]);
    parts.emplace_back(kFillers[rng.Below(std::size(kFillers))]);
    d.text = Join(parts, " ");
    return d;
  }
  const size_t k = 1 + rng.Below(2);
  std::vector<EntityId> used;
  while (parts.size() < k) {
    const auto &[phrase, entity] = phrases[rng.Below(phrases.size())];
    if (std::find(used.begin(), used.end(), entity) != used.end()) continue;
    used.push_back(entity);
    d.gold.Set(entity, Confidence::kHigh);
    parts.push_back(rng.Bernoulli(config.paraphrase_noise) ? Perturb(phrase, rng) : phrase);
  }
  const size_t fillers = rng.Below(3);
  for (size_t f = 0; f < fillers; ++f) {
    const size_t at = rng.Below(parts.size() + 1);
    parts.insert(parts.begin() + static_cast<long>(at),
                 std::string(kFillers[rng.Below(std::size(kFillers))]));
  }
  (void)registry;
  d.text = Join(parts, " ");
  return d;
}

SyntheticCorpus Generate(const EntityRegistry &registry,
                         const std::vector<std::pair<std::string, EntityId>> &phrases,
                         const SyntheticConfig &config) {
  Rng rng(config.seed);
  SyntheticCorpus corpus;
  std::set<std::string> seen;
  const size_t max_attempts = config.num_queries * 50 + 100;
  for (size_t attempt = 0; attempt < max_attempts && corpus.queries.size() < config.num_queries;
       ++attempt) {
    Draft d = DraftQuery(registry, phrases, config, rng);
    QueryRecord record = MakeQueryRecord(d.text);
    if (!seen.insert(record.id).second) continue;
    corpus.gold[record.id] = std::move(d.gold);
    corpus.queries.push_back(std::move(record));
  }
  // Power-law frequencies over a shuffled rank order.
  std::vector<size_t> rank(corpus.queries.size());
  std::iota(rank.begin(), rank.end(), 1);
  rng.Shuffle(rank);
  for (size_t i = 0; i < corpus.queries.size(); ++i) {
    const double f = static_cast<double>(config.max_frequency) /
                     std::pow(static_cast<double>(rank[i]), config.zipf_exponent);
    corpus.queries[i].frequency = std::max<uint64_t>(1, static_cast<uint64_t>(f));
  }
  return corpus;
}

}  // namespace

Gazetteer BankGazetteer(const EntityRegistry &registry, double fraction, uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::kOutOfRange, "gazetteer fraction outside [0, 1]");
  }
  const auto &bank = PhraseBank();
  std::vector<size_t> order(bank.size());
  std::iota(order.begin(), order.end(), 0);
  if (fraction < 1.0) {
    Rng rng(seed);
    rng.Shuffle(order);
    order.resize(static_cast<size_t>(std::llround(fraction * static_cast<double>(bank.size()))));
    std::sort(order.begin(), order.end());
  }
  Gazetteer g;
  for (size_t i : order) g.Add(BankEntity(registry, bank[i].entity), bank[i].phrase);
  return g;
}

SyntheticCorpus GenerateCorpus(const EntityRegistry &registry,
                               const SyntheticConfig &config) {
  std::vector<std::pair<std::string, EntityId>> phrases;
  for (const auto &p : PhraseBank()) phrases.emplace_back(p.phrase, BankEntity(registry, p.entity));
  return Generate(registry, phrases, config);
}

AmbiguityScenario MakeAmbiguityScenario(const EntityRegistry &base, size_t num_queries,
                                        uint64_t seed) {
  struct Ambiguous {
    const char *phrase;
    const char *intended;
    const char *other;
  };
  static constexpr Ambiguous kAmbiguous[] = {
      {"batman", "Character", "Franchise"},   {"superman", "Character", "Franchise"},
      {"godzilla", "Character", "MovieName"}, {"dune", "MovieName", "Franchise"},
      {"james bond", "Franchise", "Character"}, {"halloween", "Holiday", "MovieName"},
      {"friends", "TVSeriesName", "Theme"},   {"frozen", "MovieName", "Theme"},
  };

  // Intended entities list their ambiguous phrases first; the rival entity
  // must not mention them.
  std::vector<EntityDef> defs = base.entities();
  for (const auto &a : kAmbiguous) {
    for (EntityDef &def : defs) {
      std::erase_if(def.icl_examples,
                    [&](const std::string &ex) { return NormalizeText(ex) == a.phrase; });
    }
  }
  for (auto it = std::rbegin(kAmbiguous); it != std::rend(kAmbiguous); ++it) {
    for (EntityDef &def : defs) {
      if (def.id == it->intended) def.icl_examples.insert(def.icl_examples.begin(), it->phrase);
    }
  }
  EntityRegistry registry(std::move(defs));

  Gazetteer gazetteer = BankGazetteer(registry);
  std::vector<std::pair<std::string, EntityId>> phrases;
  for (const auto &a : kAmbiguous) {
    const EntityId intended = BankEntity(registry, a.intended);
    gazetteer.Add(intended, a.phrase);
    gazetteer.Add(BankEntity(registry, a.other), a.phrase);
    phrases.emplace_back(a.phrase, intended);
  }
  // Mix ambiguous phrases with a slice of the plain bank.
  for (size_t i = 0; i < PhraseBank().size(); i += 4) {
    phrases.emplace_back(PhraseBank()[i].phrase,
                         BankEntity(registry, PhraseBank()[i].entity));
  }
  SyntheticConfig config;
  config.num_queries = num_queries;
  config.seed = seed;
  config.paraphrase_noise = 0.0;
  config.none_rate = 0.0;
  SyntheticCorpus corpus = Generate(registry, phrases, config);
  return {std::move(registry), std::move(gazetteer), std::move(corpus)};
}

Annotation SimulatePersona(const PanelPersona &persona, const std::string &query_id,
                           const Annotation &gold, size_t entity_count, uint64_t seed) {
  Rng rng(Hash64(query_id + '\x1f' + persona.id, seed));
  Annotation out;
  for (size_t e = 0; e < entity_count; ++e) {
    const EntityId id(static_cast<int>(e));
    const bool g = gold.Contains(id);
    bool selected = false;
    Confidence level = Confidence::kHigh;
    switch (persona.behavior) {
      case PanelBehavior::kOracle:
        selected = g;
        break;
      case PanelBehavior::kAdversarial:
        selected = !g;
        break;
      case PanelBehavior::kRandom:
        selected = rng.Bernoulli(persona.rate);
        level = static_cast<Confidence>(1 + rng.Below(3));
        break;
      case PanelBehavior::kNoisy:
        selected = rng.Bernoulli(persona.rate) ? !g : g;
        break;
      case PanelBehavior::kSpecialist:
        selected = g && std::find(persona.focus.begin(), persona.focus.end(), id) !=
                            persona.focus.end();
        break;
    }
    if (selected) out.Set(id, level);
  }
  return out;
}

ConfidenceMatrix SimulatePanelMatrix(const std::vector<PanelPersona> &panel,
                                     const QueryRecord &query, const Annotation &gold,
                                     const EntityRegistry &registry, uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto &p : panel) ids.push_back(p.id);
  ConfidenceMatrix m(query.id, ids, registry.hash(), registry.size());
  for (size_t p = 0; p < panel.size(); ++p) {
    Annotation a = SimulatePersona(panel[p], query.id, gold, registry.size(), seed);
    for (const auto &[entity, conf] : a.entries()) {
      m.set(p, static_cast<size_t>(entity.index()), ConfidenceValue(conf));
    }
  }
  return m;
}

}  // namespace qintent
