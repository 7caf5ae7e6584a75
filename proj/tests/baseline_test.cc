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

#include <gtest/gtest.h>

#include <sstream>

#include "qintent/synthetic.h"
#include "qintent/text.h"
#include "test_util.h"

namespace qintent {
namespace {

using testing::ErrorKindOf;
using testing::MakeRegistry;
using testing::ShippedRegistry;

class GazetteerTest : public ::testing::Test {
 protected:
  EntityRegistry registry_ = MakeRegistry({"Genre", "Sport", "Topic"});
  EntityId genre_ = EntityId(0);
  EntityId sport_ = EntityId(1);
  EntityId topic_ = EntityId(2);
};

TEST_F(GazetteerTest, SingleTokenMatch) {
  Gazetteer g;
  g.Add(genre_, "comedy");
  const Annotation a = g.LexicalMatch("comedy movies");
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ(a.Get(genre_), Confidence::kHigh);
}

TEST_F(GazetteerTest, OverlappingPhrasesGiveOneLabel) {
  Gazetteer g;
  g.Add(genre_, "romantic comedy");
  g.Add(genre_, "comedy");
  const Annotation a = g.LexicalMatch("romantic comedy");
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ(g.Match("romantic comedy").size(), 2u);
}

TEST_F(GazetteerTest, NoMatchIsEmpty) {
  Gazetteer g;
  g.Add(genre_, "comedy");
  EXPECT_TRUE(g.LexicalMatch("weather tomorrow").empty());
}

TEST_F(GazetteerTest, TokenBoundaries) {
  Gazetteer g;
  g.Add(topic_, "art");
  EXPECT_TRUE(g.LexicalMatch("start the show").empty());
  EXPECT_FALSE(g.LexicalMatch("modern art films").empty());
}

TEST_F(GazetteerTest, InvalidPhrases) {
  Gazetteer g;
  EXPECT_EQ(ErrorKindOf([&] { g.Add(genre_, "   "); }), ErrorKind::kParse);
  EXPECT_EQ(ErrorKindOf([&] { g.Add(genre_, "a b c d e f"); }), ErrorKind::kParse);
}

TEST_F(GazetteerTest, CaseAndWhitespaceInvariance) {
  const Gazetteer g = BankGazetteer(ShippedRegistry());
  Rng rng(4);
  const auto &bank = PhraseBank();
  for (int trial = 0; trial < 300; ++trial) {
    std::string q = std::string(bank[rng.Below(bank.size())].phrase) + " tonight " +
                    bank[rng.Below(bank.size())].phrase;
    std::string noisy;
    for (char c : q) {
      if (c == ' ') {
        noisy += std::string(1 + rng.Below(3), ' ');
      } else {
        noisy += rng.Bernoulli(0.5) ? static_cast<char>(std::toupper(c)) : c;
      }
    }
    EXPECT_EQ(g.LexicalMatch("  " + noisy + " "), g.LexicalMatch(q)) << noisy;
  }
}

TEST_F(GazetteerTest, AddingPhrasesNeverRemovesLabels) {
  const std::vector<std::pair<EntityId, std::string>> phrases = {
      {genre_, "comedy"}, {sport_, "football"}, {topic_, "history"},
      {genre_, "dark comedy"}, {sport_, "live football"}, {topic_, "world war"}};
  const std::vector<std::string> words = {"dark", "comedy", "live", "football", "world",
                                          "war", "history", "tonight"};
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::string q;
    for (int i = 0; i < 5; ++i) q += words[rng.Below(words.size())] + " ";
    Gazetteer g;
    Annotation prev = g.LexicalMatch(q);
    for (const auto &[e, p] : phrases) {
      g.Add(e, p);
      const Annotation cur = g.LexicalMatch(q);
      for (EntityId id : prev.Labels()) EXPECT_TRUE(cur.Contains(id)) << q;
      prev = cur;
    }
  }
}

TEST_F(GazetteerTest, FileRoundTrip) {
  Gazetteer g;
  g.Add(genre_, "Comedy");
  g.Add(genre_, "romantic  comedy");
  g.Add(sport_, "football");
  std::stringstream buf;
  g.Write(buf, registry_);
  const Gazetteer back = ReadGazetteer(buf, registry_);
  EXPECT_EQ(back.Phrases(), g.Phrases());
  EXPECT_TRUE(back.Phrases().count("romantic comedy"));
}

TEST(ShippedGazetteerTest, LoadsAgainstShippedRegistry) {
  const EntityRegistry registry = ShippedRegistry();
  const Gazetteer g = LoadGazetteer(testing::DataDir() / "gazetteer.jsonl", registry);
  EXPECT_EQ(g.phrase_count(), PhraseBank().size());
  EXPECT_TRUE(g.LexicalMatch("comedy movies").Contains(*registry.Find("Genre")));
}

}  // namespace
}  // namespace qintent
