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
#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "qintent/baseline.h"
#include "qintent/classifier.h"
#include "qintent/router.h"
#include "qintent/serve.h"
#include "qintent/synthetic.h"
#include "qintent/taxonomy.h"
#include "qintent/text.h"

namespace qintent {
namespace {

const EntityRegistry &Registry() {
  static const EntityRegistry registry =
      LoadRegistry(std::string(QINTENT_DATA_DIR) + "/registry.jsonl");
  return registry;
}

const std::vector<QueryRecord> &Queries() {
  static const std::vector<QueryRecord> queries = [] {
    SyntheticConfig config;
    config.num_queries = 512;
    config.seed = 1;
    return GenerateCorpus(Registry(), config).queries;
  }();
  return queries;
}

void BM_LexicalMatch(benchmark::State &state) {
  const Gazetteer gazetteer = BankGazetteer(Registry());
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gazetteer.LexicalMatch(Queries()[i++ % Queries().size()].text));
  }
}
BENCHMARK(BM_LexicalMatch);

void BM_Encode(benchmark::State &state) {
  const EncoderBackend encoder = EncoderBackend::HashedNgram(static_cast<size_t>(state.range(0)));
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(encoder.Encode(Queries()[i++ % Queries().size()].text));
  }
}
BENCHMARK(BM_Encode)->Arg(256)->Arg(1024);

void BM_ClassifierPredict(benchmark::State &state) {
  const EncoderBackend encoder = EncoderBackend::HashedNgram(static_cast<size_t>(state.range(0)));
  ClassifierTrainConfig config;
  config.seed = 1;
  const EntityClassifier classifier(InitClassifier(encoder, Registry(), config), encoder,
                                    Registry());
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(classifier.PredictProbs(Queries()[i++ % Queries().size()].text));
  }
}
BENCHMARK(BM_ClassifierPredict)->Arg(256)->Arg(1024);

void BM_ServeAnswer(benchmark::State &state) {
  const EncoderBackend encoder = EncoderBackend::HashedNgram(1024);
  const EntityClassifier classifier(InitClassifier(encoder, Registry(), {}), encoder, Registry());
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(AnswerQuery(classifier, Queries()[i++ % Queries().size()].text));
  }
}
BENCHMARK(BM_ServeAnswer);

void BM_RouterForward(benchmark::State &state) {
  const size_t d = 256, h = 64;
  const size_t p = static_cast<size_t>(state.range(0));
  std::vector<std::string> ids;
  for (size_t i = 0; i < p; ++i) ids.push_back("p" + std::to_string(i));
  RouterModel model = MakeRouterModel(d, h, ids, Registry().hash(), 0.1);
  Rng rng(2);
  for (auto *t : {&model.w1, &model.b1, &model.w2, &model.b2}) {
    for (double &x : *t) x = rng.Uniform(-0.1, 0.1);
  }
  const QueryEmbedding e = EmbedQuery(EncoderBackend::HashedNgram(d), "tom hanks comedy movies");
  for (auto _ : state) benchmark::DoNotOptimize(RouterForward(model, e));
}
BENCHMARK(BM_RouterForward)->Arg(5)->Arg(32);

}  // namespace
}  // namespace qintent

BENCHMARK_MAIN();
