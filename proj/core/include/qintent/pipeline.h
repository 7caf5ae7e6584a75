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
#ifndef QINTENT_PIPELINE_H_
#define QINTENT_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qintent/classifier.h"
#include "qintent/data.h"
#include "qintent/llm_client.h"
#include "qintent/prompting.h"
#include "qintent/router.h"

namespace qintent {

enum class PersonaMode { kNone, kRandomK, kRouterK };

std::string_view PersonaModeName(PersonaMode mode);
PersonaMode ParsePersonaMode(std::string_view name);

struct BiasSpec {
  std::string persona;
  std::string entity;
  BiasAction action = BiasAction::kAdd;
};

// Everything one end-to-end run needs. Paths are absolute after loading.
struct RunConfig {
  std::filesystem::path registry;
  std::filesystem::path personas;           // required unless persona mode is none
  std::filesystem::path gazetteer;          // mock annotator dictionary
  std::filesystem::path baseline_gazetteer; // lexical baseline; defaults to gazetteer
  std::filesystem::path queries;
  std::filesystem::path gold;               // optional evaluation reference
  std::filesystem::path prompt_template;    // optional; built-in template otherwise
  std::filesystem::path cache_dir;
  std::filesystem::path output_dir;

  uint64_t seed = 13;
  SplitRatios split;

  // Annotator: "mock" or "http".
  std::string annotator = "mock";
  HttpEndpointConfig http;
  double noise_rate = 0.0;
  std::vector<BiasSpec> persona_bias;
  BatchOptions batch;

  PromptVariant variant = PromptVariant::kConfidenceCotIcl;
  int max_icl_examples = kDefaultMaxIclExamples;

  PersonaMode persona_mode = PersonaMode::kNone;
  size_t persona_k = 3;
  double aggregation_threshold = 1.5;
  size_t router_max_queries = 500;  // train-split queries annotated by every persona
  double rebalance_cap = kDefaultCapFraction;
  size_t router_embed_dim = 256;
  RouterTrainConfig router;

  Confidence label_filter = Confidence::kHigh;
  EncoderDescriptor encoder;
  ClassifierTrainConfig classifier;
  TuneKind tune = TuneKind::kMaxF1;

  // Canonical JSON of every field; its digest keys the manifest.
  std::string ToJson() const;
};

// Reads a JSON config. Relative paths resolve against the config file's
// directory. Each override is "dotted.key=value"; the value is parsed as
// JSON when possible and taken as a string otherwise. Throws kConfig for
// unknown keys, bad values, or missing input files.
RunConfig LoadRunConfig(const std::filesystem::path &path,
                        const std::vector<std::string> &overrides = {});
RunConfig ParseRunConfig(const std::string &json_text,
                         const std::filesystem::path &base_dir,
                         const std::vector<std::string> &overrides = {});

// Checks that every referenced input exists. Throws kConfig.
void ValidateRunConfig(const RunConfig &config);

struct Artifact {
  std::string name;
  std::string path;  // relative to the output directory
  std::string sha256;
};

struct Manifest {
  std::string config_digest;
  std::vector<Artifact> artifacts;
  std::string json;  // exact bytes written to manifest.json
};

struct PipelineStats {
  uint64_t llm_requests = 0;
  uint64_t cache_hits = 0;
};

// ingest, split, annotate (single annotator or persona fan-out), matrix
// and router stages for router-k, aggregate, weak labels, classifier
// training, threshold tuning, evaluation against the lexical baseline.
// Stage failures are rethrown as kStage naming the stage; artifacts
// written so far stay on disk.
Manifest RunPipeline(const RunConfig &config, PipelineStats *stats = nullptr);

}  // namespace qintent

#endif  // QINTENT_PIPELINE_H_
