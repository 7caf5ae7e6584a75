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
#ifndef QINTENT_DATA_H_
#define QINTENT_DATA_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qintent/taxonomy.h"

namespace qintent {

struct QueryRecord {
  std::string id;  // digest of the normalized text
  std::string text;
  uint64_t frequency = 1;

  bool operator==(const QueryRecord &) const = default;
};

// Id of a query: a pure function of its normalized text.
std::string QueryId(std::string_view text);

QueryRecord MakeQueryRecord(std::string_view text, uint64_t frequency = 1);

// Reads "query<TAB>frequency" lines or JSON Lines {"text":..., "frequency":...}
// (format detected per line). Records are deduplicated by normalized text
// with frequencies summed, in order of first appearance.
std::vector<QueryRecord> IngestQueries(std::istream &in);
std::vector<QueryRecord> IngestQueryFile(const std::filesystem::path &path);

// Renders records back to "text<TAB>frequency" lines.
void WriteQueryLines(std::ostream &out, const std::vector<QueryRecord> &records);
void WriteQueryJsonl(std::ostream &out, const std::vector<QueryRecord> &records);

struct SplitRatios {
  double train = 0.7;
  double dev = 0.1;
  double test = 0.2;
};

struct DatasetSplit {
  std::vector<QueryRecord> train;
  std::vector<QueryRecord> dev;
  std::vector<QueryRecord> test;
  uint64_t seed = 0;
};

// Seeded partition: records are ordered by id, permuted with the seed, then
// sliced. Part sizes are within one record of the requested fractions.
DatasetSplit SplitDataset(std::vector<QueryRecord> records,
                          const SplitRatios &ratios, uint64_t seed);

// Header line {"seed":...} then one {"id":..., "part":"train|dev|test"} per
// record.
void WriteSplitManifest(std::ostream &out, const DatasetSplit &split);

// Annotation files are JSON Lines, one query per line in id order:
//   {"id": "...", "text": "...", "labels": {"Genre": "High", ...}}
// On read, a line without "id" gets the id of its "text".
void WriteAnnotations(std::ostream &out, const AnnotationStore &annotations,
                      const EntityRegistry &registry,
                      const std::vector<QueryRecord> *texts = nullptr);
AnnotationStore ReadAnnotations(std::istream &in, const EntityRegistry &registry);
AnnotationStore LoadAnnotations(const std::filesystem::path &path,
                                const EntityRegistry &registry);

inline constexpr double kDefaultCapFraction = 0.25;

// Downsamples records whose entities are all over-represented until no
// entity exceeds cap_fraction of all entity occurrences, or no record can be
// dropped without losing an entity that is within the cap. Retained records
// keep their input order.
std::vector<QueryRecord> RebalanceByEntity(
    const std::vector<QueryRecord> &records, const AnnotationStore &annotations,
    double cap_fraction = kDefaultCapFraction, uint64_t seed = 0);

}  // namespace qintent

#endif  // QINTENT_DATA_H_
