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
#include "qintent/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "json.hpp"
#include "qintent/digest.h"
#include "qintent/error.h"
#include "qintent/text.h"

namespace qintent {

using json = nlohmann::json;

namespace {

[[noreturn]] void Malformed(int line_no, const std::string &why) {
  throw Error(ErrorKind::kMalformedLine,
              "line " + std::to_string(line_no) + ": " + why);
}

uint64_t ParseFrequency(std::string_view s, int line_no) {
  s = Trim(s);
  uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    Malformed(line_no, "bad frequency '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace

std::string QueryId(std::string_view text) {
  return Sha256Hex(NormalizeText(text)).substr(0, 16);
}

QueryRecord MakeQueryRecord(std::string_view text, uint64_t frequency) {
  QueryRecord r;
  r.text = NormalizeText(text);
  r.id = Sha256Hex(r.text).substr(0, 16);
  r.frequency = frequency;
  return r;
}

std::vector<QueryRecord> IngestQueries(std::istream &in) {
  std::vector<QueryRecord> records;
  std::unordered_map<std::string, size_t> by_text;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = Trim(line);
    if (view.empty()) continue;
    std::string text;
    uint64_t frequency = 0;
    if (view.front() == '{') {
      try {
        json j = json::parse(view);
        text = j.at("text").get<std::string>();
        const json &f = j.at("frequency");
        if (!f.is_number_integer() || f.get<int64_t>() < 0) {
          Malformed(line_no, "frequency must be a non-negative integer");
        }
        frequency = f.get<uint64_t>();
      } catch (const json::exception &e) {
        Malformed(line_no, e.what());
      }
    } else {
      size_t tab = line.rfind('\t');
      if (tab == std::string::npos) Malformed(line_no, "expected query<TAB>frequency");
      text = line.substr(0, tab);
      frequency = ParseFrequency(std::string_view(line).substr(tab + 1), line_no);
    }
    std::string normalized = NormalizeText(text);
    if (normalized.empty()) Malformed(line_no, "empty query text");
    if (frequency == 0) Malformed(line_no, "frequency must be at least 1");
    auto [it, inserted] = by_text.emplace(normalized, records.size());
    if (inserted) {
      records.push_back(MakeQueryRecord(normalized, frequency));
    } else {
      records[it->second].frequency += frequency;
    }
  }
  if (records.empty()) throw Error(ErrorKind::kEmpty, "no query records in input");
  return records;
}

std::vector<QueryRecord> IngestQueryFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open queries " + path.string());
  return IngestQueries(in);
}

void WriteQueryLines(std::ostream &out, const std::vector<QueryRecord> &records) {
  for (const auto &r : records) out << r.text << '\t' << r.frequency << '\n';
}

void WriteQueryJsonl(std::ostream &out, const std::vector<QueryRecord> &records) {
  for (const auto &r : records) {
    json j = {{"id", r.id}, {"text", r.text}, {"frequency", r.frequency}};
    out << j.dump() << '\n';
  }
}

DatasetSplit SplitDataset(std::vector<QueryRecord> records,
                          const SplitRatios &ratios, uint64_t seed) {
  if (ratios.train <= 0 || ratios.dev <= 0 || ratios.test <= 0 ||
      std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9) {
    throw Error(ErrorKind::kRatioSum, "ratios must be positive and sum to 1");
  }
  const size_t n = records.size();
  if (n < 3) throw Error(ErrorKind::kTooSmall, "need at least 3 records to split");

  std::sort(records.begin(), records.end(),
            [](const QueryRecord &a, const QueryRecord &b) { return a.id < b.id; });
  Rng rng(seed);
  rng.Shuffle(records);

  size_t sizes[3] = {
      static_cast<size_t>(std::llround(n * ratios.train)),
      static_cast<size_t>(std::llround(n * ratios.dev)),
      0,
  };
  if (sizes[0] + sizes[1] > n) sizes[1] = n - sizes[0];
  sizes[2] = n - sizes[0] - sizes[1];
  // Every part gets at least one record; the donor is the largest part.
  for (size_t &s : sizes) {
    if (s == 0) {
      size_t *donor = std::max_element(std::begin(sizes), std::end(sizes));
      --*donor;
      s = 1;
    }
  }

  DatasetSplit split;
  split.seed = seed;
  auto first = records.begin();
  split.train.assign(first, first + sizes[0]);
  split.dev.assign(first + sizes[0], first + sizes[0] + sizes[1]);
  split.test.assign(first + sizes[0] + sizes[1], records.end());
  return split;
}

void WriteSplitManifest(std::ostream &out, const DatasetSplit &split) {
  out << json{{"seed", split.seed},
              {"train", split.train.size()},
              {"dev", split.dev.size()},
              {"test", split.test.size()}}
             .dump()
      << '\n';
  auto emit = [&](const std::vector<QueryRecord> &part, const char *name) {
    for (const auto &r : part) out << json{{"id", r.id}, {"part", name}}.dump() << '\n';
  };
  emit(split.train, "train");
  emit(split.dev, "dev");
  emit(split.test, "test");
}

std::vector<QueryRecord> RebalanceByEntity(
    const std::vector<QueryRecord> &records, const AnnotationStore &annotations,
    double cap_fraction, uint64_t seed) {
  if (!(cap_fraction > 0.0 && cap_fraction <= 1.0)) {
    throw Error(ErrorKind::kPrecondition, "cap_fraction must be in (0, 1]");
  }
  std::vector<std::string> missing;
  std::vector<std::vector<int>> labels(records.size());
  int max_entity = -1;
  for (size_t i = 0; i < records.size(); ++i) {
    auto it = annotations.find(records[i].id);
    if (it == annotations.end()) {
      missing.push_back(records[i].id);
      continue;
    }
    for (EntityId e : it->second.Labels()) {
      labels[i].push_back(e.index());
      max_entity = std::max(max_entity, e.index());
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorKind::kMissingAnnotation, Join(missing, ", "));
  }

  std::vector<int64_t> count(max_entity + 1, 0);
  int64_t total = 0;
  for (const auto &ls : labels) {
    for (int e : ls) ++count[e];
    total += static_cast<int64_t>(ls.size());
  }

  // Sampling order: id order, then a seeded permutation.
  std::vector<size_t> order(records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return records[a].id < records[b].id;
  });
  Rng rng(seed);
  rng.Shuffle(order);

  std::vector<std::vector<size_t>> by_entity(count.size());
  for (size_t i : order) {
    for (int e : labels[i]) by_entity[e].push_back(i);
  }

  std::vector<bool> dropped(records.size(), false);
  std::vector<size_t> cursor(count.size(), 0);  // skips the dropped prefix
  auto over_cap = [&](int e) {
    return static_cast<double>(count[e]) > cap_fraction * static_cast<double>(total);
  };
  auto droppable = [&](size_t i) {
    if (dropped[i] || labels[i].empty()) return false;
    for (int e : labels[i]) {
      if (!over_cap(e)) return false;
    }
    return true;
  };

  while (true) {
    // Entities over the cap, most excessive first (ties: lower column).
    std::vector<int> over;
    for (size_t e = 0; e < count.size(); ++e) {
      if (over_cap(static_cast<int>(e))) over.push_back(static_cast<int>(e));
    }
    if (over.empty()) break;
    std::stable_sort(over.begin(), over.end(),
                     [&](int a, int b) { return count[a] > count[b]; });
    bool progressed = false;
    for (int e : over) {
      const auto &queue = by_entity[e];
      while (cursor[e] < queue.size() && dropped[queue[cursor[e]]]) ++cursor[e];
      for (size_t k = cursor[e]; k < queue.size(); ++k) {
        size_t i = queue[k];
        if (!droppable(i)) continue;
        dropped[i] = true;
        for (int f : labels[i]) --count[f];
        total -= static_cast<int64_t>(labels[i].size());
        progressed = true;
        break;
      }
      if (progressed) break;
    }
    if (!progressed) break;
  }

  std::vector<QueryRecord> out;
  for (size_t i = 0; i < records.size(); ++i) {
    if (!dropped[i]) out.push_back(records[i]);
  }
  return out;
}

void WriteAnnotations(std::ostream &out, const AnnotationStore &annotations,
                      const EntityRegistry &registry,
                      const std::vector<QueryRecord> *texts) {
  std::unordered_map<std::string, const std::string *> text_of;
  if (texts) {
    for (const auto &q : *texts) text_of[q.id] = &q.text;
  }
  for (const auto &[id, annotation] : annotations) {
    json labels = json::object();
    for (const auto &[entity, confidence] : annotation.entries()) {
      labels[registry.name(entity)] = std::string(ConfidenceName(confidence));
    }
    json line = {{"id", id}, {"labels", labels}};
    if (auto it = text_of.find(id); it != text_of.end()) line["text"] = *it->second;
    out << line.dump() << '\n';
  }
}

AnnotationStore ReadAnnotations(std::istream &in, const EntityRegistry &registry) {
  AnnotationStore out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      std::string id = j.contains("id") ? j["id"].get<std::string>()
                                        : QueryId(j.at("text").get<std::string>());
      Annotation a;
      for (const auto &[name, level] : j.at("labels").items()) {
        EntityId e = registry.ValidateLabel(name);
        auto c = ParseConfidence(level.get<std::string>());
        if (!c) {
          throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                             ": bad confidence for " + name);
        }
        if (!e.is_none()) a.Set(e, *c);
      }
      out[id] = std::move(a);
    } catch (const json::exception &e) {
      throw Error(ErrorKind::kParse,
                  "annotation line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

AnnotationStore LoadAnnotations(const std::filesystem::path &path,
                                const EntityRegistry &registry) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ReadAnnotations(in, registry);
}

}  // namespace qintent
