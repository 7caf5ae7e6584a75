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
#include "qintent/features.h"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "qintent/data.h"
#include "qintent/digest.h"
#include "qintent/error.h"
#include "qintent/text.h"

namespace qintent {

using json = nlohmann::json;

SparseVector ToSparse(const std::vector<double> &dense) {
  SparseVector out;
  for (size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] == 0.0) continue;
    out.index.push_back(static_cast<uint32_t>(i));
    out.value.push_back(dense[i]);
  }
  return out;
}

HashedNgramEncoder::HashedNgramEncoder(size_t dim, uint64_t seed, int min_n, int max_n)
    : dim_(dim), seed_(seed), min_n_(min_n), max_n_(max_n) {
  if (dim_ == 0) throw Error(ErrorKind::kConfig, "encoder dimension must be positive");
  if (min_n_ < 1 || max_n_ < min_n_) throw Error(ErrorKind::kConfig, "bad n-gram range");
}

std::vector<double> HashedNgramEncoder::Encode(std::string_view text) const {
  const std::string padded = "<" + NormalizeText(text) + ">";
  std::vector<double> v(dim_, 0.0);
  for (int n = min_n_; n <= max_n_; ++n) {
    if (padded.size() < static_cast<size_t>(n)) break;
    for (size_t i = 0; i + n <= padded.size(); ++i) {
      const uint64_t h = Hash64(std::string_view(padded).substr(i, n), seed_);
      v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double &x : v) x /= norm;
  }
  return v;
}

std::string_view EncoderKindName(EncoderKind kind) {
  return kind == EncoderKind::kBuiltInHashedNgram ? "BuiltInHashedNgram"
                                                  : "PrecomputedVectors";
}

EncoderKind ParseEncoderKind(std::string_view name) {
  if (name == "BuiltInHashedNgram") return EncoderKind::kBuiltInHashedNgram;
  if (name == "PrecomputedVectors") return EncoderKind::kPrecomputedVectors;
  throw Error(ErrorKind::kParse, "unknown encoder kind '" + std::string(name) + "'");
}

EncoderBackend EncoderBackend::HashedNgram(size_t dim, uint64_t seed) {
  EncoderBackend b;
  b.descriptor_ = {EncoderKind::kBuiltInHashedNgram, dim, seed, ""};
  b.hashed_ = std::make_shared<HashedNgramEncoder>(dim, seed);
  return b;
}

EncoderBackend EncoderBackend::Precomputed(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open vectors " + path.string());
  auto vectors = std::make_shared<std::unordered_map<std::string, std::vector<double>>>();
  size_t dim = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    std::string id;
    std::vector<double> vec;
    try {
      json j = json::parse(line);
      id = j.contains("id") ? j["id"].get<std::string>()
                            : QueryId(j.at("text").get<std::string>());
      vec = j.at("vector").get<std::vector<double>>();
    } catch (const json::exception &e) {
      throw Error(ErrorKind::kParse,
                  "vector line " + std::to_string(line_no) + ": " + e.what());
    }
    if (dim == 0) dim = vec.size();
    if (vec.empty() || vec.size() != dim) {
      throw Error(ErrorKind::kShapeMismatch,
                  "vector line " + std::to_string(line_no) + " has dimension " +
                      std::to_string(vec.size()));
    }
    for (double x : vec) {
      if (!std::isfinite(x)) {
        throw Error(ErrorKind::kParse, "non-finite value on vector line " +
                                           std::to_string(line_no));
      }
    }
    (*vectors)[id] = std::move(vec);
  }
  if (vectors->empty()) throw Error(ErrorKind::kEmpty, "no vectors in " + path.string());
  EncoderBackend b;
  b.descriptor_ = {EncoderKind::kPrecomputedVectors, dim, 0, path.string()};
  b.vectors_ = std::move(vectors);
  return b;
}

EncoderBackend EncoderBackend::FromDescriptor(const EncoderDescriptor &d) {
  if (d.kind == EncoderKind::kBuiltInHashedNgram) return HashedNgram(d.dim, d.seed);
  EncoderBackend b = Precomputed(d.path);
  if (b.dim() != d.dim) {
    throw Error(ErrorKind::kShapeMismatch, "vector file dimension differs from model");
  }
  return b;
}

std::vector<double> EncoderBackend::Encode(std::string_view text) const {
  if (Trim(text).empty()) throw Error(ErrorKind::kPrecondition, "empty text");
  if (hashed_) return hashed_->Encode(text);
  const std::string id = QueryId(text);
  auto it = vectors_->find(id);
  if (it == vectors_->end()) {
    throw Error(ErrorKind::kMissingVector,
                "no vector for '" + std::string(text) + "' (id " + id + ")");
  }
  return it->second;
}

std::string EncoderBackend::tag() const {
  std::string t(EncoderKindName(descriptor_.kind));
  t += ":" + std::to_string(descriptor_.dim);
  if (hashed_) t += ":" + std::to_string(descriptor_.seed);
  return t;
}

}  // namespace qintent
