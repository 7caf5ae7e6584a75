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
#ifndef QINTENT_FEATURES_H_
#define QINTENT_FEATURES_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qintent {

inline constexpr uint64_t kDefaultFeatureSeed = 0x5eed0f1a7e57ULL;

// Nonzero entries of a feature vector, sorted by index.
struct SparseVector {
  std::vector<uint32_t> index;
  std::vector<double> value;
};

SparseVector ToSparse(const std::vector<double> &dense);

// Signed feature hashing of character n-grams (3 to 5 by default) of the
// normalized text padded with boundary markers, L2-normalized.
class HashedNgramEncoder {
 public:
  HashedNgramEncoder(size_t dim, uint64_t seed, int min_n = 3, int max_n = 5);

  std::vector<double> Encode(std::string_view text) const;

  size_t dim() const { return dim_; }
  uint64_t seed() const { return seed_; }

 private:
  size_t dim_;
  uint64_t seed_;
  int min_n_;
  int max_n_;
};

enum class EncoderKind { kBuiltInHashedNgram, kPrecomputedVectors };

std::string_view EncoderKindName(EncoderKind kind);
EncoderKind ParseEncoderKind(std::string_view name);

// Serializable description of an encoder; enough to rebuild it.
struct EncoderDescriptor {
  EncoderKind kind = EncoderKind::kBuiltInHashedNgram;
  size_t dim = 0;
  uint64_t seed = kDefaultFeatureSeed;
  std::string path;  // precomputed vector file
};

// Text -> fixed-width vector. The precomputed backend reads JSON Lines
// {"id": ..., "vector": [...]} or {"text": ..., "vector": [...]}; lookups go
// by query id, which is derived from the normalized text.
class EncoderBackend {
 public:
  static EncoderBackend HashedNgram(size_t dim, uint64_t seed = kDefaultFeatureSeed);
  static EncoderBackend Precomputed(const std::filesystem::path &path);
  static EncoderBackend FromDescriptor(const EncoderDescriptor &descriptor);

  EncoderKind kind() const { return descriptor_.kind; }
  size_t dim() const { return descriptor_.dim; }
  const EncoderDescriptor &descriptor() const { return descriptor_; }

  // Throws kPrecondition for empty text, kMissingVector when a precomputed
  // vector is absent.
  std::vector<double> Encode(std::string_view text) const;

  std::string tag() const;

 private:
  EncoderBackend() = default;

  EncoderDescriptor descriptor_;
  std::shared_ptr<const HashedNgramEncoder> hashed_;
  std::shared_ptr<const std::unordered_map<std::string, std::vector<double>>> vectors_;
};

}  // namespace qintent

#endif  // QINTENT_FEATURES_H_
