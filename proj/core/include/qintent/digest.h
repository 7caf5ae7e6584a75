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

#ifndef QINTENT_DIGEST_H_
#define QINTENT_DIGEST_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace qintent {

// Lower-case hex SHA-256 of the input bytes.
std::string Sha256Hex(std::string_view data);

// Lower-case hex SHA-256 of a file's contents.
std::string FileSha256Hex(const std::filesystem::path &path);

// Seeded 64-bit hash used for feature hashing and per-item seeding. Stable
// across platforms: FNV-1a over the bytes followed by a splitmix64 finalizer.
uint64_t Hash64(std::string_view data, uint64_t seed = 0);

// splitmix64 step; mixes a 64-bit value into a well-distributed one.
uint64_t Mix64(uint64_t x);

}  // namespace qintent

#endif  // QINTENT_DIGEST_H_
