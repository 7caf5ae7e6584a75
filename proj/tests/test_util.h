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
#ifndef QINTENT_TESTS_TEST_UTIL_H_
#define QINTENT_TESTS_TEST_UTIL_H_

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qintent/error.h"
#include "qintent/taxonomy.h"

namespace qintent::testing {

inline std::filesystem::path DataDir() { return QINTENT_DATA_DIR; }

inline EntityRegistry ShippedRegistry() {
  return LoadRegistry(DataDir() / "registry.jsonl");
}

// Registry over the given ids with placeholder definitions.
inline EntityRegistry MakeRegistry(const std::vector<std::string> &ids) {
  std::vector<EntityDef> defs;
  for (const auto &id : ids) defs.push_back({id, "definition of " + id, {}});
  return EntityRegistry(std::move(defs));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("qintent_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Runs fn and returns the kind of the qintent::Error it throws, if any.
template <typename Fn>
std::optional<ErrorKind> ErrorKindOf(Fn &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace qintent::testing

#endif  // QINTENT_TESTS_TEST_UTIL_H_
