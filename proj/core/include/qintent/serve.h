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
#ifndef QINTENT_SERVE_H_
#define QINTENT_SERVE_H_

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

#include "qintent/classifier.h"

namespace qintent {

// One response line for one request line:
//   {"labels":[{"entity":"Genre","prob":0.93}],"latency_us":41}
// or {"error":"..."} for an empty or failing request.
std::string AnswerQuery(const EntityClassifier &classifier, std::string_view line);

// Answers every line of in on out, in order, flushing after each response.
// Returns the number of requests handled.
size_t ServeStream(const EntityClassifier &classifier, std::istream &in, std::ostream &out);

// Newline-delimited protocol on a TCP port, one thread per connection.
// port 0 binds an ephemeral port; on_listening receives the bound port.
// Returns when stop becomes true.
void ServeTcp(const EntityClassifier &classifier, uint16_t port, const std::atomic<bool> &stop,
              const std::function<void(uint16_t)> &on_listening = {});

}  // namespace qintent

#endif  // QINTENT_SERVE_H_
