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
#include "qintent/serve.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qintent/error.h"
#include "qintent/text.h"

namespace qintent {

using json = nlohmann::json;

std::string AnswerQuery(const EntityClassifier &classifier, std::string_view line) {
  const auto start = std::chrono::steady_clock::now();
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (Trim(line).empty()) return json{{"error", "empty query"}}.dump();
  try {
    const std::vector<double> probs = classifier.PredictProbs(line);
    const ClassifierModel &model = classifier.model();
    json labels = json::array();
    for (EntityId e : ApplyThresholds(model, probs)) {
      labels.push_back({{"entity", model.entity_ids[e.index()]}, {"prob", probs[e.index()]}});
    }
    const auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    return json{{"labels", labels}, {"latency_us", us}}.dump();
  } catch (const std::exception &e) {
    return json{{"error", e.what()}}.dump();
  }
}

size_t ServeStream(const EntityClassifier &classifier, std::istream &in, std::ostream &out) {
  size_t handled = 0;
  for (std::string line; std::getline(in, line);) {
    out << AnswerQuery(classifier, line) << '\n' << std::flush;
    ++handled;
  }
  return handled;
}

namespace {

bool SendAll(int fd, const std::string &data) {
  size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<size_t>(n);
  }
  return true;
}

void HandleConnection(const EntityClassifier &classifier, int fd,
                      const std::atomic<bool> &stop) {
  std::string buffer;
  char chunk[4096];
  while (!stop.load()) {
    pollfd p{fd, POLLIN, 0};
    int ready = ::poll(&p, 1, 100);
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) continue;
    ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<size_t>(n));
    size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string reply = AnswerQuery(classifier, std::string_view(buffer).substr(0, pos));
      reply.push_back('\n');
      buffer.erase(0, pos + 1);
      if (!SendAll(fd, reply)) {
        ::close(fd);
        return;
      }
    }
  }
  ::close(fd);
}

}  // namespace

void ServeTcp(const EntityClassifier &classifier, uint16_t port, const std::atomic<bool> &stop,
              const std::function<void(uint16_t)> &on_listening) {
  int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw Error(ErrorKind::kIo, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listener, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) < 0 ||
      ::listen(listener, 16) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listener);
    throw Error(ErrorKind::kIo, "bind/listen on port " + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listener, reinterpret_cast<sockaddr *>(&addr), &len);
  if (on_listening) on_listening(ntohs(addr.sin_port));

  std::vector<std::thread> workers;
  while (!stop.load()) {
    pollfd p{listener, POLLIN, 0};
    int ready = ::poll(&p, 1, 100);
    if (ready <= 0) continue;
    int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) continue;
    workers.emplace_back(HandleConnection, std::cref(classifier), fd, std::cref(stop));
  }
  ::close(listener);
  for (auto &t : workers) t.join();
}

}  // namespace qintent
