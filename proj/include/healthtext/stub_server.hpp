// Copyright 2026 The healthtext Authors.
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

#pragma once

// In-process stand-in for a chat-completion endpoint, serving canned
// responses in order. Used by the test suites and by the
// healthtext-stub-server tool so augmentation runs fully offline.
//
// Fixture file:
//   {"responses": [{"status": 200, "content": "..."} |
//                  {"status": 500, "raw": "..."}],
//    "cycle": false}
// After the last response the server repeats it, or starts over when
// "cycle" is true.

#include <cstddef>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "healthtext/error.hpp"

namespace healthtext::augment {

struct StubResponse {
  int status = 200;
  std::string content;  // wrapped in {"choices":[{"message":{"content":...}}]}
  std::optional<std::string> raw;  // sent verbatim instead
};

struct StubFixture {
  std::vector<StubResponse> responses;
  bool cycle = false;
};

inline StubFixture load_stub_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stub fixture " + path);
  try {
    const auto j = nlohmann::json::parse(in);
    StubFixture f;
    f.cycle = j.value("cycle", false);
    for (const auto& r : j.at("responses")) {
      StubResponse s;
      s.status = r.value("status", 200);
      s.content = r.value("content", "");
      if (r.contains("raw")) s.raw = r["raw"].get<std::string>();
      f.responses.push_back(std::move(s));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad stub fixture: ") + e.what());
  }
}

struct StubRequest {
  std::string authorization;
  std::string body;
};

class StubGenerationServer {
 public:
  explicit StubGenerationServer(StubFixture fixture, std::string path = "/v1/chat/completions")
      : fixture_(std::move(fixture)), path_(std::move(path)) {
    if (fixture_.responses.empty()) throw ConfigError("stub fixture has no responses");
    server_.Post(path_, [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res);
    });
  }

  ~StubGenerationServer() { stop(); }
  StubGenerationServer(const StubGenerationServer&) = delete;
  StubGenerationServer& operator=(const StubGenerationServer&) = delete;

  // Binds to `port` (0 = any free port) on 127.0.0.1 and serves in a
  // background thread. Returns the bound port.
  int start(int port = 0) {
    if (port == 0) {
      port_ = server_.bind_to_any_port("127.0.0.1");
    } else {
      port_ = server_.bind_to_port("127.0.0.1", port) ? port : -1;
    }
    if (port_ < 0) throw IoError("stub server could not bind");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  // Blocks in the calling thread.
  void serve_forever(const std::string& host, int port) { server_.listen(host, port); }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + path_; }

  std::size_t request_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return requests_.size();
  }
  std::vector<StubRequest> requests() const {
    std::lock_guard<std::mutex> lock(mu_);
    return requests_;
  }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    StubResponse r;
    {
      std::lock_guard<std::mutex> lock(mu_);
      const std::size_t n = fixture_.responses.size();
      const std::size_t i = requests_.size();
      r = fixture_.responses[fixture_.cycle ? i % n : std::min(i, n - 1)];
      requests_.push_back({req.get_header_value("Authorization"), req.body});
    }
    res.status = r.status;
    if (r.raw) {
      res.set_content(*r.raw, "application/json");
    } else {
      nlohmann::json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", r.content}}}}}}};
      res.set_content(body.dump(), "application/json");
    }
  }

  StubFixture fixture_;
  std::string path_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
  mutable std::mutex mu_;
  std::vector<StubRequest> requests_;
};

}  // namespace healthtext::augment
