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

// Local stand-in for a chat-completions endpoint, replaying a fixture.
//
//   healthtext_stub_server --fixture responses.json [--port 8089]

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "healthtext/stub_server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stub generation server"};
  std::string fixture;
  int port = 8089;
  std::string path = "/v1/chat/completions";
  app.add_option("--fixture", fixture, "Response fixture JSON")->required();
  app.add_option("--port", port, "Port on 127.0.0.1");
  app.add_option("--path", path, "Endpoint path");
  CLI11_PARSE(app, argc, argv);
  try {
    healthtext::augment::StubGenerationServer server(healthtext::augment::load_stub_fixture(fixture),
                                                     path);
    std::cerr << "serving " << fixture << " at http://127.0.0.1:" << port << path << "\n";
    server.serve_forever("127.0.0.1", port);
  } catch (const std::exception& e) {
    std::cerr << "stub server: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
