// Copyright 2026 The incdial Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Session service: JSON over WebSocket, plus GET /health and an optional
// static file route for the browser client, all on one port.
//
// Handler holds the protocol logic for a single connection and never touches
// the network, so tests drive it with a hand-cranked scheduler.  Server runs
// one Handler per WebSocket connection on that connection's strand.

#ifndef INCDIAL_SERVICE_HPP
#define INCDIAL_SERVICE_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "incdial/engine.hpp"

namespace incdial::service {

using Sink = std::function<void(const nlohmann::json&)>;
using Schedule = std::function<void(std::chrono::milliseconds, std::function<void()>)>;

// Process-wide session ids: "s1", "s2", ...
std::string next_session_id();

class Handler {
 public:
  Handler(std::shared_ptr<const engine::Agent> agent, Sink sink, Schedule schedule,
          std::chrono::milliseconds delay);

  // One client message.  Malformed input yields an error event.
  void on_message(std::string_view text);

  const engine::Session* session() const { return session_.get(); }

 private:
  void drive();
  void step(std::uint64_t generation);
  void emit(const engine::Events& events);

  std::shared_ptr<const engine::Agent> agent_;
  Sink sink_;
  Schedule schedule_;
  std::chrono::milliseconds delay_;
  std::unique_ptr<engine::Session> session_;
  // Bumped whenever a pending drive must not continue.
  std::uint64_t generation_ = 0;
};

nlohmann::json health(const engine::Agent& agent);

struct ServerOptions {
  std::string host = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::chrono::milliseconds delay{300};
  std::optional<std::filesystem::path> static_dir;
};

class Server {
 public:
  // Binds immediately; throws std::system_error when the address is taken.
  Server(std::shared_ptr<const engine::Agent> agent, ServerOptions options);
  ~Server();

  unsigned short port() const;

  // Serves until stop(); returns after the last connection closes.
  void run();
  // Safe from any thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Resolves a request target inside root, or nullopt for anything that
// escapes it.  "/" maps to index.html.
std::optional<std::filesystem::path> static_file(const std::filesystem::path& root,
                                                 std::string_view target);

}  // namespace incdial::service

#endif  // INCDIAL_SERVICE_HPP
