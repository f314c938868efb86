// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "arena/protocol.hpp"

namespace arena {

struct ServerOptions {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = kDefaultPort;  // 0 picks a free port
  int max_sessions = 16;
  std::chrono::milliseconds idle_timeout{std::chrono::minutes(10)};
};

// Port from ARENA_PORT when set, else `fallback`.
std::uint16_t port_from_environment(std::uint16_t fallback = kDefaultPort);

// One thread and one session per connection. A connection beyond
// max_sessions receives ERROR SessionLimit and is closed. Sessions idle for
// longer than idle_timeout are closed.
class Server {
 public:
  explicit Server(ServerOptions options, const GameRegistry& registry = GameRegistry::builtin());
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and listens. Throws kBindFailure.
  void start();
  // Accept loop; returns after stop().
  void run();
  void stop();
  std::uint16_t port() const { return bound_port_; }
  int active_sessions() const { return active_.load(); }

 private:
  void serve_connection(int fd, std::uint64_t session_id);

  ServerOptions options_;
  const GameRegistry& registry_;
  int listen_fd_ = -1;
  std::uint16_t bound_port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<int> active_{0};
  std::atomic<std::uint64_t> next_session_{1};
  std::mutex threads_mutex_;
  std::vector<std::thread> threads_;
};

// Blocking client for the wire protocol.
class WireClient {
 public:
  // Throws kIo when the connection fails.
  WireClient(const std::string& host, std::uint16_t port);
  ~WireClient();
  WireClient(const WireClient&) = delete;
  WireClient& operator=(const WireClient&) = delete;

  // Sends one request and waits for its reply.
  Envelope call(MsgType type, std::string body = {});
  void send_raw(std::string_view bytes);
  // Next reply; throws kIo on disconnect.
  Envelope receive();

  // Typed helpers; ERROR replies are rethrown as Error.
  KvDocument make(const KvDocument& settings_and_wrappers);
  Observation reset();
  StepResult step(const ActionInput& action);
  Frame render();
  KvDocument bounds();
  void close();

 private:
  Envelope expect(MsgType type, std::string body, MsgType reply);

  int fd_ = -1;
  std::uint32_t next_id_ = 1;
  std::string buffer_;
};

}  // namespace arena
