// SPDX-License-Identifier: Apache-2.0
#include "arena/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <iostream>

#include "arena/codec.hpp"

namespace arena {
namespace {

bool send_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

std::uint16_t port_from_environment(std::uint16_t fallback) {
  const char* v = std::getenv("ARENA_PORT");
  if (!v || !*v) return fallback;
  const auto port = parse_int(v);
  if (!port || *port < 0 || *port > 65535) throw Error(Errc::kInvalidConfig, std::string("bad ARENA_PORT '") + v + "'");
  return static_cast<std::uint16_t>(*port);
}

Server::Server(ServerOptions options, const GameRegistry& registry)
    : options_(std::move(options)), registry_(registry) {}

Server::~Server() {
  stop();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(threads_mutex_);
    threads.swap(threads_);
  }
  for (auto& t : threads) t.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void Server::start() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(options_.port);
  if (const int rc = ::getaddrinfo(options_.bind_address.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw Error(Errc::kBindFailure, "cannot resolve '" + options_.bind_address + "': " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      listen_fd_ = fd;
      break;
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (listen_fd_ < 0) {
    throw Error(Errc::kBindFailure, "cannot bind " + options_.bind_address + ":" + port + ": " + last_error);
  }
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                                 : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

void Server::stop() { stopping_ = true; }

void Server::run() {
  if (listen_fd_ < 0) start();
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    set_nodelay(fd);
    if (active_.load() >= options_.max_sessions) {
      const Envelope refusal{MsgType::kError, 0,
                             error_body(Errc::kSessionLimit, "session limit of " +
                                                                 std::to_string(options_.max_sessions) + " reached")};
      send_all(fd, encode_envelope(refusal));
      ::close(fd);
      continue;
    }
    ++active_;
    const std::uint64_t id = next_session_++;
    std::lock_guard lock(threads_mutex_);
    threads_.emplace_back([this, fd, id] { serve_connection(fd, id); });
  }
}

void Server::serve_connection(int fd, std::uint64_t session_id) {
  Session session(session_id, registry_);
  std::string buffer;
  char chunk[65536];
  auto last_activity = std::chrono::steady_clock::now();
  while (!stopping_) {
    std::size_t consumed = 0;
    std::optional<Envelope> request;
    try {
      request = decode_envelope(buffer, &consumed);
    } catch (const Error& e) {
      // The stream cannot be resynchronized after a bad length.
      send_all(fd, encode_envelope({MsgType::kError, 0, error_body(e.code(), e.what())}));
      break;
    }
    if (request) {
      buffer.erase(0, consumed);
      if (!send_all(fd, encode_envelope(session.handle(*request)))) break;
      last_activity = std::chrono::steady_clock::now();
      continue;
    }
    pollfd p{fd, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) {
      if (std::chrono::steady_clock::now() - last_activity > options_.idle_timeout) break;
      continue;
    }
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    last_activity = std::chrono::steady_clock::now();
  }
  ::close(fd);
  --active_;
}

// ---- client ----

WireClient::WireClient(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) {
    throw Error(Errc::kIo, "cannot resolve '" + host + "'");
  }
  for (addrinfo* ai = res; ai && fd_ < 0; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
    } else {
      ::close(fd);
    }
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw Error(Errc::kIo, "cannot connect to " + host + ":" + std::to_string(port));
  set_nodelay(fd_);
}

WireClient::~WireClient() {
  if (fd_ >= 0) ::close(fd_);
}

void WireClient::send_raw(std::string_view bytes) {
  if (!send_all(fd_, bytes)) throw Error(Errc::kIo, "send failed");
}

Envelope WireClient::receive() {
  char chunk[65536];
  while (true) {
    std::size_t consumed = 0;
    if (auto env = decode_envelope(buffer_, &consumed)) {
      buffer_.erase(0, consumed);
      return *env;
    }
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(Errc::kIo, "connection closed by server");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

Envelope WireClient::call(MsgType type, std::string body) {
  const std::uint32_t id = next_id_++;
  send_raw(encode_envelope({type, id, std::move(body)}));
  Envelope reply = receive();
  if (reply.request_id != id && reply.type != MsgType::kError) {
    throw Error(Errc::kProtocolState, "reply id " + std::to_string(reply.request_id) + " != " + std::to_string(id));
  }
  return reply;
}

Envelope WireClient::expect(MsgType type, std::string body, MsgType reply_type) {
  Envelope reply = call(type, std::move(body));
  if (reply.type == MsgType::kError) {
    const auto [code, message] = parse_error_body(reply.body);
    throw Error(static_cast<Errc>(code), message);
  }
  if (reply.type != reply_type) {
    throw Error(Errc::kProtocolState, std::string("expected ") + std::string(msg_type_name(reply_type)) + ", got " +
                                          std::string(msg_type_name(reply.type)));
  }
  return reply;
}

KvDocument WireClient::make(const KvDocument& doc) {
  return KvDocument::parse(expect(MsgType::kMake, doc.serialize(), MsgType::kOk).body);
}

Observation WireClient::reset() {
  return observation_from_record(decode_record(expect(MsgType::kReset, {}, MsgType::kObs).body));
}

StepResult WireClient::step(const ActionInput& action) {
  KvDocument doc;
  put_action(doc, "action", action);
  return step_from_record(decode_record(expect(MsgType::kStep, doc.serialize(), MsgType::kStepResult).body));
}

Frame WireClient::render() {
  Record r = decode_record(expect(MsgType::kRender, {}, MsgType::kFrame).body);
  if (!r.frame) throw Error(Errc::kFormatError, "FRAME reply without a frame");
  return std::move(*r.frame);
}

KvDocument WireClient::bounds() {
  return KvDocument::parse(expect(MsgType::kBounds, {}, MsgType::kBoundsReply).body);
}

void WireClient::close() { expect(MsgType::kClose, {}, MsgType::kOk); }

}  // namespace arena
