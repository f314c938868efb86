// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "arena/env.hpp"
#include "arena/errors.hpp"
#include "arena/trajectory.hpp"
#include "arena/wrappers.hpp"

namespace arena {

// Envelope: u32 length | u8 type | u32 request id | body, integers
// big-endian, length = 5 + body size.
inline constexpr std::uint32_t kMaxPayload = 16u << 20;
inline constexpr std::uint32_t kProtocolVersion = 1;
inline constexpr std::uint16_t kDefaultPort = 9431;

enum class MsgType : std::uint8_t {
  kHello = 0x00,
  kMake = 0x01,
  kReset = 0x02,
  kStep = 0x03,
  kRender = 0x04,
  kRecordStart = 0x05,
  kRecordStop = 0x06,
  kBounds = 0x07,
  kClose = 0x08,
  kOk = 0x10,
  kObs = 0x11,
  kStepResult = 0x12,
  kFrame = 0x13,
  kBoundsReply = 0x14,
  kError = 0x7F,
};

std::string_view msg_type_name(MsgType type);

struct Envelope {
  MsgType type = MsgType::kOk;
  std::uint32_t request_id = 0;
  std::string body;
  bool operator==(const Envelope&) const = default;
};

std::string encode_envelope(const Envelope& env);
// Decodes the first envelope in `buffer`. Returns nullopt when more bytes are
// needed; throws kMalformedEnvelope for lengths below 5 or above kMaxPayload.
std::optional<Envelope> decode_envelope(std::string_view buffer, std::size_t* consumed);

// ERROR body: u16 code | UTF-8 message.
std::string error_body(Errc code, std::string_view message);
std::pair<std::uint16_t, std::string> parse_error_body(std::string_view body);

// Request bodies are KvDocuments, possibly empty. STEP carries `action` (1P)
// or `action.P1`/`action.P2` (2P); RECORD_START carries file_path and
// user_name.
// Reply bodies:
//   OK          document
//   OBS         record (codec.hpp) of the observation
//   STEPRESULT  record of the step result
//   FRAME       record holding only the frame
//   BOUNDS      document: min, max, delta_h and, with reward normalization,
//               normalized.min / normalized.max
//   ERROR       error_body()
class Session {
 public:
  explicit Session(std::uint64_t id = 0, const GameRegistry& registry = GameRegistry::builtin());
  ~Session();

  // Never throws; failures become ERROR replies.
  Envelope handle(const Envelope& request);

  std::uint64_t id() const { return id_; }
  bool has_env() const { return env_ != nullptr; }

 private:
  std::string dispatch(const Envelope& request, MsgType& reply_type);
  Env& require_env();
  void stop_recording(KvDocument* report);

  std::uint64_t id_;
  const GameRegistry& registry_;
  std::unique_ptr<Env> env_;
  RecordingEnv* recorder_ = nullptr;  // outermost layer of env_ while recording
  WrapperConfig wrappers_;
};

}  // namespace arena
