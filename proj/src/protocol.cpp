// SPDX-License-Identifier: Apache-2.0
#include "arena/protocol.hpp"

#include "arena/codec.hpp"

namespace arena {

std::string_view msg_type_name(MsgType type) {
  switch (type) {
    case MsgType::kHello: return "HELLO";
    case MsgType::kMake: return "MAKE";
    case MsgType::kReset: return "RESET";
    case MsgType::kStep: return "STEP";
    case MsgType::kRender: return "RENDER";
    case MsgType::kRecordStart: return "RECORD_START";
    case MsgType::kRecordStop: return "RECORD_STOP";
    case MsgType::kBounds: return "BOUNDS";
    case MsgType::kClose: return "CLOSE";
    case MsgType::kOk: return "OK";
    case MsgType::kObs: return "OBS";
    case MsgType::kStepResult: return "STEPRESULT";
    case MsgType::kFrame: return "FRAME";
    case MsgType::kBoundsReply: return "BOUNDS";
    case MsgType::kError: return "ERROR";
  }
  return "UNKNOWN";
}

std::string encode_envelope(const Envelope& env) {
  if (env.body.size() > kMaxPayload - 5) throw Error(Errc::kMalformedEnvelope, "payload exceeds 16 MiB");
  std::string out;
  out.reserve(9 + env.body.size());
  put_u32(out, static_cast<std::uint32_t>(5 + env.body.size()));
  out.push_back(static_cast<char>(env.type));
  put_u32(out, env.request_id);
  out += env.body;
  return out;
}

std::optional<Envelope> decode_envelope(std::string_view buffer, std::size_t* consumed) {
  if (buffer.size() < 4) return std::nullopt;
  const std::uint32_t length = get_u32(buffer, 0);
  if (length < 5) throw Error(Errc::kMalformedEnvelope, "envelope length " + std::to_string(length) + " < 5");
  if (length > kMaxPayload) throw Error(Errc::kMalformedEnvelope, "envelope length exceeds 16 MiB");
  if (buffer.size() < 4 + static_cast<std::size_t>(length)) return std::nullopt;
  Envelope env;
  env.type = static_cast<MsgType>(static_cast<std::uint8_t>(buffer[4]));
  env.request_id = get_u32(buffer, 5);
  env.body.assign(buffer.substr(9, length - 5));
  if (consumed) *consumed = 4 + length;
  return env;
}

std::string error_body(Errc code, std::string_view message) {
  std::string out;
  put_u16(out, static_cast<std::uint16_t>(code));
  out += message;
  return out;
}

std::pair<std::uint16_t, std::string> parse_error_body(std::string_view body) {
  if (body.size() < 2) throw Error(Errc::kMalformedEnvelope, "ERROR body shorter than 2 bytes");
  return {get_u16(body, 0), std::string(body.substr(2))};
}

Session::Session(std::uint64_t id, const GameRegistry& registry) : id_(id), registry_(registry) {}

Session::~Session() {
  if (recorder_) {
    KvDocument ignored;
    try {
      stop_recording(&ignored);
    } catch (const std::exception&) {
    }
  }
}

namespace {

// A body that is not a document makes the whole message malformed.
KvDocument parse_body(const Envelope& req) {
  try {
    return KvDocument::parse(req.body);
  } catch (const Error& e) {
    throw Error(Errc::kMalformedEnvelope, std::string(msg_type_name(req.type)) + " body: " + e.what());
  }
}

}  // namespace

Env& Session::require_env() {
  if (!env_) throw Error(Errc::kProtocolState, "no environment; send MAKE first");
  return *env_;
}

void Session::stop_recording(KvDocument* report) {
  auto* rec = recorder_;
  recorder_ = nullptr;
  std::unique_ptr<Env> owner = std::move(env_);
  // env_ was the recorder itself; take the wrapped env back before finalizing.
  FinalizeReport fr;
  std::optional<Error> failure;
  try {
    fr = rec->finalize();
  } catch (const Error& e) {
    failure = e;
  }
  env_ = rec->release();
  if (failure) throw *failure;
  report->set("file_path", fr.path);
  report->set_int("episode_count", static_cast<std::int64_t>(fr.episode_count));
  report->set_int_list("step_counts", {fr.step_counts.begin(), fr.step_counts.end()});
  report->set_int("dropped_steps", fr.dropped_steps);
}

std::string Session::dispatch(const Envelope& req, MsgType& reply_type) {
  reply_type = MsgType::kOk;
  switch (req.type) {
    case MsgType::kHello: {
      const KvDocument doc = parse_body(req);
      const auto version = doc.get_int_or("protocol_version", kProtocolVersion);
      if (version != kProtocolVersion) {
        throw Error(Errc::kProtocolVersion, "server speaks protocol " + std::to_string(kProtocolVersion) +
                                                ", client asked for " + std::to_string(version));
      }
      KvDocument reply;
      reply.set_int("protocol_version", kProtocolVersion);
      reply.set_int("session_id", static_cast<std::int64_t>(id_));
      return reply.serialize();
    }
    case MsgType::kMake: {
      const KvDocument doc = parse_body(req);
      KvDocument settings_doc;
      for (const auto& [key, value] : doc.entries()) {
        if (!key.starts_with(kWrapperPrefix)) settings_doc.set(key, value);
      }
      EnvironmentSettings settings = EnvironmentSettings::from_document(settings_doc);
      WrapperConfig wrappers = WrapperConfig::from_document(doc);
      auto def = registry_.find(settings.game_id);
      auto env = wrap(std::make_unique<ArenaEnv>(std::move(def), settings), wrappers);
      if (recorder_) {
        KvDocument ignored;
        stop_recording(&ignored);
      }
      if (env_) env_->close();
      env_ = std::move(env);
      wrappers_ = std::move(wrappers);
      KvDocument reply = env_->action_space().describe();
      reply.merge(describe_observation_space(env_->observation_space()));
      reply.set("game_id", settings.game_id);
      reply.set_int("session_id", static_cast<std::int64_t>(id_));
      return reply.serialize();
    }
    case MsgType::kReset: {
      reply_type = MsgType::kObs;
      return encode_record(observation_record(require_env().reset()));
    }
    case MsgType::kStep: {
      Env& env = require_env();
      const KvDocument doc = parse_body(req);
      const StepResult r = env.step(get_action(doc, "action"));
      reply_type = MsgType::kStepResult;
      return encode_record(step_record(r));
    }
    case MsgType::kRender: {
      Record rec;
      rec.frame = require_env().render();
      reply_type = MsgType::kFrame;
      return encode_record(rec);
    }
    case MsgType::kRecordStart: {
      require_env();
      if (recorder_) throw Error(Errc::kProtocolState, "already recording");
      const KvDocument doc = parse_body(req);
      // Checked first: a failing constructor would take the env down with it.
      RecordingEnv::check_writable(doc.get_string("file_path"));
      auto rec = std::make_unique<RecordingEnv>(std::move(env_), doc.get_string("file_path"),
                                                doc.get_string_or("user_name", ""), wrappers_);
      recorder_ = rec.get();
      env_ = std::move(rec);
      return KvDocument().serialize();
    }
    case MsgType::kRecordStop: {
      require_env();
      if (!recorder_) throw Error(Errc::kProtocolState, "not recording");
      KvDocument reply;
      stop_recording(&reply);
      return reply.serialize();
    }
    case MsgType::kBounds: {
      Env& env = require_env();
      const RewardBounds b = episode_reward_bounds(env.game(), env.settings());
      KvDocument reply;
      reply.set_int("min", b.min);
      reply.set_int("max", b.max);
      reply.set_int("delta_h", env.game().delta_h());
      if (wrappers_.reward_normalization) {
        const double k = *wrappers_.reward_normalization;
        reply.set_real("normalized.k", k);
        reply.set_real("normalized.min", normalize_reward(static_cast<double>(b.min), k, env.game().delta_h()));
        reply.set_real("normalized.max", normalize_reward(static_cast<double>(b.max), k, env.game().delta_h()));
      }
      reply_type = MsgType::kBoundsReply;
      return reply.serialize();
    }
    case MsgType::kClose: {
      if (recorder_) {
        KvDocument ignored;
        try {
          stop_recording(&ignored);
        } catch (const Error&) {
        }
      }
      if (env_) env_->close();
      env_.reset();
      return KvDocument().serialize();
    }
    default:
      throw Error(Errc::kUnknownMessage, "unknown message type 0x" + [&] {
        static const char* hex = "0123456789abcdef";
        const auto v = static_cast<std::uint8_t>(req.type);
        return std::string{hex[v >> 4], hex[v & 15]};
      }());
  }
}

Envelope Session::handle(const Envelope& request) {
  Envelope reply;
  reply.request_id = request.request_id;
  try {
    reply.body = dispatch(request, reply.type);
  } catch (const Error& e) {
    reply.type = MsgType::kError;
    reply.body = error_body(e.code(), e.what());
  } catch (const std::exception& e) {
    reply.type = MsgType::kError;
    reply.body = error_body(Errc::kInternal, e.what());
  }
  return reply;
}

}  // namespace arena
