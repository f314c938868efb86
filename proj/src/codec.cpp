// SPDX-License-Identifier: Apache-2.0
#include "arena/codec.hpp"

#include <bit>
#include <cstring>

#include "arena/errors.hpp"

namespace arena {
namespace {

constexpr std::string_view kObsPrefix = "obs.";

EncodedAction to_action(const std::vector<std::int64_t>& v) { return {v.begin(), v.end()}; }

std::vector<std::int64_t> to_ints(const EncodedAction& a) { return {a.begin(), a.end()}; }

}  // namespace

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>(v >> s));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<char>(v >> s));
}

std::uint16_t get_u16(std::string_view in, std::size_t offset) {
  if (offset + 2 > in.size()) throw Error(Errc::kFormatError, "truncated u16");
  return static_cast<std::uint16_t>((static_cast<std::uint8_t>(in[offset]) << 8) |
                                    static_cast<std::uint8_t>(in[offset + 1]));
}

std::uint32_t get_u32(std::string_view in, std::size_t offset) {
  if (offset + 4 > in.size()) throw Error(Errc::kFormatError, "truncated u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<std::uint8_t>(in[offset + i]);
  return v;
}

std::uint64_t get_u64(std::string_view in, std::size_t offset) {
  if (offset + 8 > in.size()) throw Error(Errc::kFormatError, "truncated u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | static_cast<std::uint8_t>(in[offset + i]);
  return v;
}

void append_record(std::string& out, const Record& record) {
  KvDocument doc = record.doc;
  if (record.frame) {
    const Frame& f = *record.frame;
    doc.set_int_list("frame.shape", {f.shape.height, f.shape.width, f.shape.channels});
    doc.set("frame.dtype", std::string(dtype_name(f.dtype)));
  }
  const std::string text = doc.serialize();
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  if (!record.frame) return;
  const Frame& f = *record.frame;
  if (f.dtype == DType::kU8) {
    out.append(reinterpret_cast<const char*>(f.u8.data()), f.u8.size());
    return;
  }
  const std::size_t start = out.size();
  out.resize(start + f.f32.size() * 4);
  char* dst = out.data() + start;
  for (const float x : f.f32) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(x);
    for (int i = 0; i < 4; ++i) *dst++ = static_cast<char>(bits >> (8 * i));
  }
}

std::string encode_record(const Record& record) {
  std::string out;
  append_record(out, record);
  return out;
}

Record decode_record(std::string_view bytes) {
  const std::uint32_t doc_len = get_u32(bytes, 0);
  if (4 + static_cast<std::size_t>(doc_len) > bytes.size()) throw Error(Errc::kFormatError, "record doc truncated");
  Record r;
  r.doc = KvDocument::parse(bytes.substr(4, doc_len));
  std::string_view rest = bytes.substr(4 + doc_len);
  if (!r.doc.contains("frame.shape")) {
    if (!rest.empty()) throw Error(Errc::kFormatError, "unexpected bytes after frameless record");
    return r;
  }
  const auto shape = r.doc.get_int_list("frame.shape");
  if (shape.size() != 3 || shape[0] < 0 || shape[1] < 0 || shape[2] < 0) {
    throw Error(Errc::kFormatError, "frame.shape must be h,w,c");
  }
  Frame f;
  f.shape = {static_cast<int>(shape[0]), static_cast<int>(shape[1]), static_cast<int>(shape[2])};
  f.dtype = dtype_from_name(r.doc.get_string("frame.dtype"));
  r.doc.erase("frame.shape");
  r.doc.erase("frame.dtype");
  if (rest.size() != f.byte_size()) {
    throw Error(Errc::kFormatError, "frame byte count " + std::to_string(rest.size()) + " does not match shape (" +
                                        std::to_string(f.byte_size()) + ")");
  }
  if (f.dtype == DType::kU8) {
    f.u8.assign(rest.begin(), rest.end());
  } else {
    f.f32.resize(f.value_count());
    for (std::size_t k = 0; k < f.f32.size(); ++k) {
      std::uint32_t bits = 0;
      for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(rest[4 * k + i])) << (8 * i);
      f.f32[k] = std::bit_cast<float>(bits);
    }
  }
  r.frame = std::move(f);
  return r;
}

Record observation_record(const Observation& obs) {
  Record r;
  for (const auto& [key, value] : obs.entries) {
    if (const auto* f = std::get_if<Frame>(&value)) {
      if (key != kFrameKey) throw Error(Errc::kFormatError, "only the 'frame' entry may hold an image");
      r.frame = *f;
    } else {
      r.doc.set_real_list(std::string(kObsPrefix) + key, std::get<std::vector<double>>(value));
    }
  }
  return r;
}

Observation observation_from_record(const Record& record) {
  Observation obs;
  const KvDocument values = record.doc.subset(kObsPrefix);
  for (const auto& [key, value] : values.entries()) {
    obs.entries.emplace(key, values.get_real_list(key));
  }
  if (record.frame) obs.entries.emplace(std::string(kFrameKey), *record.frame);
  return obs;
}

Record step_record(const StepResult& result) {
  Record r = observation_record(result.observation);
  if (result.reward.size() == 1) {
    r.doc.set_real("reward", result.reward[0]);
  } else if (result.reward.size() == 2) {
    r.doc.set_real("reward.P1", result.reward[0]);
    r.doc.set_real("reward.P2", result.reward[1]);
  } else {
    throw Error(Errc::kFormatError, "reward must have 1 or 2 entries");
  }
  r.doc.set_bool("done", result.done);
  r.doc.set_bool("info.round_done", result.info.round_done);
  r.doc.set_bool("info.stage_done", result.info.stage_done);
  r.doc.set_bool("info.game_done", result.info.game_done);
  r.doc.set_bool("info.episode_done", result.info.episode_done);
  if (result.info.recorded_action) put_action(r.doc, "info.recorded_action", *result.info.recorded_action);
  return r;
}

StepResult step_from_record(const Record& record) {
  StepResult s;
  s.observation = observation_from_record(record);
  const KvDocument& d = record.doc;
  if (d.contains("reward")) {
    s.reward = {d.get_real("reward")};
  } else {
    s.reward = {d.get_real("reward.P1"), d.get_real("reward.P2")};
  }
  s.done = d.get_bool("done");
  s.info.round_done = d.get_bool_or("info.round_done", false);
  s.info.stage_done = d.get_bool_or("info.stage_done", false);
  s.info.game_done = d.get_bool_or("info.game_done", false);
  s.info.episode_done = d.get_bool_or("info.episode_done", false);
  if (d.contains("info.recorded_action") || d.contains("info.recorded_action.P1")) {
    s.info.recorded_action = get_action(d, "info.recorded_action");
  }
  return s;
}

void put_action(KvDocument& doc, std::string_view prefix, const ActionInput& action) {
  const std::string p(prefix);
  if (action.players.empty()) {
    doc.set_int_list(p, to_ints(action.single));
    return;
  }
  for (const auto& [player, a] : action.players) doc.set_int_list(p + "." + player, to_ints(a));
}

ActionInput get_action(const KvDocument& doc, std::string_view prefix) {
  const std::string p(prefix);
  if (doc.contains(p)) return ActionInput::one(to_action(doc.get_int_list(p)));
  const std::string k1 = p + ".P1";
  const std::string k2 = p + ".P2";
  if (!doc.contains(k1) && !doc.contains(k2)) throw Error(Errc::kMissingPlayerKey, "missing '" + p + "'");
  ActionInput a;
  if (doc.contains(k1)) a.players.emplace("P1", to_action(doc.get_int_list(k1)));
  if (doc.contains(k2)) a.players.emplace("P2", to_action(doc.get_int_list(k2)));
  return a;
}

}  // namespace arena
