// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "arena/kv_document.hpp"
#include "arena/spaces.hpp"

namespace arena {

// Big-endian integer helpers for binary framing.
void put_u16(std::string& out, std::uint16_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
std::uint16_t get_u16(std::string_view in, std::size_t offset);
std::uint32_t get_u32(std::string_view in, std::size_t offset);
std::uint64_t get_u64(std::string_view in, std::size_t offset);

// A record is `u32 doc length, KvDocument text, raw frame bytes`. The doc
// describes the frame with `frame.shape=h,w,c` and `frame.dtype`; uint8
// frames are stored as-is and float32 frames little-endian. A record
// without a frame has no frame keys and no trailing bytes.
struct Record {
  KvDocument doc;
  std::optional<Frame> frame;
  bool operator==(const Record&) const = default;
};

std::string encode_record(const Record& record);
void append_record(std::string& out, const Record& record);
// Throws kFormatError when the bytes are not exactly one record.
Record decode_record(std::string_view bytes);

// Observation entries become `obs.<key>=v1,v2,...`; the frame travels as
// the record frame.
Record observation_record(const Observation& obs);
Observation observation_from_record(const Record& record);

// Observation plus `reward` (1P) or `reward.P1`/`reward.P2` (2P), `done`
// and `info.*`.
Record step_record(const StepResult& result);
StepResult step_from_record(const Record& record);

// `<prefix>=...` for 1P, `<prefix>.P1` and `<prefix>.P2` for 2P.
void put_action(KvDocument& doc, std::string_view prefix, const ActionInput& action);
// Throws kMissingPlayerKey when neither form is present.
ActionInput get_action(const KvDocument& doc, std::string_view prefix);

}  // namespace arena
