// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace arena {

// Stable numeric codes. They travel over the wire in ERROR replies, so
// values must never be renumbered.
enum class Errc : std::uint16_t {
  kProtocolVersion = 1,
  kProtocolState = 2,
  kMalformedEnvelope = 3,
  kUnknownMessage = 4,
  kUnknownGame = 5,
  kInvalidSettings = 6,
  kSessionLimit = 7,
  kActionOutOfRange = 8,
  kNotReset = 9,
  kMissingPlayerKey = 10,
  kUseAfterClose = 11,
  kContinueNotZero = 12,
  kUnknownCharacter = 13,
  kOutfitOutOfRange = 14,
  kDifficultyOutOfRange = 15,
  kStickyWithStepRatio = 16,
  kUnknownKey = 17,
  kPathNotWritable = 18,
  kNoCompleteEpisode = 19,
  kIncompatibleRecordings = 20,
  kBadShard = 21,
  kExhaustedTrajectories = 22,
  kChecksumMismatch = 23,
  kFormatError = 24,
  kPhaseViolation = 25,
  kLengthMismatch = 26,
  kInvalidConfig = 27,
  kIo = 28,
  kBindFailure = 29,
  kInternal = 99,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace arena
