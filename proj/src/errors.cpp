// SPDX-License-Identifier: Apache-2.0
#include "arena/errors.hpp"

namespace arena {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kProtocolVersion: return "ProtocolVersionMismatch";
    case Errc::kProtocolState: return "ProtocolStateError";
    case Errc::kMalformedEnvelope: return "MalformedEnvelope";
    case Errc::kUnknownMessage: return "UnknownMessageType";
    case Errc::kUnknownGame: return "UnknownGame";
    case Errc::kInvalidSettings: return "InvalidSettings";
    case Errc::kSessionLimit: return "SessionLimit";
    case Errc::kActionOutOfRange: return "ActionOutOfRange";
    case Errc::kNotReset: return "NotReset";
    case Errc::kMissingPlayerKey: return "MissingPlayerKey";
    case Errc::kUseAfterClose: return "UseAfterClose";
    case Errc::kContinueNotZero: return "ContinueNotZero";
    case Errc::kUnknownCharacter: return "UnknownCharacter";
    case Errc::kOutfitOutOfRange: return "OutfitOutOfRange";
    case Errc::kDifficultyOutOfRange: return "DifficultyOutOfRange";
    case Errc::kStickyWithStepRatio: return "StickyWithStepRatio";
    case Errc::kUnknownKey: return "UnknownKey";
    case Errc::kPathNotWritable: return "PathNotWritable";
    case Errc::kNoCompleteEpisode: return "NoCompleteEpisode";
    case Errc::kIncompatibleRecordings: return "IncompatibleRecordings";
    case Errc::kBadShard: return "BadShard";
    case Errc::kExhaustedTrajectories: return "ExhaustedTrajectories";
    case Errc::kChecksumMismatch: return "ChecksumMismatch";
    case Errc::kFormatError: return "FormatError";
    case Errc::kPhaseViolation: return "PhaseViolation";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kIo: return "IoError";
    case Errc::kBindFailure: return "BindFailure";
    case Errc::kInternal: return "Internal";
  }
  return "Unknown";
}

}  // namespace arena
