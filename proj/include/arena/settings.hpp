// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "arena/frame.hpp"
#include "arena/kv_document.hpp"

namespace arena {

struct GameDefinition;

enum class PlayerMode : std::uint8_t { kP1, kP2, kRandom, kP1P2 };
enum class ActionSpaceKind : std::uint8_t { kDiscrete, kMultiDiscrete };

std::string_view player_mode_name(PlayerMode mode);
std::string_view action_space_name(ActionSpaceKind kind);

inline constexpr std::string_view kRandomCharacter = "Random";

// Per-environment configuration. Document keys:
//   game_id, player (P1|P2|Random|P1P2), step_ratio, frame_shape (h,w,c),
//   continue_game, difficulty, characters, characters.P2, char_outfits,
//   action_space (Discrete|MultiDiscrete), attack_but_combination, hardcore, seed
struct EnvironmentSettings {
  std::string game_id = "duel";
  PlayerMode player = PlayerMode::kP1;
  int step_ratio = 6;
  // (0,0,c) keeps the native resolution; c=1 converts to grayscale.
  FrameShape frame_shape{0, 0, 3};
  double continue_game = 0.0;
  int difficulty = 3;
  // [0]: the agent in 1P, player one in 2P. [1]: player two (2P only).
  // Empty lists or "Random" entries are drawn from the roster at reset.
  std::array<std::vector<std::string>, 2> characters;
  int char_outfits = 1;
  ActionSpaceKind action_space = ActionSpaceKind::kDiscrete;
  bool attack_but_combination = false;
  bool hardcore = false;
  std::uint64_t seed = 0;

  bool two_player() const { return player == PlayerMode::kP1P2; }

  KvDocument to_document() const;
  // Throws Error(kInvalidSettings) naming the offending key; unknown keys
  // are rejected.
  static EnvironmentSettings from_document(const KvDocument& doc);

  // Checks the settings against a game. Throws kInvalidSettings,
  // kUnknownCharacter, kOutfitOutOfRange or kDifficultyOutOfRange.
  void validate(const GameDefinition& def) const;

  bool operator==(const EnvironmentSettings&) const = default;
};

}  // namespace arena
