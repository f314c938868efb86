// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "arena/frame.hpp"

namespace arena {

inline constexpr int kTicksPerSecond = 60;
inline constexpr int kAttackButtons = 3;
inline constexpr int kMoveCount = 9;

struct AttackSpec {
  int damage = 0;
  int range = 0;
  int startup_ticks = 1;
  int active_ticks = 1;
  int recovery_ticks = 1;
  // Ticks the defender cannot guard after being reached by this attack.
  int guard_break_ticks = 0;

  bool operator==(const AttackSpec&) const = default;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

struct CharacterSpec {
  std::string name;
  int move_speed = 1;
  std::array<AttackSpec, kAttackButtons> attacks{};
  std::vector<Rgb> outfit_palettes;
};

// Static parameters of one synthetic game, loaded from data/games/<id>.json.
struct GameDefinition {
  int format_version = 1;
  std::string game_id;
  int h_max = 0;
  int h_min = 0;
  int chars_per_side = 1;   // Nc
  int max_stages = 1;       // Ns
  int rounds_to_win = 1;    // Nr
  std::vector<CharacterSpec> roster;
  int arena_width = 512;
  int round_timer_ticks = 60 * kTicksPerSecond;
  int jump_ticks = 36;
  int min_separation = 32;
  FrameShape native_frame{256, 256, 3};
  int difficulty_levels = 4;
  // Each combo lists 1-based attack buttons pressed together.
  std::vector<std::vector<int>> attack_combos;

  int delta_h() const { return h_max - h_min; }
  int round_timer_seconds() const { return (round_timer_ticks + kTicksPerSecond - 1) / kTicksPerSecond; }

  // Attack indices: 0 = none, 1..3 = single buttons, 4.. = combos.
  int attack_count(bool with_combos) const {
    return 1 + kAttackButtons + (with_combos ? static_cast<int>(attack_combos.size()) : 0);
  }
  // Resolved attack for `attack_index` >= 1. Combos sum damage and take the
  // max of startup/active/recovery/guard-break and the min of range.
  AttackSpec attack(const CharacterSpec& character, int attack_index) const;

  // Index into roster, or -1.
  int character_index(std::string_view name) const;

  // Throws Error(kFormatError) when an invariant does not hold.
  void validate() const;
};

GameDefinition parse_game_definition(std::string_view json_text);

// Read-only catalog of game definitions. The shipped files are compiled into
// the binary; if ARENA_GAMES_DIR is set, *.json files there are loaded too and
// replace shipped entries with the same game id. The JSON may contain
// comments.
class GameRegistry {
 public:
  static const GameRegistry& builtin();

  void add(GameDefinition def);
  // Throws Error(kUnknownGame).
  std::shared_ptr<const GameDefinition> find(std::string_view game_id) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, std::shared_ptr<const GameDefinition>, std::less<>> games_;
};

}  // namespace arena
