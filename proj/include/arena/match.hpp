// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "arena/game_definition.hpp"
#include "arena/random.hpp"
#include "arena/settings.hpp"

namespace arena {

// Move indices: 0 none, 1 left, 2 up-left, 3 up, 4 up-right, 5 right,
// 6 down-right, 7 down, 8 down-left. Directions are screen-absolute.
enum Move : int {
  kMoveNone = 0,
  kMoveLeft = 1,
  kMoveUpLeft = 2,
  kMoveUp = 3,
  kMoveUpRight = 4,
  kMoveRight = 5,
  kMoveDownRight = 6,
  kMoveDown = 7,
  kMoveDownLeft = 8,
};

int move_dx(int move);
bool move_up(int move);
bool move_down(int move);

enum class Pose : std::uint8_t { kStand, kCrouch, kJump };
enum class AttackPhase : std::uint8_t { kStartup, kActive, kRecovery };
enum class MatchPhase : std::uint8_t { kInRound, kRoundEnd, kStageEnd, kGameOver, kCleared };
enum class RoundOutcome : std::uint8_t { kLeftWins, kRightWins, kDraw };

std::string_view phase_name(MatchPhase phase);

struct Input {
  int move = kMoveNone;
  int attack = 0;
  bool operator==(const Input&) const = default;
};

struct ActiveAttack {
  int attack_index = 0;
  AttackPhase phase = AttackPhase::kStartup;
  int ticks_left = 0;
  bool airborne = false;
  bool operator==(const ActiveAttack&) const = default;
};

struct FighterState {
  int position = 0;
  Pose pose = Pose::kStand;
  int jump_ticks_left = 0;
  int jump_drift = 0;
  std::optional<ActiveAttack> attack;
  bool guarding = false;
  int guard_break_ticks = 0;
  std::vector<int> healths;
  int active_char = 0;
  int round_wins = 0;
  std::vector<int> char_ids;
  std::vector<int> outfit_ids;

  bool operator==(const FighterState&) const = default;
};

// Complete simulation state. fighters[0] is the left (P1) side and
// fighters[1] the right (P2) side; fighters never cross.
struct MatchState {
  int stage_index = 1;
  int round_index = 1;
  int timer_ticks = 0;
  std::array<FighterState, 2> fighters;
  MatchPhase phase = MatchPhase::kInRound;
  std::uint64_t tick = 0;
  Rng rng;
  int consecutive_draws = 0;

  bool two_player = false;
  int agent_side = 0;
  int difficulty = 1;
  int char_outfits = 1;

  bool operator==(const MatchState&) const = default;
};

enum class EventType : std::uint8_t { kHit, kBlocked, kRoundEnd, kStageEnd, kGameOver, kCleared };

struct Event {
  EventType type = EventType::kHit;
  // Attacker for hits/blocks, winner for round/stage/game events (-1: draw).
  int side = -1;
  int value = 0;
  std::optional<RoundOutcome> outcome;
  bool operator==(const Event&) const = default;
};

struct TickResult {
  MatchState state;
  std::vector<Event> events;
};

// Fresh match: stage 1, round 1, full health, mirrored start positions.
// Throws kUnknownCharacter, kOutfitOutOfRange, kDifficultyOutOfRange,
// kInvalidSettings.
MatchState init_match(const GameDefinition& def, const EnvironmentSettings& settings, std::uint64_t seed);

// Advances exactly one simulation tick. Throws kPhaseViolation unless the
// match is in a round, kActionOutOfRange for invalid inputs.
TickResult tick(const MatchState& state, const GameDefinition& def, const std::array<Input, 2>& inputs);
void tick_in_place(MatchState& state, const GameDefinition& def, const std::array<Input, 2>& inputs,
                   std::vector<Event>& events);

// Built-in opponent. Pure function of the state (including its RNG) and
// difficulty; does not advance the RNG.
Input scripted_policy(const MatchState& state, const GameDefinition& def, int side, int difficulty);

// Requires phase == kRoundEnd.
RoundOutcome round_outcome(const MatchState& state, const GameDefinition& def);

// Resolves a finished round (kRoundEnd) or starts the next stage
// (kStageEnd). Throws kPhaseViolation in other phases.
std::vector<Event> advance_phase(MatchState& state, const GameDefinition& def);

// Continue after a 1P game over: replay the current stage from round 1.
void restart_stage(MatchState& state, const GameDefinition& def);

}  // namespace arena
