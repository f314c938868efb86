// SPDX-License-Identifier: Apache-2.0
#include "arena/match.hpp"

#include <algorithm>
#include <cstdlib>

#include "arena/errors.hpp"

namespace arena {
namespace {

int facing(int side) { return side == 0 ? 1 : -1; }

bool eliminated(const FighterState& f, int h_min) {
  return std::all_of(f.healths.begin(), f.healths.end(), [&](int h) { return h <= h_min; });
}

int summed_health(const FighterState& f) {
  int s = 0;
  for (const int h : f.healths) s += h;
  return s;
}

void reset_round(MatchState& s, const GameDefinition& def) {
  s.timer_ticks = def.round_timer_ticks;
  s.phase = MatchPhase::kInRound;
  const int starts[2] = {def.arena_width / 4, def.arena_width - def.arena_width / 4};
  for (int side = 0; side < 2; ++side) {
    auto& f = s.fighters[side];
    f.position = starts[side];
    f.pose = Pose::kStand;
    f.jump_ticks_left = 0;
    f.jump_drift = 0;
    f.attack.reset();
    f.guarding = false;
    f.guard_break_ticks = 0;
    f.healths.assign(def.chars_per_side, def.h_max);
    f.active_char = 0;
  }
}

// Nc distinct roster indices; fixed names are kept, "Random"/missing slots drawn.
std::vector<int> pick_characters(const GameDefinition& def, const std::vector<std::string>& names, Rng& rng) {
  std::vector<int> ids(def.chars_per_side, -1);
  for (std::size_t i = 0; i < names.size() && i < ids.size(); ++i) {
    if (names[i] == kRandomCharacter) continue;
    ids[i] = def.character_index(names[i]);
    if (ids[i] < 0) throw Error(Errc::kUnknownCharacter, "no character '" + names[i] + "' in " + def.game_id);
  }
  for (auto& id : ids) {
    if (id >= 0) continue;
    std::vector<int> pool;
    for (int c = 0; c < static_cast<int>(def.roster.size()); ++c) {
      if (std::find(ids.begin(), ids.end(), c) == ids.end()) pool.push_back(c);
    }
    if (pool.empty()) pool.push_back(0);
    id = pool[uniform_below(rng, pool.size())];
  }
  return ids;
}

std::vector<int> pick_outfits(const GameDefinition& def, const std::vector<int>& chars, int choices, Rng& rng) {
  std::vector<int> out;
  for (const int c : chars) {
    const auto n = std::min<std::size_t>(choices, def.roster[c].outfit_palettes.size());
    out.push_back(static_cast<int>(uniform_below(rng, n)));
  }
  return out;
}

// Keeps the two sides visually distinct when they field the same character.
void separate_outfits(const GameDefinition& def, const FighterState& ref, FighterState& other) {
  for (std::size_t i = 0; i < other.char_ids.size(); ++i) {
    for (std::size_t k = 0; k < ref.char_ids.size(); ++k) {
      if (other.char_ids[i] == ref.char_ids[k] && other.outfit_ids[i] == ref.outfit_ids[k]) {
        const int n = static_cast<int>(def.roster[other.char_ids[i]].outfit_palettes.size());
        other.outfit_ids[i] = (other.outfit_ids[i] + 1) % n;
      }
    }
  }
}

void draw_stage_opponent(MatchState& s, const GameDefinition& def) {
  auto& opp = s.fighters[1 - s.agent_side];
  opp.char_ids = pick_characters(def, {}, s.rng);
  opp.outfit_ids.clear();
  for (const int c : opp.char_ids) {
    opp.outfit_ids.push_back(static_cast<int>(uniform_below(s.rng, def.roster[c].outfit_palettes.size())));
  }
  separate_outfits(def, s.fighters[s.agent_side], opp);
}

void check_input(const Input& in, const GameDefinition& def) {
  if (in.move < 0 || in.move >= kMoveCount) {
    throw Error(Errc::kActionOutOfRange, "move " + std::to_string(in.move));
  }
  if (in.attack < 0 || in.attack >= def.attack_count(true)) {
    throw Error(Errc::kActionOutOfRange, "attack " + std::to_string(in.attack));
  }
}

}  // namespace

int move_dx(int move) {
  switch (move) {
    case kMoveLeft: case kMoveUpLeft: case kMoveDownLeft: return -1;
    case kMoveRight: case kMoveUpRight: case kMoveDownRight: return 1;
    default: return 0;
  }
}

bool move_up(int move) { return move == kMoveUp || move == kMoveUpLeft || move == kMoveUpRight; }
bool move_down(int move) { return move == kMoveDown || move == kMoveDownLeft || move == kMoveDownRight; }

std::string_view phase_name(MatchPhase phase) {
  switch (phase) {
    case MatchPhase::kInRound: return "inRound";
    case MatchPhase::kRoundEnd: return "roundEnd";
    case MatchPhase::kStageEnd: return "stageEnd";
    case MatchPhase::kGameOver: return "gameOver";
    case MatchPhase::kCleared: return "cleared";
  }
  return "?";
}

MatchState init_match(const GameDefinition& def, const EnvironmentSettings& settings, std::uint64_t seed) {
  settings.validate(def);
  MatchState s;
  s.rng.seed(seed);
  s.two_player = settings.two_player();
  switch (settings.player) {
    case PlayerMode::kP1: case PlayerMode::kP1P2: s.agent_side = 0; break;
    case PlayerMode::kP2: s.agent_side = 1; break;
    case PlayerMode::kRandom: s.agent_side = static_cast<int>(uniform_below(s.rng, 2)); break;
  }
  s.difficulty = settings.difficulty;
  s.char_outfits = settings.char_outfits;

  auto& agent = s.fighters[s.agent_side];
  agent.char_ids = pick_characters(def, settings.characters[0], s.rng);
  agent.outfit_ids = pick_outfits(def, agent.char_ids, settings.char_outfits, s.rng);
  if (s.two_player) {
    auto& p2 = s.fighters[1];
    p2.char_ids = pick_characters(def, settings.characters[1], s.rng);
    p2.outfit_ids = pick_outfits(def, p2.char_ids, settings.char_outfits, s.rng);
    separate_outfits(def, s.fighters[0], p2);
  } else {
    draw_stage_opponent(s, def);
  }
  s.stage_index = 1;
  s.round_index = 1;
  s.tick = 0;
  s.consecutive_draws = 0;
  reset_round(s, def);
  return s;
}

TickResult tick(const MatchState& state, const GameDefinition& def, const std::array<Input, 2>& inputs) {
  TickResult r{state, {}};
  tick_in_place(r.state, def, inputs, r.events);
  return r;
}

void tick_in_place(MatchState& s, const GameDefinition& def, const std::array<Input, 2>& inputs,
                   std::vector<Event>& events) {
  if (s.phase != MatchPhase::kInRound) {
    throw Error(Errc::kPhaseViolation, "tick requires inRound, match is " + std::string(phase_name(s.phase)));
  }
  check_input(inputs[0], def);
  check_input(inputs[1], def);

  std::array<bool, 2> hit_pending{false, false};
  std::array<int, 2> old_pos{s.fighters[0].position, s.fighters[1].position};
  std::array<int, 2> new_pos = old_pos;

  for (int side = 0; side < 2; ++side) {
    auto& f = s.fighters[side];
    const auto& in = inputs[side];
    const auto& character = def.roster[f.char_ids[f.active_char]];
    if (f.guard_break_ticks > 0) --f.guard_break_ticks;

    // Attack phase progression for attacks started on earlier ticks.
    if (f.attack) {
      auto& a = *f.attack;
      if (--a.ticks_left <= 0) {
        const auto spec = def.attack(character, a.attack_index);
        if (a.phase == AttackPhase::kStartup) {
          a.phase = AttackPhase::kActive;
          a.ticks_left = spec.active_ticks;
          hit_pending[side] = true;
        } else if (a.phase == AttackPhase::kActive) {
          a.phase = AttackPhase::kRecovery;
          a.ticks_left = spec.recovery_ticks;
        } else {
          f.attack.reset();
        }
      }
    }

    const int dx = move_dx(in.move);
    if (!f.attack && in.attack != 0) {
      const auto spec = def.attack(character, in.attack);
      f.attack = ActiveAttack{in.attack, AttackPhase::kStartup, spec.startup_ticks, f.pose == Pose::kJump};
    }

    if (f.pose == Pose::kJump) {
      if (--f.jump_ticks_left <= 0) {
        f.pose = Pose::kStand;
        f.jump_drift = 0;
      }
    } else if (!f.attack) {
      if (move_up(in.move)) {
        f.pose = Pose::kJump;
        f.jump_ticks_left = def.jump_ticks;
        f.jump_drift = dx;
      } else {
        f.pose = move_down(in.move) ? Pose::kCrouch : Pose::kStand;
      }
    }

    if (f.pose == Pose::kJump) {
      new_pos[side] += f.jump_drift * character.move_speed;
    } else if (!f.attack && f.pose == Pose::kStand) {
      new_pos[side] += dx * character.move_speed;
    }

    f.guarding = f.pose != Pose::kJump && !f.attack && f.guard_break_ticks == 0 && dx == -facing(side);
  }

  // Walls and body separation; fighters never swap sides.
  const int half = def.min_separation / 2;
  for (auto& p : new_pos) p = std::clamp(p, half, def.arena_width - half);
  if (new_pos[1] - new_pos[0] < def.min_separation) {
    const bool moved0 = new_pos[0] > old_pos[0];
    const bool moved1 = new_pos[1] < old_pos[1];
    if (moved0 && !moved1) {
      new_pos[0] = new_pos[1] - def.min_separation;
    } else if (moved1 && !moved0) {
      new_pos[1] = new_pos[0] + def.min_separation;
    } else {
      new_pos = old_pos;
    }
    if (new_pos[1] - new_pos[0] < def.min_separation) new_pos = old_pos;
  }
  s.fighters[0].position = new_pos[0];
  s.fighters[1].position = new_pos[1];

  // Hits are resolved against the pre-hit state of both sides.
  const int distance = new_pos[1] - new_pos[0];
  std::array<int, 2> damage{0, 0};
  std::array<int, 2> guard_break{0, 0};
  for (int side = 0; side < 2; ++side) {
    if (!hit_pending[side]) continue;
    const auto& f = s.fighters[side];
    const auto& defender = s.fighters[1 - side];
    const auto spec = def.attack(def.roster[f.char_ids[f.active_char]], f.attack->attack_index);
    if (distance > spec.range) continue;
    if (f.attack->airborne && defender.pose == Pose::kCrouch) continue;
    guard_break[1 - side] = std::max(guard_break[1 - side], spec.guard_break_ticks);
    if (defender.guarding) {
      events.push_back({EventType::kBlocked, side, spec.damage, std::nullopt});
    } else {
      damage[1 - side] += spec.damage;
      events.push_back({EventType::kHit, side, spec.damage, std::nullopt});
    }
  }
  for (int side = 0; side < 2; ++side) {
    auto& f = s.fighters[side];
    if (guard_break[side] > 0) {
      f.guard_break_ticks = std::max(f.guard_break_ticks, guard_break[side]);
      f.guarding = false;
    }
    if (damage[side] == 0) continue;
    auto& h = f.healths[f.active_char];
    h = std::max(def.h_min, h - damage[side]);
    if (f.attack && f.attack->phase == AttackPhase::kStartup) f.attack.reset();
    if (h <= def.h_min) {
      for (int c = 0; c < def.chars_per_side; ++c) {
        if (f.healths[c] > def.h_min) {
          f.active_char = c;
          break;
        }
      }
    }
  }

  --s.timer_ticks;
  ++s.tick;
  s.rng.discard(1);

  if (eliminated(s.fighters[0], def.h_min) || eliminated(s.fighters[1], def.h_min) || s.timer_ticks <= 0) {
    s.timer_ticks = std::max(s.timer_ticks, 0);
    s.phase = MatchPhase::kRoundEnd;
    const auto outcome = round_outcome(s, def);
    const int winner = outcome == RoundOutcome::kLeftWins ? 0 : outcome == RoundOutcome::kRightWins ? 1 : -1;
    events.push_back({EventType::kRoundEnd, winner, s.round_index, outcome});
  }
}

RoundOutcome round_outcome(const MatchState& s, const GameDefinition& def) {
  if (s.phase != MatchPhase::kRoundEnd) {
    throw Error(Errc::kPhaseViolation, "round_outcome requires roundEnd, match is " +
                                           std::string(phase_name(s.phase)));
  }
  const bool out0 = eliminated(s.fighters[0], def.h_min);
  const bool out1 = eliminated(s.fighters[1], def.h_min);
  RoundOutcome result = RoundOutcome::kDraw;
  if (out0 != out1) {
    result = out1 ? RoundOutcome::kLeftWins : RoundOutcome::kRightWins;
  } else if (!out0) {
    const int h0 = summed_health(s.fighters[0]);
    const int h1 = summed_health(s.fighters[1]);
    if (h0 != h1) result = h0 > h1 ? RoundOutcome::kLeftWins : RoundOutcome::kRightWins;
  }
  if (result == RoundOutcome::kDraw && s.consecutive_draws >= 1) {
    // Second draw in a row: the agent's opponent (1P) or the right side (2P) takes it.
    if (s.two_player) return RoundOutcome::kRightWins;
    return s.agent_side == 0 ? RoundOutcome::kRightWins : RoundOutcome::kLeftWins;
  }
  return result;
}

std::vector<Event> advance_phase(MatchState& s, const GameDefinition& def) {
  std::vector<Event> events;
  if (s.phase == MatchPhase::kStageEnd) {
    ++s.stage_index;
    s.round_index = 1;
    s.consecutive_draws = 0;
    for (auto& f : s.fighters) f.round_wins = 0;
    draw_stage_opponent(s, def);
    reset_round(s, def);
    return events;
  }
  if (s.phase != MatchPhase::kRoundEnd) {
    throw Error(Errc::kPhaseViolation, "advance_phase in " + std::string(phase_name(s.phase)));
  }
  const auto outcome = round_outcome(s, def);
  ++s.round_index;
  if (outcome == RoundOutcome::kDraw) {
    ++s.consecutive_draws;
    reset_round(s, def);
    return events;
  }
  s.consecutive_draws = 0;
  const int winner = outcome == RoundOutcome::kLeftWins ? 0 : 1;
  auto& w = s.fighters[winner];
  ++w.round_wins;
  if (w.round_wins < def.rounds_to_win) {
    reset_round(s, def);
    return events;
  }
  if (s.two_player) {
    s.phase = MatchPhase::kGameOver;
    events.push_back({EventType::kStageEnd, winner, s.stage_index, std::nullopt});
    events.push_back({EventType::kGameOver, winner, s.stage_index, std::nullopt});
  } else if (winner != s.agent_side) {
    s.phase = MatchPhase::kGameOver;
    events.push_back({EventType::kGameOver, winner, s.stage_index, std::nullopt});
  } else if (s.stage_index >= def.max_stages) {
    s.phase = MatchPhase::kCleared;
    events.push_back({EventType::kStageEnd, winner, s.stage_index, std::nullopt});
    events.push_back({EventType::kCleared, winner, s.stage_index, std::nullopt});
  } else {
    s.phase = MatchPhase::kStageEnd;
    events.push_back({EventType::kStageEnd, winner, s.stage_index, std::nullopt});
  }
  return events;
}

void restart_stage(MatchState& s, const GameDefinition& def) {
  if (s.phase != MatchPhase::kGameOver || s.two_player) {
    throw Error(Errc::kPhaseViolation, "restart_stage requires a 1P game over");
  }
  s.round_index = 1;
  s.consecutive_draws = 0;
  for (auto& f : s.fighters) f.round_wins = 0;
  reset_round(s, def);
}

Input scripted_policy(const MatchState& s, const GameDefinition& def, int side, int difficulty) {
  if (difficulty < 1 || difficulty > def.difficulty_levels) {
    throw Error(Errc::kDifficultyOutOfRange, "difficulty " + std::to_string(difficulty));
  }
  Rng gen = s.rng;
  gen.discard(static_cast<unsigned long long>(side) + 1);
  const double level = static_cast<double>(difficulty) / def.difficulty_levels;

  const auto& me = s.fighters[side];
  const auto& opp = s.fighters[1 - side];
  const int toward = side == 0 ? kMoveRight : kMoveLeft;
  const int away = side == 0 ? kMoveLeft : kMoveRight;
  const int distance = s.fighters[1].position - s.fighters[0].position;
  const auto& my_char = def.roster[me.char_ids[me.active_char]];
  const int reach = my_char.attacks[0].range;

  const double u = uniform01(gen);
  const double v = uniform01(gen);
  if (me.attack) return {};

  if (opp.attack && opp.attack->phase != AttackPhase::kRecovery) {
    const auto threat = def.attack(def.roster[opp.char_ids[opp.active_char]], opp.attack->attack_index);
    if (distance <= threat.range + 8 && u < 0.05 + 0.75 * level) {
      return {opp.attack->airborne ? kMoveDown : away, 0};
    }
  }
  if (distance <= reach) {
    if (u < 0.01 + 0.12 * level * level) {
      int button = 1;
      if (opp.guarding && v < level) {
        button = 3;
      } else if (v < 0.35 * (1.0 - level) + 0.1) {
        button = 2;
      }
      return {kMoveNone, button};
    }
    if (u > 1.0 - 0.1 * (1.0 - level)) return {away, 0};
    return {};
  }
  if (u < 0.15 + 0.75 * level) return {toward, 0};
  if (u > 0.97) return {kMoveUp, 0};
  if (v < 0.3) return {away, 0};
  return {};
}

}  // namespace arena
