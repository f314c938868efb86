// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "arena/frame.hpp"
#include "arena/kv_document.hpp"
#include "arena/match.hpp"
#include "arena/random.hpp"
#include "arena/settings.hpp"

namespace arena {

// Discrete: {index}. MultiDiscrete: {move, attack}.
using EncodedAction = std::vector<int>;

struct ActionInput {
  EncodedAction single;                          // 1P
  std::map<std::string, EncodedAction> players;  // 2P, keys "P1" and "P2"

  static ActionInput one(EncodedAction a) { return {std::move(a), {}}; }
  static ActionInput two(EncodedAction p1, EncodedAction p2) {
    return {{}, {{"P1", std::move(p1)}, {"P2", std::move(p2)}}};
  }
  bool operator==(const ActionInput&) const = default;
};

// Discrete index order: the 9 moves (0 = no-op), then each non-empty attack
// (single buttons, then combos). MultiDiscrete: (move, attack), 0 = no-op.
struct ActionSpaceSpec {
  ActionSpaceKind kind = ActionSpaceKind::kDiscrete;
  bool combos = false;
  int move_count = kMoveCount;
  int attack_count = 4;  // includes "no attack"
  int players = 1;

  int discrete_size() const { return move_count + attack_count - 1; }
  std::array<int, 2> multi_sizes() const { return {move_count, attack_count}; }

  // Throws kActionOutOfRange.
  Input decode(const EncodedAction& action) const;
  EncodedAction encode(const Input& input) const;
  EncodedAction noop() const;
  EncodedAction sample(Rng& rng) const;
  bool contains(const EncodedAction& action) const;

  KvDocument describe() const;
  bool operator==(const ActionSpaceSpec&) const = default;
};

ActionSpaceSpec make_action_space(const GameDefinition& def, const EnvironmentSettings& settings);

enum class SpaceKind : std::uint8_t { kBox, kDiscrete, kBinary };

struct SpaceSpec {
  SpaceKind kind = SpaceKind::kBox;
  std::vector<int> shape;
  double low = 0;
  double high = 0;
  int n = 0;  // discrete cardinality
  bool is_frame = false;
  DType frame_dtype = DType::kU8;

  std::size_t element_count() const;
  bool operator==(const SpaceSpec&) const = default;
};

inline constexpr std::string_view kFrameKey = "frame";

// Keys are paths; '/' separates nesting levels ("P1/health").
using ObservationSpace = std::map<std::string, SpaceSpec>;
using ObsValue = std::variant<Frame, std::vector<double>>;

struct Observation {
  std::map<std::string, ObsValue> entries;

  const Frame* frame() const;
  Frame* frame();
  const std::vector<double>* values(std::string_view key) const;
  bool operator==(const Observation&) const = default;
};

KvDocument describe_observation_space(const ObservationSpace& space);
ObservationSpace parse_observation_space(const KvDocument& doc);
// True when every entry of `obs` matches `space` in key set, kind and shape.
bool conforms(const ObservationSpace& space, const Observation& obs, std::string* why = nullptr);

struct StepInfo {
  bool round_done = false;
  bool stage_done = false;
  bool game_done = false;
  bool episode_done = false;
  // Set by the replay environment: the action the recording player took.
  std::optional<ActionInput> recorded_action;
  bool operator==(const StepInfo&) const = default;
};

struct StepResult {
  Observation observation;
  // One entry in 1P; {P1, P2} in 2P.
  std::vector<double> reward;
  bool done = false;
  StepInfo info;
  bool operator==(const StepResult&) const = default;
};

}  // namespace arena
