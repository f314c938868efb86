// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "arena/game_definition.hpp"
#include "arena/match.hpp"
#include "arena/random.hpp"
#include "arena/settings.hpp"
#include "arena/spaces.hpp"

namespace arena {

// Episodic environment interface shared by the base environment and every
// wrapper. One instance is used serially.
class Env {
 public:
  virtual ~Env() = default;

  virtual Observation reset() = 0;
  virtual StepResult step(const ActionInput& action) = 0;
  virtual const ActionSpaceSpec& action_space() const = 0;
  virtual const ObservationSpace& observation_space() const = 0;
  // Native pre-warp frame of the current match state.
  virtual Frame render() = 0;
  virtual void close() = 0;

  virtual const GameDefinition& game() const = 0;
  virtual const EnvironmentSettings& settings() const = 0;
  // Environment-level RNG (player side draws, continues, no-op resets).
  virtual Rng& rng() = 0;

  bool two_player() const { return settings().two_player(); }
  ActionInput noop_action() const;
  ActionInput sample_action(Rng& rng) const;
};

// Health arrays per side: [0] left, [1] right.
using SideHealths = std::array<std::vector<int>, 2>;

// Health-delta reward in integer health units: damage dealt to the agent's
// opponent minus damage received, summed over characters. Throws
// kLengthMismatch when the arrays disagree in length.
std::int64_t compute_reward_units(const SideHealths& before, const SideHealths& after, int agent_side);
double compute_reward(const SideHealths& before, const SideHealths& after, int agent_side);

struct RewardBounds {
  std::int64_t min = 0;
  std::int64_t max = 0;
  bool operator==(const RewardBounds&) const = default;
};

// Cumulative episode reward bounds for continue_game == 0:
//   min = -Nc ((Ns - 1)(Nr - 1) + Nr) dH,   max = Nc Ns Nr dH,   Ns = 1 in 2P.
// Throws kContinueNotZero otherwise.
RewardBounds episode_reward_bounds(const GameDefinition& def, const EnvironmentSettings& settings);

// Called after every simulation tick with the new state and its events.
using TickObserver = std::function<void(const MatchState&, const std::vector<Event>&)>;

class ArenaEnv final : public Env {
 public:
  ArenaEnv(std::shared_ptr<const GameDefinition> def, EnvironmentSettings settings);

  Observation reset() override;
  StepResult step(const ActionInput& action) override;
  const ActionSpaceSpec& action_space() const override { return action_space_; }
  const ObservationSpace& observation_space() const override { return observation_space_; }
  Frame render() override;
  void close() override;

  const GameDefinition& game() const override { return *def_; }
  const EnvironmentSettings& settings() const override { return settings_; }
  Rng& rng() override { return rng_; }

  // Null before the first reset.
  const MatchState* match_state() const { return state_ ? &*state_ : nullptr; }
  bool closed() const { return closed_; }
  void set_tick_observer(TickObserver observer) { observer_ = std::move(observer); }

 private:
  void check_usable() const;
  Observation observe();
  void build_observation_space();

  std::shared_ptr<const GameDefinition> def_;
  EnvironmentSettings settings_;
  ActionSpaceSpec action_space_;
  ObservationSpace observation_space_;
  Rng rng_;
  std::optional<MatchState> state_;
  std::array<Input, 2> last_inputs_{};
  bool episode_done_ = false;
  bool closed_ = false;
  Frame native_;
  std::vector<Event> events_;
  TickObserver observer_;
};

// Throws kUnknownGame, kInvalidSettings and the validation errors of
// EnvironmentSettings::validate. `settings.game_id` is overwritten.
std::unique_ptr<ArenaEnv> make(std::string_view game_id, EnvironmentSettings settings,
                               const GameRegistry& registry = GameRegistry::builtin());

}  // namespace arena
