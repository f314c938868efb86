// SPDX-License-Identifier: Apache-2.0
#include "arena/env.hpp"

#include "arena/errors.hpp"
#include "arena/image.hpp"
#include "arena/render.hpp"

namespace arena {
namespace {

SideHealths healths_of(const MatchState& s) { return {s.fighters[0].healths, s.fighters[1].healths}; }

SpaceSpec discrete(int n, int len = 1) {
  SpaceSpec s;
  s.kind = SpaceKind::kDiscrete;
  s.n = n;
  s.shape = {len};
  return s;
}

SpaceSpec binary() {
  SpaceSpec s;
  s.kind = SpaceKind::kBinary;
  s.shape = {1};
  return s;
}

SpaceSpec box(double low, double high, int len) {
  SpaceSpec s;
  s.kind = SpaceKind::kBox;
  s.low = low;
  s.high = high;
  s.shape = {len};
  return s;
}

FrameShape output_frame_shape(const GameDefinition& def, const EnvironmentSettings& settings) {
  const auto& fs = settings.frame_shape;
  if (fs.height == 0) return {def.native_frame.height, def.native_frame.width, fs.channels};
  return fs;
}

// Groups: "P1" is the agent in 1P and the left player in 2P.
std::array<int, 2> group_sides(const MatchState& s) {
  if (s.two_player) return {0, 1};
  return {s.agent_side, 1 - s.agent_side};
}

}  // namespace

ActionInput Env::noop_action() const {
  const auto a = action_space().noop();
  return two_player() ? ActionInput::two(a, a) : ActionInput::one(a);
}

ActionInput Env::sample_action(Rng& rng) const {
  if (two_player()) {
    auto p1 = action_space().sample(rng);
    auto p2 = action_space().sample(rng);
    return ActionInput::two(std::move(p1), std::move(p2));
  }
  return ActionInput::one(action_space().sample(rng));
}

std::int64_t compute_reward_units(const SideHealths& before, const SideHealths& after, int agent_side) {
  const std::size_t nc = before[0].size();
  if (before[1].size() != nc || after[0].size() != nc || after[1].size() != nc) {
    throw Error(Errc::kLengthMismatch, "health arrays must all have length Nc");
  }
  if (agent_side != 0 && agent_side != 1) throw Error(Errc::kLengthMismatch, "agent side must be 0 or 1");
  const auto& opp_before = before[1 - agent_side];
  const auto& opp_after = after[1 - agent_side];
  const auto& own_before = before[agent_side];
  const auto& own_after = after[agent_side];
  std::int64_t r = 0;
  for (std::size_t i = 0; i < nc; ++i) {
    r += static_cast<std::int64_t>(opp_before[i]) - opp_after[i] -
         (static_cast<std::int64_t>(own_before[i]) - own_after[i]);
  }
  return r;
}

double compute_reward(const SideHealths& before, const SideHealths& after, int agent_side) {
  return static_cast<double>(compute_reward_units(before, after, agent_side));
}

RewardBounds episode_reward_bounds(const GameDefinition& def, const EnvironmentSettings& settings) {
  if (!settings.two_player() && settings.continue_game != 0.0) {
    throw Error(Errc::kContinueNotZero, "bounds undefined for continue>0");
  }
  const std::int64_t nc = def.chars_per_side;
  const std::int64_t ns = settings.two_player() ? 1 : def.max_stages;
  const std::int64_t nr = def.rounds_to_win;
  const std::int64_t dh = def.delta_h();
  return {-nc * ((ns - 1) * (nr - 1) + nr) * dh, nc * ns * nr * dh};
}

ArenaEnv::ArenaEnv(std::shared_ptr<const GameDefinition> def, EnvironmentSettings settings)
    : def_(std::move(def)), settings_(std::move(settings)), rng_(settings_.seed) {
  settings_.validate(*def_);
  action_space_ = make_action_space(*def_, settings_);
  build_observation_space();
}

void ArenaEnv::build_observation_space() {
  const auto& d = *def_;
  const auto shape = output_frame_shape(d, settings_);
  SpaceSpec frame;
  frame.kind = SpaceKind::kBox;
  frame.is_frame = true;
  frame.frame_dtype = DType::kU8;
  frame.shape = {shape.height, shape.width, shape.channels};
  frame.low = 0;
  frame.high = 255;
  observation_space_.clear();
  observation_space_.emplace(kFrameKey, frame);
  if (settings_.hardcore) return;

  observation_space_.emplace("stage", discrete(d.max_stages + 1));
  observation_space_.emplace("timer", discrete(d.round_timer_seconds() + 1));
  const int nc = d.chars_per_side;
  for (const std::string group : {"P1", "P2"}) {
    observation_space_.emplace(group + "/health", box(d.h_min, d.h_max, nc));
    observation_space_.emplace(group + "/side", binary());
    observation_space_.emplace(group + "/wins", discrete(d.rounds_to_win + 1));
    observation_space_.emplace(group + "/characters", discrete(static_cast<int>(d.roster.size()), nc));
    if (nc > 1) observation_space_.emplace(group + "/active", discrete(nc));
    if (group == "P1" || settings_.two_player()) {
      observation_space_.emplace(group + "/actions/move", discrete(action_space_.move_count));
      observation_space_.emplace(group + "/actions/attack", discrete(action_space_.attack_count));
    }
  }
}

void ArenaEnv::check_usable() const {
  if (closed_) throw Error(Errc::kUseAfterClose, "environment is closed");
}

Observation ArenaEnv::reset() {
  check_usable();
  EnvironmentSettings resolved = settings_;
  if (resolved.player == PlayerMode::kRandom) {
    resolved.player = uniform_below(rng_, 2) == 0 ? PlayerMode::kP1 : PlayerMode::kP2;
  }
  state_ = init_match(*def_, resolved, rng_());
  last_inputs_ = {};
  episode_done_ = false;
  return observe();
}

StepResult ArenaEnv::step(const ActionInput& action) {
  check_usable();
  if (!state_) throw Error(Errc::kNotReset, "step before reset");
  if (episode_done_) throw Error(Errc::kNotReset, "episode is over; call reset");
  auto& s = *state_;
  const auto& d = *def_;

  std::array<Input, 2> inputs{};
  const auto groups = group_sides(s);
  if (settings_.two_player()) {
    const auto p1 = action.players.find("P1");
    const auto p2 = action.players.find("P2");
    if (p1 == action.players.end() || p2 == action.players.end()) {
      throw Error(Errc::kMissingPlayerKey, "2P actions need keys \"P1\" and \"P2\"");
    }
    inputs[0] = action_space_.decode(p1->second);
    inputs[1] = action_space_.decode(p2->second);
  } else {
    inputs[s.agent_side] = action_space_.decode(action.single);
  }
  const int opp_side = 1 - s.agent_side;

  std::int64_t reward = 0;
  StepResult result;
  for (int k = 0; k < settings_.step_ratio; ++k) {
    if (!s.two_player) inputs[opp_side] = scripted_policy(s, d, opp_side, s.difficulty);
    const auto before = healths_of(s);
    events_.clear();
    tick_in_place(s, d, inputs, events_);
    reward += compute_reward_units(before, healths_of(s), s.two_player ? 0 : s.agent_side);
    if (observer_) observer_(s, events_);
    if (s.phase != MatchPhase::kInRound) break;
  }
  last_inputs_ = {inputs[groups[0]], inputs[groups[1]]};

  auto& info = result.info;
  if (s.phase == MatchPhase::kRoundEnd) {
    info.round_done = true;
    advance_phase(s, d);
    if (s.phase == MatchPhase::kStageEnd) {
      info.stage_done = true;
      advance_phase(s, d);
    } else if (s.phase == MatchPhase::kCleared) {
      info.stage_done = true;
      info.game_done = true;
    } else if (s.phase == MatchPhase::kGameOver) {
      if (s.two_player) {
        info.stage_done = true;
        info.game_done = true;
      } else if (settings_.continue_game > 0.0 && uniform01(rng_) < settings_.continue_game) {
        restart_stage(s, d);
      } else {
        info.game_done = true;
      }
    }
  }
  result.done = info.game_done;
  info.episode_done = result.done;
  episode_done_ = result.done;

  const double r = static_cast<double>(reward);
  if (s.two_player) {
    result.reward = {r, 0.0 - r};
  } else {
    result.reward = {r};
  }
  result.observation = observe();
  return result;
}

Observation ArenaEnv::observe() {
  const auto& s = *state_;
  const auto& d = *def_;
  render_native_into(s, d, native_);

  Observation obs;
  const auto& fs = settings_.frame_shape;
  if (fs.height == 0 && fs.channels == 3) {
    obs.entries.emplace(kFrameKey, native_);
  } else {
    const auto shape = output_frame_shape(d, settings_);
    obs.entries.emplace(kFrameKey, frame_warp(native_, shape.height, shape.width, shape.channels == 1));
  }
  if (settings_.hardcore) return obs;

  auto put = [&](std::string key, std::vector<double> v) { obs.entries.emplace(std::move(key), std::move(v)); };
  put("stage", {static_cast<double>(s.stage_index)});
  put("timer", {static_cast<double>((s.timer_ticks + kTicksPerSecond - 1) / kTicksPerSecond)});
  const auto groups = group_sides(s);
  const char* names[2] = {"P1", "P2"};
  for (int g = 0; g < 2; ++g) {
    const std::string group = names[g];
    const auto& f = s.fighters[groups[g]];
    put(group + "/health", std::vector<double>(f.healths.begin(), f.healths.end()));
    put(group + "/side", {static_cast<double>(groups[g])});
    put(group + "/wins", {static_cast<double>(f.round_wins)});
    put(group + "/characters", std::vector<double>(f.char_ids.begin(), f.char_ids.end()));
    if (d.chars_per_side > 1) put(group + "/active", {static_cast<double>(f.active_char)});
    if (g == 0 || s.two_player) {
      put(group + "/actions/move", {static_cast<double>(last_inputs_[g].move)});
      put(group + "/actions/attack", {static_cast<double>(last_inputs_[g].attack)});
    }
  }
  return obs;
}

Frame ArenaEnv::render() {
  check_usable();
  if (!state_) throw Error(Errc::kNotReset, "render before reset");
  return render_native(*state_, *def_);
}

void ArenaEnv::close() {
  closed_ = true;
  state_.reset();
  native_ = Frame{};
}

std::unique_ptr<ArenaEnv> make(std::string_view game_id, EnvironmentSettings settings,
                               const GameRegistry& registry) {
  auto def = registry.find(game_id);
  settings.game_id = std::string(game_id);
  return std::make_unique<ArenaEnv>(std::move(def), std::move(settings));
}

}  // namespace arena
