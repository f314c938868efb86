// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arena/env.hpp"
#include "arena/kv_document.hpp"

namespace arena {

// User transform applied at the reward-normalization slot, before the
// normalization itself. It may rewrite result.reward in place.
using RewardHook = std::function<void(StepResult& result)>;

struct FrameStackSpec {
  int count = 1;     // N
  int dilation = 1;  // M
  bool operator==(const FrameStackSpec&) const = default;
};

// Document keys (prefix "wrappers."):
//   frame_warp=h,w,c  scale  frame_stack=N,M  actions_stack=N  flatten
//   filter_keys=a,b  reward_normalization=K  clip_rewards  no_op_max  sticky_actions
struct WrapperConfig {
  std::optional<FrameShape> frame_warp;  // channels 1 converts to grayscale
  bool scale = false;
  std::optional<FrameStackSpec> frame_stack;
  std::optional<int> actions_stack;
  bool flatten = false;
  std::vector<std::string> filter_keys;  // empty keeps every key
  std::optional<double> reward_normalization;  // K
  bool clip_rewards = false;
  int no_op_max = 0;
  int sticky_actions = 1;
  RewardHook reward_hook;  // not serialized

  bool empty() const;
  KvDocument to_document() const;
  // Reads the "wrappers." keys of `doc`; other keys are ignored. Throws
  // kInvalidConfig for unknown wrapper keys or malformed values.
  static WrapperConfig from_document(const KvDocument& doc);
  // Throws kInvalidConfig or kStickyWithStepRatio.
  void validate(const EnvironmentSettings& settings) const;
};

inline constexpr std::string_view kWrapperPrefix = "wrappers.";

// Forwards everything to the inner environment.
class EnvWrapper : public Env {
 public:
  explicit EnvWrapper(std::unique_ptr<Env> inner) : inner_(std::move(inner)) {}

  Observation reset() override { return inner_->reset(); }
  StepResult step(const ActionInput& action) override { return inner_->step(action); }
  const ActionSpaceSpec& action_space() const override { return inner_->action_space(); }
  const ObservationSpace& observation_space() const override { return inner_->observation_space(); }
  Frame render() override { return inner_->render(); }
  void close() override { inner_->close(); }
  const GameDefinition& game() const override { return inner_->game(); }
  const EnvironmentSettings& settings() const override { return inner_->settings(); }
  Rng& rng() override { return inner_->rng(); }

  Env& inner() { return *inner_; }

 protected:
  std::unique_ptr<Env> inner_;
};

// Ring buffer of the last (N-1)M+1 frames; slice j of the output is the
// frame j*M steps in the past, newest first, interleaved per pixel.
class FrameStacker {
 public:
  FrameStacker(int count, int dilation) : count_(count), dilation_(dilation) {}
  void reset(const Frame& first);
  void push(const Frame& frame);
  Frame stacked() const;
  const Frame& slice(int j) const;

 private:
  int count_;
  int dilation_;
  std::deque<Frame> ring_;  // front is newest
};

// Last N (move, attack) pairs, oldest first; reset fills with no-ops.
class ActionStacker {
 public:
  explicit ActionStacker(int count) : count_(count) {}
  void reset();
  void push(int move, int attack);
  std::vector<double> moves() const;
  std::vector<double> attacks() const;

 private:
  int count_;
  std::deque<std::pair<int, int>> ring_;
};

Observation scale_observation(const ObservationSpace& space, const Observation& obs);
ObservationSpace scale_observation_space(const ObservationSpace& space);
std::string flatten_key(std::string_view key);
double normalize_reward(double reward, double k, double delta_h);
double clip_reward(double reward);

class NoOpResetWrapper final : public EnvWrapper {
 public:
  NoOpResetWrapper(std::unique_ptr<Env> inner, int max_noops);
  Observation reset() override;
  // Number of no-ops executed by the last reset.
  int last_noops() const { return last_noops_; }

 private:
  int max_noops_;
  int last_noops_ = 0;
};

class StickyActionsWrapper final : public EnvWrapper {
 public:
  StickyActionsWrapper(std::unique_ptr<Env> inner, int repeats);
  StepResult step(const ActionInput& action) override;

 private:
  int repeats_;
};

class FrameWarpWrapper final : public EnvWrapper {
 public:
  FrameWarpWrapper(std::unique_ptr<Env> inner, FrameShape shape);
  Observation reset() override;
  StepResult step(const ActionInput& action) override;
  const ObservationSpace& observation_space() const override { return space_; }

 private:
  void apply(Observation& obs) const;
  FrameShape shape_;
  ObservationSpace space_;
};

class FrameStackWrapper final : public EnvWrapper {
 public:
  FrameStackWrapper(std::unique_ptr<Env> inner, FrameStackSpec spec);
  Observation reset() override;
  StepResult step(const ActionInput& action) override;
  const ObservationSpace& observation_space() const override { return space_; }

 private:
  FrameStacker stacker_;
  ObservationSpace space_;
};

class ActionStackWrapper final : public EnvWrapper {
 public:
  ActionStackWrapper(std::unique_ptr<Env> inner, int count);
  Observation reset() override;
  StepResult step(const ActionInput& action) override;
  const ObservationSpace& observation_space() const override { return space_; }

 private:
  void apply(Observation& obs, bool after_reset);
  std::vector<std::string> groups_;
  std::vector<ActionStacker> stackers_;
  ObservationSpace space_;
};

class ScaleWrapper final : public EnvWrapper {
 public:
  explicit ScaleWrapper(std::unique_ptr<Env> inner);
  Observation reset() override;
  StepResult step(const ActionInput& action) override;
  const ObservationSpace& observation_space() const override { return space_; }

 private:
  ObservationSpace space_;
};

class FlattenFilterWrapper final : public EnvWrapper {
 public:
  FlattenFilterWrapper(std::unique_ptr<Env> inner, bool flatten, std::vector<std::string> keep);
  Observation reset() override;
  StepResult step(const ActionInput& action) override;
  const ObservationSpace& observation_space() const override { return space_; }

 private:
  Observation apply(Observation obs) const;
  bool flatten_;
  std::vector<std::string> keep_;
  ObservationSpace space_;
};

class RewardNormalizationWrapper final : public EnvWrapper {
 public:
  RewardNormalizationWrapper(std::unique_ptr<Env> inner, std::optional<double> k, RewardHook hook);
  StepResult step(const ActionInput& action) override;

 private:
  std::optional<double> k_;
  RewardHook hook_;
};

class RewardClipWrapper final : public EnvWrapper {
 public:
  using EnvWrapper::EnvWrapper;
  StepResult step(const ActionInput& action) override;
};

// Applies the configured transforms innermost first: no-op reset, sticky
// actions, frame warp, frame stack, action stack, scaling, flatten/filter,
// reward normalization (with the hook), reward clipping. Disabled stages
// are skipped, so an empty config returns `env` unchanged.
std::unique_ptr<Env> wrap(std::unique_ptr<Env> env, const WrapperConfig& config);

}  // namespace arena
