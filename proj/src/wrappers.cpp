// SPDX-License-Identifier: Apache-2.0
#include "arena/wrappers.hpp"

#include <algorithm>
#include <set>

#include "arena/errors.hpp"
#include "arena/image.hpp"

namespace arena {
namespace {

void check_conforms([[maybe_unused]] const Env& env, [[maybe_unused]] const Observation& obs) {
#ifndef NDEBUG
  std::string why;
  if (!conforms(env.observation_space(), obs, &why)) {
    throw Error(Errc::kInternal, "wrapped observation does not match its space: " + why);
  }
#endif
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

constexpr std::string_view kMoveSuffix = "/actions/move";
constexpr std::string_view kAttackSuffix = "/actions/attack";

}  // namespace

// ---- WrapperConfig ----

bool WrapperConfig::empty() const {
  return !frame_warp && !scale && !frame_stack && !actions_stack && !flatten && filter_keys.empty() &&
         !reward_normalization && !clip_rewards && no_op_max == 0 && sticky_actions == 1 && !reward_hook;
}

KvDocument WrapperConfig::to_document() const {
  KvDocument d;
  const std::string p(kWrapperPrefix);
  if (frame_warp) d.set_int_list(p + "frame_warp", {frame_warp->height, frame_warp->width, frame_warp->channels});
  if (scale) d.set_bool(p + "scale", true);
  if (frame_stack) d.set_int_list(p + "frame_stack", {frame_stack->count, frame_stack->dilation});
  if (actions_stack) d.set_int(p + "actions_stack", *actions_stack);
  if (flatten) d.set_bool(p + "flatten", true);
  if (!filter_keys.empty()) d.set_string_list(p + "filter_keys", filter_keys);
  if (reward_normalization) d.set_real(p + "reward_normalization", *reward_normalization);
  if (clip_rewards) d.set_bool(p + "clip_rewards", true);
  if (no_op_max != 0) d.set_int(p + "no_op_max", no_op_max);
  if (sticky_actions != 1) d.set_int(p + "sticky_actions", sticky_actions);
  return d;
}

WrapperConfig WrapperConfig::from_document(const KvDocument& doc) {
  WrapperConfig c;
  const KvDocument w = doc.subset(kWrapperPrefix);
  static const std::set<std::string, std::less<>> known = {
      "frame_warp", "scale",        "frame_stack", "actions_stack", "flatten",
      "filter_keys", "reward_normalization", "clip_rewards", "no_op_max", "sticky_actions"};
  for (const auto& [key, value] : w.entries()) {
    if (!known.contains(key)) throw Error(Errc::kInvalidConfig, "unknown wrapper key '" + std::string(kWrapperPrefix) + key + "'");
  }
  try {
    if (w.contains("frame_warp")) {
      const auto v = w.get_int_list("frame_warp");
      if (v.size() != 3) throw Error(Errc::kInvalidConfig, "wrappers.frame_warp needs h,w,c");
      c.frame_warp = FrameShape{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
    }
    c.scale = w.get_bool_or("scale", false);
    if (w.contains("frame_stack")) {
      const auto v = w.get_int_list("frame_stack");
      if (v.empty() || v.size() > 2) throw Error(Errc::kInvalidConfig, "wrappers.frame_stack needs N or N,M");
      c.frame_stack = FrameStackSpec{static_cast<int>(v[0]), v.size() == 2 ? static_cast<int>(v[1]) : 1};
    }
    if (w.contains("actions_stack")) c.actions_stack = static_cast<int>(w.get_int("actions_stack"));
    c.flatten = w.get_bool_or("flatten", false);
    if (w.contains("filter_keys")) c.filter_keys = w.get_string_list("filter_keys");
    if (w.contains("reward_normalization")) c.reward_normalization = w.get_real("reward_normalization");
    c.clip_rewards = w.get_bool_or("clip_rewards", false);
    c.no_op_max = static_cast<int>(w.get_int_or("no_op_max", 0));
    c.sticky_actions = static_cast<int>(w.get_int_or("sticky_actions", 1));
  } catch (const Error& e) {
    if (e.code() == Errc::kInvalidConfig) throw;
    throw Error(Errc::kInvalidConfig, e.what());
  }
  return c;
}

void WrapperConfig::validate(const EnvironmentSettings& settings) const {
  if (frame_warp) {
    if (frame_warp->height < 1 || frame_warp->width < 1) throw Error(Errc::kInvalidConfig, "frame_warp size must be >= 1");
    if (frame_warp->channels != 1 && frame_warp->channels != 3) {
      throw Error(Errc::kInvalidConfig, "frame_warp channels must be 1 or 3");
    }
  }
  if (frame_stack && (frame_stack->count < 1 || frame_stack->dilation < 1)) {
    throw Error(Errc::kInvalidConfig, "frame_stack needs N >= 1 and M >= 1");
  }
  if (actions_stack && *actions_stack < 1) throw Error(Errc::kInvalidConfig, "actions_stack must be >= 1");
  if (reward_normalization && !(*reward_normalization > 0)) {
    throw Error(Errc::kInvalidConfig, "reward_normalization K must be > 0");
  }
  if (no_op_max < 0) throw Error(Errc::kInvalidConfig, "no_op_max must be >= 0");
  if (sticky_actions < 1) throw Error(Errc::kInvalidConfig, "sticky_actions must be >= 1");
  if (sticky_actions > 1 && settings.step_ratio != 1) {
    throw Error(Errc::kStickyWithStepRatio, "sticky_actions > 1 requires step_ratio == 1 (got " +
                                                std::to_string(settings.step_ratio) + ")");
  }
}

// ---- stacking state ----

void FrameStacker::reset(const Frame& first) {
  ring_.assign(static_cast<std::size_t>((count_ - 1) * dilation_ + 1), first);
}

void FrameStacker::push(const Frame& frame) {
  ring_.push_front(frame);
  ring_.pop_back();
}

const Frame& FrameStacker::slice(int j) const { return ring_[static_cast<std::size_t>(j * dilation_)]; }

Frame FrameStacker::stacked() const {
  const Frame& head = ring_.front();
  const int c = head.shape.channels;
  Frame out;
  out.shape = {head.shape.height, head.shape.width, c * count_};
  out.dtype = head.dtype;
  const std::size_t pixels = static_cast<std::size_t>(head.shape.height) * head.shape.width;
  auto interleave = [&](auto member) {
    auto& dst = out.*member;
    dst.resize(pixels * c * count_);
    for (int j = 0; j < count_; ++j) {
      const auto& src = slice(j).*member;
      for (std::size_t p = 0; p < pixels; ++p) {
        for (int k = 0; k < c; ++k) dst[(p * count_ + j) * c + k] = src[p * c + k];
      }
    }
  };
  if (head.dtype == DType::kU8) {
    interleave(&Frame::u8);
  } else {
    interleave(&Frame::f32);
  }
  return out;
}

void ActionStacker::reset() { ring_.assign(static_cast<std::size_t>(count_), {0, 0}); }

void ActionStacker::push(int move, int attack) {
  ring_.pop_front();
  ring_.emplace_back(move, attack);
}

std::vector<double> ActionStacker::moves() const {
  std::vector<double> v;
  for (const auto& [m, a] : ring_) v.push_back(m);
  return v;
}

std::vector<double> ActionStacker::attacks() const {
  std::vector<double> v;
  for (const auto& [m, a] : ring_) v.push_back(a);
  return v;
}

// ---- pure transforms ----

ObservationSpace scale_observation_space(const ObservationSpace& space) {
  ObservationSpace out;
  for (const auto& [key, spec] : space) {
    SpaceSpec s = spec;
    if (spec.kind != SpaceKind::kBinary) {
      s.kind = SpaceKind::kBox;
      s.low = 0;
      s.high = 1;
      s.n = 0;
    }
    if (spec.is_frame) s.frame_dtype = DType::kF32;
    out.emplace(key, std::move(s));
  }
  return out;
}

Observation scale_observation(const ObservationSpace& space, const Observation& obs) {
  Observation out;
  for (const auto& [key, value] : obs.entries) {
    const auto spec_it = space.find(key);
    if (spec_it == space.end()) throw Error(Errc::kUnknownKey, "observation key '" + key + "' has no space");
    const SpaceSpec& spec = spec_it->second;
    if (const auto* f = std::get_if<Frame>(&value)) {
      Frame g;
      g.shape = f->shape;
      g.dtype = DType::kF32;
      if (f->dtype == DType::kU8) {
        g.f32.resize(f->u8.size());
        std::transform(f->u8.begin(), f->u8.end(), g.f32.begin(), [](std::uint8_t p) { return p / 255.0f; });
      } else {
        g.f32 = f->f32;
      }
      out.entries.emplace(key, std::move(g));
      continue;
    }
    auto v = std::get<std::vector<double>>(value);
    for (double& x : v) {
      switch (spec.kind) {
        case SpaceKind::kBox:
          x = spec.high > spec.low ? (x - spec.low) / (spec.high - spec.low) : 0.0;
          break;
        case SpaceKind::kDiscrete:
          x = spec.n > 1 ? x / (spec.n - 1) : 0.0;
          break;
        case SpaceKind::kBinary:
          break;
      }
    }
    out.entries.emplace(key, std::move(v));
  }
  return out;
}

std::string flatten_key(std::string_view key) {
  std::string s(key);
  std::replace(s.begin(), s.end(), '/', '_');
  return s;
}

double normalize_reward(double reward, double k, double delta_h) { return reward / (k * delta_h); }

double clip_reward(double reward) {
  if (reward > 0) return 1.0;
  if (reward < 0) return -1.0;
  return 0.0;
}

// ---- wrappers ----

NoOpResetWrapper::NoOpResetWrapper(std::unique_ptr<Env> inner, int max_noops)
    : EnvWrapper(std::move(inner)), max_noops_(max_noops) {
  if (max_noops_ < 0) throw Error(Errc::kInvalidConfig, "no_op_max must be >= 0");
}

Observation NoOpResetWrapper::reset() {
  Observation obs = inner_->reset();
  last_noops_ = max_noops_ > 0 ? static_cast<int>(uniform_below(inner_->rng(), max_noops_ + 1)) : 0;
  const ActionInput noop = inner_->noop_action();
  for (int i = 0; i < last_noops_; ++i) {
    auto r = inner_->step(noop);
    obs = std::move(r.observation);
    if (r.done) return inner_->reset();
  }
  return obs;
}

StickyActionsWrapper::StickyActionsWrapper(std::unique_ptr<Env> inner, int repeats)
    : EnvWrapper(std::move(inner)), repeats_(repeats) {
  if (repeats_ < 1) throw Error(Errc::kInvalidConfig, "sticky_actions must be >= 1");
  if (repeats_ > 1 && inner_->settings().step_ratio != 1) {
    throw Error(Errc::kStickyWithStepRatio, "sticky_actions > 1 requires step_ratio == 1");
  }
}

StepResult StickyActionsWrapper::step(const ActionInput& action) {
  StepResult total = inner_->step(action);
  for (int i = 1; i < repeats_ && !total.done; ++i) {
    StepResult r = inner_->step(action);
    for (std::size_t k = 0; k < total.reward.size(); ++k) total.reward[k] += r.reward[k];
    r.info.round_done |= total.info.round_done;
    r.info.stage_done |= total.info.stage_done;
    r.info.game_done |= total.info.game_done;
    r.reward = std::move(total.reward);
    total = std::move(r);
  }
  return total;
}

FrameWarpWrapper::FrameWarpWrapper(std::unique_ptr<Env> inner, FrameShape shape)
    : EnvWrapper(std::move(inner)), shape_(shape), space_(inner_->observation_space()) {
  auto it = space_.find(std::string(kFrameKey));
  if (it == space_.end()) throw Error(Errc::kInvalidConfig, "frame_warp needs a frame observation");
  if (it->second.frame_dtype != DType::kU8) throw Error(Errc::kInvalidConfig, "frame_warp needs 8-bit frames");
  if (it->second.shape.at(2) == 1 && shape.channels == 3) {
    throw Error(Errc::kInvalidConfig, "frame_warp cannot turn a grayscale frame into RGB");
  }
  it->second.shape = {shape.height, shape.width, shape.channels};
}

void FrameWarpWrapper::apply(Observation& obs) const {
  Frame* f = obs.frame();
  if (f) *f = frame_warp(*f, shape_.height, shape_.width, shape_.channels == 1);
  check_conforms(*this, obs);
}

Observation FrameWarpWrapper::reset() {
  Observation obs = inner_->reset();
  apply(obs);
  return obs;
}

StepResult FrameWarpWrapper::step(const ActionInput& action) {
  StepResult r = inner_->step(action);
  apply(r.observation);
  return r;
}

FrameStackWrapper::FrameStackWrapper(std::unique_ptr<Env> inner, FrameStackSpec spec)
    : EnvWrapper(std::move(inner)), stacker_(spec.count, spec.dilation), space_(inner_->observation_space()) {
  if (spec.count < 1 || spec.dilation < 1) throw Error(Errc::kInvalidConfig, "frame_stack needs N >= 1 and M >= 1");
  auto it = space_.find(std::string(kFrameKey));
  if (it == space_.end()) throw Error(Errc::kInvalidConfig, "frame_stack needs a frame observation");
  it->second.shape.at(2) *= spec.count;
}

Observation FrameStackWrapper::reset() {
  Observation obs = inner_->reset();
  Frame* f = obs.frame();
  stacker_.reset(*f);
  *f = stacker_.stacked();
  check_conforms(*this, obs);
  return obs;
}

StepResult FrameStackWrapper::step(const ActionInput& action) {
  StepResult r = inner_->step(action);
  Frame* f = r.observation.frame();
  stacker_.push(*f);
  *f = stacker_.stacked();
  check_conforms(*this, r.observation);
  return r;
}

ActionStackWrapper::ActionStackWrapper(std::unique_ptr<Env> inner, int count)
    : EnvWrapper(std::move(inner)), space_(inner_->observation_space()) {
  if (count < 1) throw Error(Errc::kInvalidConfig, "actions_stack must be >= 1");
  for (auto& [key, spec] : space_) {
    if (ends_with(key, kMoveSuffix)) groups_.push_back(key.substr(0, key.size() - kMoveSuffix.size()));
    if (ends_with(key, kMoveSuffix) || ends_with(key, kAttackSuffix)) spec.shape = {count};
  }
  if (groups_.empty()) throw Error(Errc::kInvalidConfig, "actions_stack needs action observations (not in hardcore mode)");
  stackers_.assign(groups_.size(), ActionStacker(count));
}

void ActionStackWrapper::apply(Observation& obs, bool after_reset) {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const std::string move_key = groups_[g] + std::string(kMoveSuffix);
    const std::string attack_key = groups_[g] + std::string(kAttackSuffix);
    auto& move = std::get<std::vector<double>>(obs.entries.at(move_key));
    auto& attack = std::get<std::vector<double>>(obs.entries.at(attack_key));
    if (after_reset) {
      stackers_[g].reset();
    } else {
      stackers_[g].push(static_cast<int>(move.at(0)), static_cast<int>(attack.at(0)));
    }
    move = stackers_[g].moves();
    attack = stackers_[g].attacks();
  }
  check_conforms(*this, obs);
}

Observation ActionStackWrapper::reset() {
  Observation obs = inner_->reset();
  apply(obs, true);
  return obs;
}

StepResult ActionStackWrapper::step(const ActionInput& action) {
  StepResult r = inner_->step(action);
  apply(r.observation, false);
  return r;
}

ScaleWrapper::ScaleWrapper(std::unique_ptr<Env> inner)
    : EnvWrapper(std::move(inner)), space_(scale_observation_space(inner_->observation_space())) {}

Observation ScaleWrapper::reset() {
  Observation obs = scale_observation(inner_->observation_space(), inner_->reset());
  check_conforms(*this, obs);
  return obs;
}

StepResult ScaleWrapper::step(const ActionInput& action) {
  StepResult r = inner_->step(action);
  r.observation = scale_observation(inner_->observation_space(), r.observation);
  check_conforms(*this, r.observation);
  return r;
}

FlattenFilterWrapper::FlattenFilterWrapper(std::unique_ptr<Env> inner, bool flatten, std::vector<std::string> keep)
    : EnvWrapper(std::move(inner)), flatten_(flatten), keep_(std::move(keep)) {
  ObservationSpace renamed;
  for (const auto& [key, spec] : inner_->observation_space()) renamed.emplace(flatten_ ? flatten_key(key) : key, spec);
  for (const auto& k : keep_) {
    if (!renamed.contains(k)) throw Error(Errc::kUnknownKey, "filter key '" + k + "' is not an observation key");
  }
  if (keep_.empty()) {
    space_ = std::move(renamed);
  } else {
    for (const auto& k : keep_) space_.emplace(k, renamed.at(k));
  }
}

Observation FlattenFilterWrapper::apply(Observation obs) const {
  Observation out;
  for (auto& [key, value] : obs.entries) {
    std::string name = flatten_ ? flatten_key(key) : key;
    if (!keep_.empty() && std::find(keep_.begin(), keep_.end(), name) == keep_.end()) continue;
    out.entries.emplace(std::move(name), std::move(value));
  }
  check_conforms(*this, out);
  return out;
}

Observation FlattenFilterWrapper::reset() { return apply(inner_->reset()); }

StepResult FlattenFilterWrapper::step(const ActionInput& action) {
  StepResult r = inner_->step(action);
  r.observation = apply(std::move(r.observation));
  return r;
}

RewardNormalizationWrapper::RewardNormalizationWrapper(std::unique_ptr<Env> inner, std::optional<double> k,
                                                       RewardHook hook)
    : EnvWrapper(std::move(inner)), k_(k), hook_(std::move(hook)) {
  if (k_ && !(*k_ > 0)) throw Error(Errc::kInvalidConfig, "reward_normalization K must be > 0");
}

StepResult RewardNormalizationWrapper::step(const ActionInput& action) {
  StepResult r = inner_->step(action);
  if (hook_) hook_(r);
  if (k_) {
    const double dh = inner_->game().delta_h();
    for (double& x : r.reward) x = normalize_reward(x, *k_, dh);
  }
  return r;
}

StepResult RewardClipWrapper::step(const ActionInput& action) {
  StepResult r = inner_->step(action);
  for (double& x : r.reward) x = clip_reward(x);
  return r;
}

std::unique_ptr<Env> wrap(std::unique_ptr<Env> env, const WrapperConfig& config) {
  config.validate(env->settings());
  if (config.no_op_max > 0) env = std::make_unique<NoOpResetWrapper>(std::move(env), config.no_op_max);
  if (config.sticky_actions > 1) env = std::make_unique<StickyActionsWrapper>(std::move(env), config.sticky_actions);
  if (config.frame_warp) env = std::make_unique<FrameWarpWrapper>(std::move(env), *config.frame_warp);
  if (config.frame_stack) env = std::make_unique<FrameStackWrapper>(std::move(env), *config.frame_stack);
  if (config.actions_stack) env = std::make_unique<ActionStackWrapper>(std::move(env), *config.actions_stack);
  if (config.scale) env = std::make_unique<ScaleWrapper>(std::move(env));
  if (config.flatten || !config.filter_keys.empty()) {
    env = std::make_unique<FlattenFilterWrapper>(std::move(env), config.flatten, config.filter_keys);
  }
  if (config.reward_normalization || config.reward_hook) {
    env = std::make_unique<RewardNormalizationWrapper>(std::move(env), config.reward_normalization,
                                                       config.reward_hook);
  }
  if (config.clip_rewards) env = std::make_unique<RewardClipWrapper>(std::move(env));
  return env;
}

}  // namespace arena
