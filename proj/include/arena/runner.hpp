// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arena/env.hpp"
#include "arena/wrappers.hpp"

namespace arena {

// Settings plus wrapper configuration, as carried by a settings file or a
// MAKE body (wrapper keys use the "wrappers." prefix).
struct EnvSpec {
  EnvironmentSettings settings;
  WrapperConfig wrappers;

  KvDocument to_document() const;
  static EnvSpec from_document(const KvDocument& doc);
  // Throws kIo for unreadable files.
  static EnvSpec from_file(const std::string& path);
};

std::unique_ptr<Env> build_env(const EnvSpec& spec, const GameRegistry& registry = GameRegistry::builtin());

struct EpisodeStats {
  double reward = 0;  // cumulative, agent (P1) side
  std::uint64_t steps = 0;
};

struct RolloutReport {
  std::vector<EpisodeStats> episodes;
  // Bounds in the units the wrapped env emits; absent when they do not apply
  // (continue_game > 0 in 1P, reward clipping or a custom reward hook).
  std::optional<std::pair<double, double>> bounds;
  std::size_t violations = 0;

  double mean_reward() const;
  double mean_steps() const;
};

// Uniform-random episodes. Episode i runs on a fresh env seeded with
// `seed + i` and its own action RNG, so the report does not depend on
// `parallel`.
RolloutReport run_rollouts(const EnvSpec& spec, int episodes, std::uint64_t seed, int parallel = 1);

// Seed of the action RNG used for rollout episode i.
std::uint64_t rollout_action_seed(std::uint64_t seed, std::uint64_t episode);

struct BenchReport {
  double steps_per_second = 0;
  std::uint64_t steps = 0;
  double seconds = 0;
  double peak_rss_mb = 0;
  int parallel = 1;
  bool over_wire = false;
};

// Random actions for `duration_seconds` on `parallel` env instances; with
// `over_wire` the instances live behind an in-process server.
BenchReport run_bench(const EnvSpec& spec, double duration_seconds, int parallel = 1, bool over_wire = false);

// Peak resident set size of this process in MiB.
double peak_rss_mb();

}  // namespace arena
