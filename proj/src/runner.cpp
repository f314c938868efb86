// SPDX-License-Identifier: Apache-2.0
#include "arena/runner.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <chrono>
#include <fstream>
#include <iterator>
#include <thread>

#include "arena/errors.hpp"
#include "arena/server.hpp"

namespace arena {

KvDocument EnvSpec::to_document() const {
  KvDocument d = settings.to_document();
  d.merge(wrappers.to_document());
  return d;
}

EnvSpec EnvSpec::from_document(const KvDocument& doc) {
  KvDocument settings_doc;
  for (const auto& [key, value] : doc.entries()) {
    if (!key.starts_with(kWrapperPrefix)) settings_doc.set(key, value);
  }
  return {EnvironmentSettings::from_document(settings_doc), WrapperConfig::from_document(doc)};
}

EnvSpec EnvSpec::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read settings file '" + path + "'");
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return from_document(KvDocument::parse(text));
}

std::unique_ptr<Env> build_env(const EnvSpec& spec, const GameRegistry& registry) {
  return wrap(std::make_unique<ArenaEnv>(registry.find(spec.settings.game_id), spec.settings), spec.wrappers);
}

double RolloutReport::mean_reward() const {
  if (episodes.empty()) return 0;
  double s = 0;
  for (const auto& e : episodes) s += e.reward;
  return s / static_cast<double>(episodes.size());
}

double RolloutReport::mean_steps() const {
  if (episodes.empty()) return 0;
  double s = 0;
  for (const auto& e : episodes) s += static_cast<double>(e.steps);
  return s / static_cast<double>(episodes.size());
}

std::uint64_t rollout_action_seed(std::uint64_t seed, std::uint64_t episode) {
  return (seed + 1) * 0x9E3779B97F4A7C15ULL ^ (episode + 1) * 0xBF58476D1CE4E5B9ULL;
}

RolloutReport run_rollouts(const EnvSpec& spec, int episodes, std::uint64_t seed, int parallel) {
  if (episodes < 1) throw Error(Errc::kInvalidConfig, "episodes must be >= 1");
  if (parallel < 1) throw Error(Errc::kInvalidConfig, "parallel must be >= 1");
  RolloutReport report;
  report.episodes.resize(static_cast<std::size_t>(episodes));

  const auto& def = *GameRegistry::builtin().find(spec.settings.game_id);
  const bool bounded = (spec.settings.two_player() || spec.settings.continue_game == 0.0) &&
                       !spec.wrappers.clip_rewards && !spec.wrappers.reward_hook;
  if (bounded) {
    const RewardBounds b = episode_reward_bounds(def, spec.settings);
    double lo = static_cast<double>(b.min);
    double hi = static_cast<double>(b.max);
    if (spec.wrappers.reward_normalization) {
      lo = normalize_reward(lo, *spec.wrappers.reward_normalization, def.delta_h());
      hi = normalize_reward(hi, *spec.wrappers.reward_normalization, def.delta_h());
    }
    report.bounds = std::make_pair(lo, hi);
  }

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      for (int i = next++; i < episodes; i = next++) {
        EnvSpec s = spec;
        s.settings.seed = seed + static_cast<std::uint64_t>(i);
        auto env = build_env(s);
        Rng rng(rollout_action_seed(seed, static_cast<std::uint64_t>(i)));
        env->reset();
        EpisodeStats stats;
        while (true) {
          const StepResult r = env->step(env->sample_action(rng));
          stats.reward += r.reward[0];
          ++stats.steps;
          if (r.done) break;
        }
        report.episodes[static_cast<std::size_t>(i)] = stats;
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = episodes;
    }
  };
  if (parallel == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < parallel; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  if (report.bounds) {
    // Relative slack for sums of normalized rewards.
    for (const auto& e : report.episodes) {
      const double tol = 1e-12 * std::max(std::abs(report.bounds->first), std::abs(report.bounds->second));
      if (e.reward < report.bounds->first - tol || e.reward > report.bounds->second + tol) ++report.violations;
    }
  }
  return report;
}

double peak_rss_mb() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.starts_with("VmHWM:")) return std::stod(line.substr(6)) / 1024.0;
  }
  rusage usage{};
  ::getrusage(RUSAGE_SELF, &usage);
  return static_cast<double>(usage.ru_maxrss) / 1024.0;
}

BenchReport run_bench(const EnvSpec& spec, double duration_seconds, int parallel, bool over_wire) {
  if (parallel < 1) throw Error(Errc::kInvalidConfig, "parallel must be >= 1");
  using Clock = std::chrono::steady_clock;
  std::atomic<std::uint64_t> total{0};
  std::atomic<bool> stop{false};

  std::unique_ptr<Server> server;
  std::thread server_thread;
  if (over_wire) {
    ServerOptions opts;
    opts.port = 0;
    opts.max_sessions = parallel;
    server = std::make_unique<Server>(opts);
    server->start();
    server_thread = std::thread([&] { server->run(); });
  }

  auto drive_local = [&](int index) {
    EnvSpec s = spec;
    s.settings.seed = spec.settings.seed + static_cast<std::uint64_t>(index);
    auto env = build_env(s);
    Rng rng(rollout_action_seed(s.settings.seed, 0));
    env->reset();
    std::uint64_t steps = 0;
    while (!stop.load(std::memory_order_relaxed)) {
      if (env->step(env->sample_action(rng)).done) env->reset();
      ++steps;
    }
    total += steps;
  };
  auto drive_wire = [&](int index) {
    EnvSpec s = spec;
    s.settings.seed = spec.settings.seed + static_cast<std::uint64_t>(index);
    WireClient client("127.0.0.1", server->port());
    client.make(s.to_document());
    const auto local = build_env(s);  // action space and sampling only
    Rng rng(rollout_action_seed(s.settings.seed, 0));
    client.reset();
    std::uint64_t steps = 0;
    while (!stop.load(std::memory_order_relaxed)) {
      if (client.step(local->sample_action(rng)).done) client.reset();
      ++steps;
    }
    client.close();
    total += steps;
  };

  const auto t0 = Clock::now();
  std::vector<std::thread> threads;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int i = 0; i < parallel; ++i) {
    threads.emplace_back([&, i] {
      try {
        over_wire ? drive_wire(i) : drive_local(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  std::this_thread::sleep_until(t0 + std::chrono::duration<double>(duration_seconds));
  stop = true;
  for (auto& t : threads) t.join();
  const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (server) {
    server->stop();
    server_thread.join();
  }
  if (failure) std::rethrow_exception(failure);

  BenchReport r;
  r.steps = total.load();
  r.seconds = seconds;
  r.steps_per_second = static_cast<double>(r.steps) / seconds;
  r.peak_rss_mb = peak_rss_mb();
  r.parallel = parallel;
  r.over_wire = over_wire;
  return r;
}

}  // namespace arena
