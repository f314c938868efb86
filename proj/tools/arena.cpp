// SPDX-License-Identifier: Apache-2.0
// arena: rollouts, reward bounds, benchmark, trajectory validation and the
// environment server.
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "arena/errors.hpp"
#include "arena/runner.hpp"
#include "arena/server.hpp"
#include "arena/trajectory.hpp"

namespace {

constexpr int kUsageError = 2;

arena::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

struct CommonOptions {
  std::string game;
  std::string settings_file;
};

arena::EnvSpec load_spec(const CommonOptions& o) {
  arena::EnvSpec spec;
  if (!o.settings_file.empty()) spec = arena::EnvSpec::from_file(o.settings_file);
  if (!o.game.empty()) spec.settings.game_id = o.game;
  return spec;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--game", o.game, "Game id (overrides the settings file)");
  cmd->add_option("--settings", o.settings_file, "Settings document (same keys as a MAKE body)")
      ->check(CLI::ExistingFile);
}

std::string metric(std::string_view cmd, std::string_view key, const std::string& value) {
  return "arena." + std::string(cmd) + "." + std::string(key) + "=" + value;
}

int cmd_rollout(const CommonOptions& o, int episodes, std::uint64_t seed, int parallel) {
  const arena::EnvSpec spec = load_spec(o);
  const arena::RolloutReport r = arena::run_rollouts(spec, episodes, seed, parallel);
  for (std::size_t i = 0; i < r.episodes.size(); ++i) {
    std::printf("episode %zu: reward %s, steps %llu\n", i, arena::format_real(r.episodes[i].reward).c_str(),
                static_cast<unsigned long long>(r.episodes[i].steps));
  }
  std::printf("mean reward %s over %zu episodes, mean length %s steps\n", arena::format_real(r.mean_reward()).c_str(),
              r.episodes.size(), arena::format_real(r.mean_steps()).c_str());
  std::puts(metric("rollout", "episodes", std::to_string(r.episodes.size())).c_str());
  std::puts(metric("rollout", "mean_reward", arena::format_real(r.mean_reward())).c_str());
  std::puts(metric("rollout", "mean_steps", arena::format_real(r.mean_steps())).c_str());
  if (r.bounds) {
    std::printf("bounds [%s, %s]: %zu violation(s)\n", arena::format_real(r.bounds->first).c_str(),
                arena::format_real(r.bounds->second).c_str(), r.violations);
    std::puts(metric("rollout", "bound_violations", std::to_string(r.violations)).c_str());
  } else {
    std::puts("bounds not checked (continue_game > 0, clipping or custom reward)");
  }
  return r.violations == 0 ? 0 : 1;
}

int cmd_bounds(const CommonOptions& o, std::optional<double> k) {
  arena::EnvSpec spec = load_spec(o);
  if (k) spec.wrappers.reward_normalization = *k;
  const auto def = arena::GameRegistry::builtin().find(spec.settings.game_id);
  spec.settings.validate(*def);
  const arena::RewardBounds b = arena::episode_reward_bounds(*def, spec.settings);
  std::printf("%s %s: %lld / %lld (raw)\n", spec.settings.game_id.c_str(),
              spec.settings.two_player() ? "2P" : "1P", static_cast<long long>(b.min), static_cast<long long>(b.max));
  std::puts(metric("bounds", "min", std::to_string(b.min)).c_str());
  std::puts(metric("bounds", "max", std::to_string(b.max)).c_str());
  if (spec.wrappers.reward_normalization) {
    const double kk = *spec.wrappers.reward_normalization;
    const std::string lo = arena::format_real(arena::normalize_reward(static_cast<double>(b.min), kk, def->delta_h()));
    const std::string hi = arena::format_real(arena::normalize_reward(static_cast<double>(b.max), kk, def->delta_h()));
    std::printf("%s / %s (normalized, K=%s)\n", lo.c_str(), hi.c_str(), arena::format_real(kk).c_str());
    std::puts(metric("bounds", "normalized_min", lo).c_str());
    std::puts(metric("bounds", "normalized_max", hi).c_str());
  }
  return 0;
}

int cmd_bench(const CommonOptions& o, double duration, int parallel, bool over_wire, const std::string& report_path) {
  arena::EnvSpec spec = load_spec(o);
  spec.settings.step_ratio = 1;
  spec.settings.frame_shape = {128, 128, 1};
  const arena::BenchReport r = arena::run_bench(spec, duration, parallel, over_wire);
  std::string text;
  text += metric("bench", "game", spec.settings.game_id) + "\n";
  text += metric("bench", "frame_shape", "128,128,1") + "\n";
  text += metric("bench", "step_ratio", "1") + "\n";
  text += metric("bench", "parallel", std::to_string(r.parallel)) + "\n";
  text += metric("bench", "over_wire", r.over_wire ? "true" : "false") + "\n";
  text += metric("bench", "seconds", arena::format_real(r.seconds)) + "\n";
  text += metric("bench", "steps", std::to_string(r.steps)) + "\n";
  text += metric("bench", "steps_per_second", std::to_string(static_cast<long long>(r.steps_per_second))) + "\n";
  text += metric("bench", "peak_rss_mb", std::to_string(static_cast<long long>(r.peak_rss_mb + 0.5))) + "\n";
  std::printf("%.0f env-steps/s over %.1f s (%d instance%s%s), peak RSS %.1f MB\n", r.steps_per_second, r.seconds,
              r.parallel, r.parallel == 1 ? "" : "s", r.over_wire ? ", over the wire" : "", r.peak_rss_mb);
  std::fputs(text.c_str(), stdout);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw arena::Error(arena::Errc::kPathNotWritable, "cannot write '" + report_path + "'");
    out << text;
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  const arena::ValidationReport r = arena::validate_trajectory(path);
  std::printf("OK, %zu episodes, %llu steps\n", r.episode_count, static_cast<unsigned long long>(r.step_count));
  std::puts(metric("validate", "episodes", std::to_string(r.episode_count)).c_str());
  std::puts(metric("validate", "steps", std::to_string(r.step_count)).c_str());
  return 0;
}

int cmd_serve(const std::string& bind, std::optional<int> port, int max_sessions, double idle_seconds) {
  arena::ServerOptions opts;
  opts.bind_address = bind;
  opts.port = port ? static_cast<std::uint16_t>(*port) : arena::port_from_environment();
  opts.max_sessions = max_sessions;
  opts.idle_timeout = std::chrono::milliseconds(static_cast<long long>(idle_seconds * 1000));
  arena::Server server(opts);
  server.start();
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::printf("listening on %s:%u (max %d sessions)\n", bind.c_str(), server.port(), max_sessions);
  std::fflush(stdout);
  server.run();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fighting-game RL environment tools"};
  app.require_subcommand(1);

  CommonOptions common;
  int episodes = 10;
  std::uint64_t seed = 0;
  int parallel = 1;
  auto* rollout = app.add_subcommand("rollout", "Run uniform-random episodes and check the reward bounds");
  add_common(rollout, common);
  rollout->add_option("--episodes", episodes, "Episode count")->check(CLI::PositiveNumber);
  rollout->add_option("--seed", seed, "Base seed; episode i uses seed + i");
  rollout->add_option("--parallel", parallel, "Environment instances")->check(CLI::PositiveNumber);

  std::optional<double> k;
  auto* bounds = app.add_subcommand("bounds", "Print the cumulative episode reward bounds");
  add_common(bounds, common);
  bounds->add_option("--k", k, "Reward normalization factor")->check(CLI::PositiveNumber);

  double duration = 10;
  bool over_wire = false;
  std::string report_path;
  auto* bench = app.add_subcommand("bench", "Measure env-steps/s and peak memory at 128x128x1, step ratio 1");
  add_common(bench, common);
  bench->add_option("--duration", duration, "Seconds to run (>= 5)")->check(CLI::Range(5.0, 86400.0));
  bench->add_option("--parallel", parallel, "Environment instances")->check(CLI::PositiveNumber);
  bench->add_flag("--over-wire", over_wire, "Drive the environments through a local server");
  bench->add_option("--report", report_path, "Also write the key=value report to this file");

  std::string traj_file;
  auto* validate = app.add_subcommand("validate", "Check a trajectory file");
  validate->add_option("file", traj_file, "Trajectory file")->required();

  std::string bind = "127.0.0.1";
  std::optional<int> port;
  int max_sessions = 16;
  double idle_seconds = 600;
  auto* serve = app.add_subcommand("serve", "Run the environment server");
  serve->add_option("--bind", bind, "Bind address");
  serve->add_option("--port", port, "Port (default: $ARENA_PORT or 9431)")->check(CLI::Range(0, 65535));
  serve->add_option("--max-sessions", max_sessions, "Concurrent session limit")->check(CLI::PositiveNumber);
  serve->add_option("--idle-timeout", idle_seconds, "Seconds before an idle session is closed")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*rollout) return cmd_rollout(common, episodes, seed, parallel);
    if (*bounds) return cmd_bounds(common, k);
    if (*bench) return cmd_bench(common, duration, parallel, over_wire, report_path);
    if (*validate) return cmd_validate(traj_file);
    if (*serve) return cmd_serve(bind, port, max_sessions, idle_seconds);
  } catch (const arena::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::printf("arena.error.code=%u\n", static_cast<unsigned>(e.code()));
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kUsageError;
}
