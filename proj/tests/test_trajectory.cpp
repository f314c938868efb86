// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "arena/trajectory.hpp"
#include "fixture_recipes.hpp"
#include "test_support.hpp"

namespace arena {
namespace {

using testing::FakeEnv;
using testing::TempDir;
using testing::throws_code;
using testing::stream_bytes;

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ActionInput act(int a) { return ActionInput::one({a}); }

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Records `episodes` complete FakeEnv episodes of `length` steps.
FinalizeReport record_fake(const std::string& path, int episodes, int length = 3,
                           EnvironmentSettings settings = FakeEnv::fake_settings()) {
  RecordingEnv env(std::make_unique<FakeEnv>(length, settings), path, "tester");
  for (int e = 0; e < episodes; ++e) {
    env.reset();
    for (int t = 0; t < length; ++t) env.step(act((e + t) % 12));
  }
  return env.finalize();
}

TEST(Crc64, CheckValue) {
  EXPECT_EQ(crc64("123456789"), 0x995DC9BBDF1939FAull);
  EXPECT_EQ(crc64(""), 0u);
}

TEST(Recording, ThreeStepEpisode) {
  TempDir dir;
  const auto report = record_fake(dir.file("a.traj"), 1);
  EXPECT_EQ(report.episode_count, 1u);
  EXPECT_EQ(report.step_counts, (std::vector<std::uint32_t>{3}));
  EXPECT_EQ(report.dropped_steps, 0u);
  EXPECT_TRUE(report.warnings.empty());
  const auto file = TrajectoryFile::open(dir.file("a.traj"));
  EXPECT_EQ(file.header().step_counts, (std::vector<std::uint32_t>{3}));
  EXPECT_EQ(file.header().user_name, "tester");
  EXPECT_FALSE(std::filesystem::exists(dir.file("a.traj.spool")));
}

TEST(Recording, TwoEpisodes) {
  TempDir dir;
  const auto report = record_fake(dir.file("b.traj"), 2);
  EXPECT_EQ(report.episode_count, 2u);
  EXPECT_EQ(TrajectoryFile::open(dir.file("b.traj")).episode_count(), 2u);
}

TEST(Recording, StoresSubmittedActions) {
  TempDir dir;
  record_fake(dir.file("c.traj"), 2);
  const auto file = TrajectoryFile::open(dir.file("c.traj"));
  for (std::size_t e = 0; e < 2; ++e) {
    for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(file.action(e, t).single, (EncodedAction{static_cast<int>((e + t) % 12)}));
  }
}

TEST(Recording, UnwritablePath) {
  EXPECT_TRUE(throws_code([] { RecordingEnv env(std::make_unique<FakeEnv>(), "/nonexistent-dir/x.traj", "u"); },
                          Errc::kPathNotWritable));
}

TEST(Recording, StartsAtNextResetAndRestartsOnReset) {
  TempDir dir;
  RecordingEnv env(std::make_unique<FakeEnv>(3), dir.file("late.traj"), "u");
  env.step(act(7));  // before any reset: not recorded
  env.reset();
  env.step(act(1));  // abandoned by the next reset
  env.reset();
  for (int t = 0; t < 3; ++t) env.step(act(2));
  const auto report = env.finalize();
  EXPECT_EQ(report.episode_count, 1u);
  EXPECT_EQ(report.step_counts, (std::vector<std::uint32_t>{3}));
  const auto file = TrajectoryFile::open(dir.file("late.traj"));
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(file.action(0, t).single, EncodedAction{2});
}

TEST(Recording, PartialEpisodeDroppedWithWarning) {
  TempDir dir;
  RecordingEnv env(std::make_unique<FakeEnv>(3), dir.file("p.traj"), "u");
  env.reset();
  for (int t = 0; t < 3; ++t) env.step(act(0));
  env.reset();
  env.step(act(0));
  env.step(act(0));
  ::testing::internal::CaptureStderr();
  const auto report = env.finalize();
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_EQ(report.episode_count, 1u);
  EXPECT_EQ(report.dropped_steps, 2u);
  ASSERT_EQ(report.warnings.size(), 1u);
  EXPECT_NE(err.find(report.warnings[0]), std::string::npos);
  EXPECT_EQ(TrajectoryFile::open(dir.file("p.traj")).episode_count(), 1u);
}

TEST(Recording, NoCompleteEpisodeLeavesNothing) {
  TempDir dir;
  const std::string path = dir.file("z.traj");
  {
    RecordingEnv env(std::make_unique<FakeEnv>(3), path, "u");
    env.reset();
    env.step(act(0));
    ::testing::internal::CaptureStderr();
    EXPECT_TRUE(throws_code([&] { env.finalize(); }, Errc::kNoCompleteEpisode));
    ::testing::internal::GetCapturedStderr();
    EXPECT_TRUE(throws_code([&] { env.finalize(); }, Errc::kProtocolState));
  }
  EXPECT_FALSE(std::filesystem::exists(path));
  EXPECT_FALSE(std::filesystem::exists(path + ".spool"));
}

TEST(Recording, SecondFinalizeRejected) {
  TempDir dir;
  RecordingEnv env(std::make_unique<FakeEnv>(1), dir.file("f.traj"), "u");
  env.reset();
  env.step(act(0));
  env.finalize();
  EXPECT_TRUE(env.finalized());
  EXPECT_TRUE(throws_code([&] { env.finalize(); }, Errc::kProtocolState));
}

TEST(TrajectoryFileTest, ChecksumAndFormatErrors) {
  TempDir dir;
  const std::string path = dir.file("k.traj");
  record_fake(path, 2);
  const std::string good = read_bytes(path);
  ASSERT_GT(good.size(), 20u);
  EXPECT_EQ(good.substr(0, 4), "MARN");
  EXPECT_EQ(get_u16(good, 4), kTrajectoryVersion);
  EXPECT_EQ(get_u64(good, good.size() - 8), crc64(std::string_view(good).substr(0, good.size() - 8)));

  for (const std::size_t pos : {std::size_t{10}, good.size() / 2, good.size() - 9, good.size() - 1}) {
    std::string bad = good;
    bad[pos] = static_cast<char>(bad[pos] ^ 0x40);
    EXPECT_TRUE(throws_code([&] { TrajectoryFile::from_bytes(bad); }, Errc::kChecksumMismatch)) << pos;
  }
  EXPECT_TRUE(throws_code([&] { TrajectoryFile::from_bytes(good.substr(0, good.size() - 3)); },
                          Errc::kChecksumMismatch));
  EXPECT_TRUE(throws_code([&] { TrajectoryFile::from_bytes("MAR"); }, Errc::kFormatError));

  // Wrong magic with a valid checksum is a format error.
  std::string magic = good.substr(0, good.size() - 8);
  magic[0] = 'X';
  put_u64(magic, crc64(magic));
  EXPECT_TRUE(throws_code([&] { TrajectoryFile::from_bytes(magic); }, Errc::kFormatError));

  std::string version = good.substr(0, good.size() - 8);
  version[5] = 2;
  put_u64(version, crc64(version));
  EXPECT_TRUE(throws_code([&] { TrajectoryFile::from_bytes(version); }, Errc::kFormatError));

  EXPECT_TRUE(throws_code([&] { TrajectoryFile::open(dir.file("missing.traj")); }, Errc::kIo));
  write_bytes(dir.file("bad.traj"), magic);
  EXPECT_TRUE(throws_code([&] { validate_trajectory(dir.file("bad.traj")); }, Errc::kFormatError));
}

// Records real duel episodes while capturing the live stream, then checks
// that replay reproduces it byte for byte.
TEST(Replay, FidelityAgainstLiveStream) {
  TempDir dir;
  const std::string path = dir.file("live.traj");
  EnvironmentSettings s = testing::small_frames();
  s.seed = 21;
  std::vector<std::vector<std::string>> live;
  std::vector<std::vector<EncodedAction>> actions;
  {
    RecordingEnv env(make("duel", s), path, "u");
    Rng rng(99);
    for (int e = 0; e < 5; ++e) {
      live.emplace_back();
      actions.emplace_back();
      live.back().push_back(stream_bytes(env.reset()));
      while (true) {
        const auto a = env.sample_action(rng);
        actions.back().push_back(a.single);
        StepResult r = env.step(a);
        const bool done = r.done;
        live.back().push_back(stream_bytes(std::move(r)));
        if (done) break;
      }
    }
    EXPECT_EQ(env.finalize().episode_count, 5u);
  }
  const auto v = validate_trajectory(path);
  EXPECT_EQ(v.episode_count, 5u);
  std::uint64_t total = 0;
  for (const auto& ep : live) total += ep.size() - 1;
  EXPECT_EQ(v.step_count, total);

  ReplayEnv replay({path});
  EXPECT_EQ(replay.served_episodes(), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  Rng junk(1234);
  for (std::size_t e = 0; e < live.size(); ++e) {
    ASSERT_EQ(stream_bytes(replay.reset()), live[e][0]) << "episode " << e;
    for (std::size_t t = 1; t < live[e].size(); ++t) {
      // The submitted action never alters the stream.
      StepResult r = replay.step(replay.sample_action(junk));
      ASSERT_TRUE(r.info.recorded_action.has_value());
      EXPECT_EQ(r.info.recorded_action->single, actions[e][t - 1]);
      ASSERT_EQ(stream_bytes(std::move(r)), live[e][t]) << "episode " << e << " step " << t;
    }
  }
  EXPECT_FALSE(replay.exhausted());
  replay.reset();
  EXPECT_TRUE(replay.exhausted());
}

TEST(Replay, HeaderSpacesMatchRebuiltEnvironment) {
  TempDir dir;
  const std::string path = dir.file("spaces.traj");
  EnvironmentSettings s = testing::small_frames();
  s.action_space = ActionSpaceKind::kMultiDiscrete;
  s.attack_but_combination = false;
  {
    RecordingEnv env(make("duel", s), path, "u");
    Rng rng(3);
    env.reset();
    while (!env.step(env.sample_action(rng)).done) {
    }
    env.finalize();
  }
  const auto file = TrajectoryFile::open(path);
  const auto live = make(file.header().game_id, file.header().settings);
  EXPECT_EQ(file.header().action_space, live->action_space().describe());
  EXPECT_EQ(file.header().observation_space, describe_observation_space(live->observation_space()));
  ReplayEnv replay({path});
  EXPECT_EQ(replay.action_space().describe(), live->action_space().describe());
  EXPECT_EQ(describe_observation_space(replay.observation_space()),
            describe_observation_space(live->observation_space()));
  EXPECT_EQ(replay.settings().to_document(), s.to_document());
}

TEST(Replay, WrappedRecordingKeepsWrappedSpaces) {
  TempDir dir;
  const std::string path = dir.file("wrapped.traj");
  WrapperConfig w;
  w.scale = true;
  w.frame_stack = FrameStackSpec{2, 1};
  auto inner = wrap(make("duel", testing::small_frames()), w);
  const auto expected_space = describe_observation_space(inner->observation_space());
  {
    RecordingEnv env(std::move(inner), path, "u", w);
    Rng rng(8);
    env.reset();
    while (!env.step(env.sample_action(rng)).done) {
    }
    env.finalize();
  }
  const auto file = TrajectoryFile::open(path);
  EXPECT_EQ(file.header().wrappers.to_document(), w.to_document());
  ReplayEnv replay({path});
  EXPECT_EQ(describe_observation_space(replay.observation_space()), expected_space);
  const auto obs = replay.reset();
  ASSERT_NE(obs.frame(), nullptr);
  EXPECT_EQ(obs.frame()->dtype, DType::kF32);
  EXPECT_EQ(obs.frame()->shape, (FrameShape{32, 32, 2}));
  EXPECT_EQ(validate_trajectory(path).episode_count, 1u);
}

TEST(Replay, ShardingAcrossFiles) {
  TempDir dir;
  record_fake(dir.file("s1.traj"), 3);
  record_fake(dir.file("s2.traj"), 2);
  const std::vector<std::string> files{dir.file("s1.traj"), dir.file("s2.traj")};
  ReplayEnv rank0(files, 2, 0);
  ReplayEnv rank1(files, 2, 1);
  EXPECT_EQ(rank0.served_episodes(), (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_EQ(rank1.served_episodes(), (std::vector<std::size_t>{1, 3}));

  // Every episode served exactly once across ranks, for several widths.
  for (int total = 1; total <= 6; ++total) {
    std::set<std::size_t> seen;
    std::size_t count = 0;
    for (int rank = 0; rank < total; ++rank) {
      for (const auto e : ReplayEnv(files, total, rank).served_episodes()) {
        seen.insert(e);
        ++count;
      }
    }
    EXPECT_EQ(count, 5u) << total;
    EXPECT_EQ(seen.size(), 5u) << total;
  }

  // Rank 1 serves global episode 1 (s1 local 1) then 3 (s2 local 0); FakeEnv
  // actions are (episode + t) % 12, so the first recorded action identifies the episode.
  rank1.reset();
  EXPECT_EQ(rank1.step(act(0)).info.recorded_action->single, EncodedAction{1});
  rank1.reset();
  EXPECT_EQ(rank1.step(act(0)).info.recorded_action->single, EncodedAction{0});
}

TEST(Replay, FourEpisodesTwoCpus) {
  TempDir dir;
  record_fake(dir.file("four.traj"), 4);
  EXPECT_EQ(ReplayEnv({dir.file("four.traj")}, 2, 0).served_episodes(), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(ReplayEnv({dir.file("four.traj")}, 2, 1).served_episodes(), (std::vector<std::size_t>{1, 3}));
}

TEST(Replay, BadShard) {
  TempDir dir;
  record_fake(dir.file("x.traj"), 1);
  const std::vector<std::string> files{dir.file("x.traj")};
  EXPECT_TRUE(throws_code([&] { ReplayEnv(files, 2, 2); }, Errc::kBadShard));
  EXPECT_TRUE(throws_code([&] { ReplayEnv(files, 2, -1); }, Errc::kBadShard));
  EXPECT_TRUE(throws_code([&] { ReplayEnv(files, 0, 0); }, Errc::kBadShard));
  EXPECT_TRUE(throws_code([&] { ReplayEnv(std::vector<std::string>{}, 1, 0); }, Errc::kInvalidConfig));
}

TEST(Replay, IncompatibleRecordings) {
  TempDir dir;
  record_fake(dir.file("d.traj"), 1);
  EnvironmentSettings other = FakeEnv::fake_settings();
  other.game_id = "tagduel";
  record_fake(dir.file("t.traj"), 1, 3, other);
  EXPECT_TRUE(throws_code([&] { ReplayEnv({dir.file("d.traj"), dir.file("t.traj")}); },
                          Errc::kIncompatibleRecordings));

  // Same game, different action space.
  EnvironmentSettings combos = FakeEnv::fake_settings();
  combos.attack_but_combination = true;
  record_fake(dir.file("c.traj"), 1, 3, combos);
  EXPECT_TRUE(throws_code([&] { ReplayEnv({dir.file("d.traj"), dir.file("c.traj")}); },
                          Errc::kIncompatibleRecordings));
}

TEST(Replay, Exhaustion) {
  TempDir dir;
  record_fake(dir.file("e.traj"), 1, 2);
  ReplayEnv replay({dir.file("e.traj")});
  EXPECT_TRUE(throws_code([&] { replay.step(act(0)); }, Errc::kNotReset));
  replay.reset();
  replay.step(act(0));
  const auto last = replay.step(act(0));
  EXPECT_TRUE(last.done);
  EXPECT_FALSE(replay.exhausted());
  EXPECT_EQ(stream_bytes(replay.reset()), stream_bytes(last.observation));
  EXPECT_TRUE(replay.exhausted());
  EXPECT_TRUE(throws_code([&] { replay.step(act(0)); }, Errc::kExhaustedTrajectories));

  // One episode, two ranks: rank 1 has nothing to serve.
  ReplayEnv empty({dir.file("e.traj")}, 2, 1);
  EXPECT_TRUE(empty.served_episodes().empty());
  EXPECT_TRUE(throws_code([&] { empty.reset(); }, Errc::kExhaustedTrajectories));
}

TEST(Validate, CountsRealRecording) {
  TempDir dir;
  const std::string path = dir.file("v.traj");
  std::vector<std::uint32_t> expected;
  {
    RecordingEnv env(make("duel", testing::small_frames()), path, "u");
    Rng rng(5);
    for (int e = 0; e < 3; ++e) {
      env.reset();
      std::uint32_t n = 0;
      do {
        ++n;
      } while (!env.step(env.sample_action(rng)).done);
      expected.push_back(n);
    }
    EXPECT_EQ(env.finalize().step_counts, expected);
  }
  const auto v = validate_trajectory(path);
  EXPECT_EQ(v.episode_count, 3u);
  EXPECT_EQ(v.step_count, std::uint64_t{expected[0]} + expected[1] + expected[2]);
}

// The frozen fixture is regenerated from its recipe and must match byte for
// byte, so any change to the format or the simulation shows up here.
TEST(Fixture, TrajectoryRecipeReproducesFrozenFile) {
  const std::string frozen_path = std::string(ARENA_FIXTURE_DIR) + "/" + fixtures::kTrajectoryName;
  const std::string frozen = read_bytes(frozen_path);
  ASSERT_FALSE(frozen.empty()) << "missing fixture " << frozen_path;
  EXPECT_EQ(frozen.substr(0, 4), "MARN");
  EXPECT_EQ(frozen[4], 0);
  EXPECT_EQ(frozen[5], 1);
  TempDir dir;
  const auto report = fixtures::record_trajectory(dir.file("again.traj"));
  EXPECT_EQ(report.episode_count, 2u);
  EXPECT_TRUE(read_bytes(dir.file("again.traj")) == frozen);
  const auto v = validate_trajectory(frozen_path);
  EXPECT_EQ(v.episode_count, 2u);
  const auto file = TrajectoryFile::open(frozen_path);
  EXPECT_EQ(file.header().game_id, "duel");
  EXPECT_EQ(file.header().user_name, "fixture");
  EXPECT_EQ(file.header().settings.to_document(), fixtures::trajectory_settings().to_document());
}

}  // namespace
}  // namespace arena
