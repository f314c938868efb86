// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arena/codec.hpp"
#include "arena/env.hpp"
#include "arena/wrappers.hpp"

namespace arena {

// File layout (all integers big-endian):
//   "MARN" | u16 version | u32 header length | header document
//   per episode: u32 step count | reset record | step count x step record
//   u64 CRC-64/XZ of every preceding byte
// Records are encoded as in codec.hpp; step records carry the action the
// agent submitted under `action` (1P) or `action.P1`/`action.P2` (2P).
inline constexpr std::string_view kTrajectoryMagic = "MARN";
inline constexpr std::uint16_t kTrajectoryVersion = 1;

std::uint64_t crc64(std::string_view bytes);

struct TrajectoryHeader {
  std::uint16_t format_version = kTrajectoryVersion;
  std::string game_id;
  EnvironmentSettings settings;
  WrapperConfig wrappers;
  std::string user_name;
  std::vector<std::uint32_t> step_counts;
  KvDocument action_space;       // ActionSpaceSpec::describe()
  KvDocument observation_space;  // describe_observation_space()

  std::size_t episode_count() const { return step_counts.size(); }
  KvDocument to_document() const;
  static TrajectoryHeader from_document(const KvDocument& doc);
};

struct FinalizeReport {
  std::string path;
  std::size_t episode_count = 0;
  std::vector<std::uint32_t> step_counts;
  std::uint32_t dropped_steps = 0;  // steps of an unfinished episode
  std::vector<std::string> warnings;
};

// Records what the agent sees: wrap it outermost. Steps are spooled to
// `<path>.spool` and the trajectory file is written by finalize().
// Recording begins at the next reset.
class RecordingEnv final : public EnvWrapper {
 public:
  // Throws kPathNotWritable.
  RecordingEnv(std::unique_ptr<Env> inner, std::string path, std::string user_name, WrapperConfig wrappers = {});
  ~RecordingEnv() override;

  // The constructor's path checks, without taking an env. Leaves an empty
  // file at `path`.
  static void check_writable(const std::string& path);

  Observation reset() override;
  StepResult step(const ActionInput& action) override;
  void close() override;

  // Throws kNoCompleteEpisode (the spool is discarded either way).
  FinalizeReport finalize();
  bool finalized() const { return finalized_; }
  std::unique_ptr<Env> release();

 private:
  void discard_partial();

  std::string path_;
  std::string spool_path_;
  TrajectoryHeader header_;
  std::ofstream spool_;
  std::uint64_t complete_bytes_ = 0;  // spool length covering finished episodes
  std::uint64_t episode_bytes_ = 0;
  std::uint32_t episode_steps_ = 0;
  bool in_episode_ = false;
  bool finalized_ = false;
  std::string scratch_;
};

struct TrajectoryEpisode {
  std::size_t reset_offset = 0;            // byte offset of the reset record
  std::vector<std::size_t> step_offsets;   // byte offsets of step records
  std::size_t end_offset = 0;
};

// A fully loaded, checksum-verified trajectory file.
class TrajectoryFile {
 public:
  // Throws kIo, kChecksumMismatch, kFormatError.
  static TrajectoryFile open(const std::string& path);
  static TrajectoryFile from_bytes(std::string bytes, std::string path = {});

  const TrajectoryHeader& header() const { return header_; }
  const std::string& path() const { return path_; }
  std::size_t episode_count() const { return episodes_.size(); }
  const TrajectoryEpisode& episode(std::size_t i) const { return episodes_.at(i); }

  Observation reset_observation(std::size_t episode) const;
  StepResult step(std::size_t episode, std::size_t index) const;
  ActionInput action(std::size_t episode, std::size_t index) const;
  Record record_at(std::size_t offset) const;

 private:
  std::string path_;
  std::string bytes_;
  TrajectoryHeader header_;
  std::vector<TrajectoryEpisode> episodes_;
};

struct ValidationReport {
  std::string path;
  std::size_t episode_count = 0;
  std::uint64_t step_count = 0;
};

// Structural and semantic checks: checksum, header, step counts, one
// done=true per episode at its last step, observations conforming to the
// header spaces and actions inside the action space. Throws on failure.
ValidationReport validate_trajectory(const std::string& path);

// Replays stored episodes in order; the action passed to step() is ignored
// and the recorded one is exposed in info.recorded_action. Global episode i
// (numbered across files in list order) belongs to rank i % total_cpus.
class ReplayEnv final : public Env {
 public:
  // Throws kInvalidConfig for an empty list, kBadShard, kIncompatibleRecordings
  // and file errors.
  ReplayEnv(const std::vector<std::string>& files, int total_cpus = 1, int rank = 0,
            const GameRegistry& registry = GameRegistry::builtin());

  Observation reset() override;
  StepResult step(const ActionInput& action) override;
  const ActionSpaceSpec& action_space() const override { return action_space_; }
  const ObservationSpace& observation_space() const override { return observation_space_; }
  Frame render() override;
  void close() override { closed_ = true; }
  const GameDefinition& game() const override { return *def_; }
  const EnvironmentSettings& settings() const override { return files_.front().header().settings; }
  Rng& rng() override { return rng_; }

  // Global episode indices served by this instance.
  std::vector<std::size_t> served_episodes() const;
  // Set by the first reset() after the last assigned episode.
  bool exhausted() const { return exhausted_; }

 private:
  std::vector<TrajectoryFile> files_;
  std::vector<std::pair<std::size_t, std::size_t>> queue_;  // (file, local episode)
  std::vector<std::size_t> global_ids_;
  std::size_t next_ = 0;
  std::optional<std::pair<std::size_t, std::size_t>> current_;
  std::size_t step_index_ = 0;
  bool episode_over_ = false;
  bool exhausted_ = false;
  bool closed_ = false;
  Observation last_observation_;
  std::shared_ptr<const GameDefinition> def_;
  ActionSpaceSpec action_space_;
  ObservationSpace observation_space_;
  Rng rng_;
};

}  // namespace arena
