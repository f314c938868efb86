// SPDX-License-Identifier: Apache-2.0
#include "arena/trajectory.hpp"

#include <boost/crc.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <iterator>

#include "arena/errors.hpp"

namespace arena {
namespace {

// CRC-64/XZ (ECMA-182 polynomial, reflected, inverted).
using Crc64 = boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true>;

constexpr std::string_view kSettingsPrefix = "settings.";

ActionSpaceSpec action_space_from_doc(const KvDocument& doc) {
  ActionSpaceSpec a;
  const auto& type = doc.get_string("action_space.type");
  if (type == action_space_name(ActionSpaceKind::kDiscrete)) {
    a.kind = ActionSpaceKind::kDiscrete;
  } else if (type == action_space_name(ActionSpaceKind::kMultiDiscrete)) {
    a.kind = ActionSpaceKind::kMultiDiscrete;
  } else {
    throw Error(Errc::kFormatError, "unknown action_space.type '" + type + "'");
  }
  a.combos = doc.get_bool("action_space.combos");
  a.players = static_cast<int>(doc.get_int("action_space.players"));
  a.move_count = kMoveCount;
  if (a.kind == ActionSpaceKind::kDiscrete) {
    a.attack_count = static_cast<int>(doc.get_int("action_space.n")) - a.move_count + 1;
  } else {
    const auto nvec = doc.get_int_list("action_space.nvec");
    if (nvec.size() != 2 || nvec[0] != kMoveCount) throw Error(Errc::kFormatError, "bad action_space.nvec");
    a.attack_count = static_cast<int>(nvec[1]);
  }
  return a;
}

void check_action(const ActionSpaceSpec& space, const ActionInput& action) {
  if (space.players == 2) {
    for (const char* p : {"P1", "P2"}) {
      const auto it = action.players.find(p);
      if (it == action.players.end()) throw Error(Errc::kFormatError, std::string("recorded action lacks ") + p);
      space.decode(it->second);
    }
  } else {
    space.decode(action.single);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::uint64_t crc64(std::string_view bytes) {
  Crc64 crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

// ---- header ----

KvDocument TrajectoryHeader::to_document() const {
  KvDocument d;
  d.set_int("format_version", format_version);
  d.set("game_id", game_id);
  d.set("user_name", user_name);
  d.set_int("episode_count", static_cast<std::int64_t>(step_counts.size()));
  d.set_int_list("step_counts", {step_counts.begin(), step_counts.end()});
  d.merge(settings.to_document(), kSettingsPrefix);
  d.merge(wrappers.to_document());
  d.merge(action_space);
  d.merge(observation_space);
  return d;
}

TrajectoryHeader TrajectoryHeader::from_document(const KvDocument& doc) {
  TrajectoryHeader h;
  h.format_version = static_cast<std::uint16_t>(doc.get_int("format_version"));
  h.game_id = doc.get_string("game_id");
  h.user_name = doc.get_string_or("user_name", "");
  for (const auto n : doc.get_int_list("step_counts")) {
    if (n < 0) throw Error(Errc::kFormatError, "negative step count");
    h.step_counts.push_back(static_cast<std::uint32_t>(n));
  }
  if (doc.get_int("episode_count") != static_cast<std::int64_t>(h.step_counts.size())) {
    throw Error(Errc::kFormatError, "episode_count does not match step_counts");
  }
  try {
    h.settings = EnvironmentSettings::from_document(doc.subset(kSettingsPrefix));
  } catch (const Error& e) {
    throw Error(Errc::kFormatError, std::string("header settings: ") + e.what());
  }
  h.wrappers = WrapperConfig::from_document(doc);
  for (const auto& [key, value] : doc.entries()) {
    if (key.starts_with("action_space.")) h.action_space.set(key, value);
    if (key.starts_with("obs.")) h.observation_space.set(key, value);
  }
  return h;
}

// ---- recorder ----

void RecordingEnv::check_writable(const std::string& path) {
  const std::string spool_path = path + ".spool";
  {
    std::ofstream spool(spool_path, std::ios::binary | std::ios::trunc);
    if (!spool) throw Error(Errc::kPathNotWritable, "cannot write to '" + spool_path + "'");
  }
  std::filesystem::remove(spool_path);
  std::ofstream probe(path, std::ios::binary | std::ios::app);
  if (!probe) throw Error(Errc::kPathNotWritable, "cannot write to '" + path + "'");
}

RecordingEnv::RecordingEnv(std::unique_ptr<Env> inner, std::string path, std::string user_name,
                           WrapperConfig wrappers)
    : EnvWrapper(std::move(inner)), path_(std::move(path)), spool_path_(path_ + ".spool") {
  check_writable(path_);
  spool_.open(spool_path_, std::ios::binary | std::ios::trunc);
  if (!spool_) throw Error(Errc::kPathNotWritable, "cannot write to '" + spool_path_ + "'");
  header_.game_id = inner_->settings().game_id;
  header_.settings = inner_->settings();
  header_.wrappers = std::move(wrappers);
  header_.wrappers.reward_hook = nullptr;
  header_.user_name = std::move(user_name);
  header_.action_space = inner_->action_space().describe();
  header_.observation_space = describe_observation_space(inner_->observation_space());
}

RecordingEnv::~RecordingEnv() {
  if (finalized_) return;
  try {
    finalize();
  } catch (const std::exception& e) {
    std::cerr << "warning: recording '" << path_ << "' not written: " << e.what() << '\n';
  }
}

void RecordingEnv::discard_partial() {
  if (in_episode_) spool_.seekp(static_cast<std::streamoff>(complete_bytes_));
  in_episode_ = false;
  episode_bytes_ = 0;
  episode_steps_ = 0;
}

Observation RecordingEnv::reset() {
  Observation obs = inner_->reset();
  if (finalized_) return obs;
  discard_partial();
  scratch_.clear();
  append_record(scratch_, observation_record(obs));
  spool_.write(scratch_.data(), static_cast<std::streamsize>(scratch_.size()));
  episode_bytes_ = scratch_.size();
  in_episode_ = true;
  return obs;
}

StepResult RecordingEnv::step(const ActionInput& action) {
  StepResult r = inner_->step(action);
  if (finalized_ || !in_episode_) return r;
  Record rec = step_record(r);
  put_action(rec.doc, "action", action);
  scratch_.clear();
  append_record(scratch_, rec);
  spool_.write(scratch_.data(), static_cast<std::streamsize>(scratch_.size()));
  if (!spool_) throw Error(Errc::kIo, "write to '" + spool_path_ + "' failed");
  episode_bytes_ += scratch_.size();
  ++episode_steps_;
  if (r.done) {
    header_.step_counts.push_back(episode_steps_);
    complete_bytes_ += episode_bytes_;
    in_episode_ = false;
    episode_bytes_ = 0;
    episode_steps_ = 0;
  }
  return r;
}

void RecordingEnv::close() {
  if (!finalized_) {
    try {
      finalize();
    } catch (const Error& e) {
      std::cerr << "warning: " << e.what() << '\n';
    }
  }
  inner_->close();
}

FinalizeReport RecordingEnv::finalize() {
  if (finalized_) throw Error(Errc::kProtocolState, "recording already finalized");
  finalized_ = true;
  FinalizeReport report;
  report.path = path_;
  if (in_episode_) {
    report.dropped_steps = episode_steps_;
    report.warnings.push_back("dropped unfinished episode with " + std::to_string(episode_steps_) + " steps");
    std::cerr << "warning: " << report.warnings.back() << '\n';
  }
  spool_.close();
  if (header_.step_counts.empty()) {
    std::filesystem::remove(spool_path_);
    std::error_code ec;
    if (std::filesystem::exists(path_, ec) && std::filesystem::file_size(path_, ec) == 0) {
      std::filesystem::remove(path_, ec);
    }
    throw Error(Errc::kNoCompleteEpisode, "no complete episode recorded");
  }

  std::ifstream spool(spool_path_, std::ios::binary);
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!spool || !out) throw Error(Errc::kPathNotWritable, "cannot write '" + path_ + "'");
  Crc64 crc;
  auto emit = [&](const std::string& bytes) {
    crc.process_bytes(bytes.data(), bytes.size());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  };

  std::string buf(kTrajectoryMagic);
  put_u16(buf, kTrajectoryVersion);
  const std::string header_text = header_.to_document().serialize();
  put_u32(buf, static_cast<std::uint32_t>(header_text.size()));
  buf += header_text;
  emit(buf);

  // Walk the spool episode by episode: one reset record, then step records.
  std::string chunk;
  auto copy_record = [&]() {
    char len_bytes[4];
    spool.read(len_bytes, 4);
    const std::uint32_t doc_len = get_u32(std::string_view(len_bytes, 4), 0);
    std::string doc_text(doc_len, '\0');
    spool.read(doc_text.data(), doc_len);
    const KvDocument doc = KvDocument::parse(doc_text);
    std::size_t frame_bytes = 0;
    if (doc.contains("frame.shape")) {
      const auto shape = doc.get_int_list("frame.shape");
      frame_bytes = static_cast<std::size_t>(shape.at(0) * shape.at(1) * shape.at(2)) *
                    dtype_size(dtype_from_name(doc.get_string("frame.dtype")));
    }
    chunk.assign(len_bytes, 4);
    chunk += doc_text;
    const std::size_t start = chunk.size();
    chunk.resize(start + frame_bytes);
    spool.read(chunk.data() + start, static_cast<std::streamsize>(frame_bytes));
    if (!spool) throw Error(Errc::kIo, "spool '" + spool_path_ + "' is truncated");
    emit(chunk);
  };
  for (const std::uint32_t steps : header_.step_counts) {
    buf.clear();
    put_u32(buf, steps);
    emit(buf);
    for (std::uint32_t i = 0; i <= steps; ++i) copy_record();
  }
  buf.clear();
  put_u64(buf, crc.checksum());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.close();
  spool.close();
  std::filesystem::remove(spool_path_);
  if (!out) throw Error(Errc::kIo, "write to '" + path_ + "' failed");

  report.episode_count = header_.step_counts.size();
  report.step_counts = header_.step_counts;
  return report;
}

std::unique_ptr<Env> RecordingEnv::release() {
  if (!finalized_) {
    try {
      finalize();
    } catch (const Error& e) {
      std::cerr << "warning: " << e.what() << '\n';
    }
  }
  return std::move(inner_);
}

// ---- reader ----

TrajectoryFile TrajectoryFile::open(const std::string& path) { return from_bytes(read_file(path), path); }

TrajectoryFile TrajectoryFile::from_bytes(std::string bytes, std::string path) {
  TrajectoryFile f;
  f.path_ = std::move(path);
  f.bytes_ = std::move(bytes);
  const std::string_view all(f.bytes_);
  if (all.size() < 4 + 2 + 4 + 8 || all.substr(0, 4) != kTrajectoryMagic) {
    throw Error(Errc::kFormatError, "not a trajectory file (bad magic)");
  }
  const std::uint64_t stored = get_u64(all, all.size() - 8);
  if (crc64(all.substr(0, all.size() - 8)) != stored) throw Error(Errc::kChecksumMismatch, "checksum mismatch");
  const std::uint16_t version = get_u16(all, 4);
  if (version != kTrajectoryVersion) {
    throw Error(Errc::kFormatError, "unsupported trajectory version " + std::to_string(version));
  }
  const std::uint32_t header_len = get_u32(all, 6);
  const std::size_t body_end = all.size() - 8;
  if (10 + static_cast<std::size_t>(header_len) > body_end) throw Error(Errc::kFormatError, "header truncated");
  f.header_ = TrajectoryHeader::from_document(KvDocument::parse(all.substr(10, header_len)));
  if (f.header_.format_version != version) throw Error(Errc::kFormatError, "header version differs from file version");

  // Index the records without decoding frames.
  std::size_t pos = 10 + header_len;
  auto skip_record = [&]() {
    const std::size_t start = pos;
    const std::uint32_t doc_len = get_u32(all.substr(0, body_end), pos);
    if (pos + 4 + doc_len > body_end) throw Error(Errc::kFormatError, "record truncated");
    const KvDocument doc = KvDocument::parse(all.substr(pos + 4, doc_len));
    std::size_t frame_bytes = 0;
    if (doc.contains("frame.shape")) {
      const auto shape = doc.get_int_list("frame.shape");
      if (shape.size() != 3 || shape[0] < 0 || shape[1] < 0 || shape[2] < 0) {
        throw Error(Errc::kFormatError, "bad frame.shape");
      }
      frame_bytes = static_cast<std::size_t>(shape[0] * shape[1] * shape[2]) *
                    dtype_size(dtype_from_name(doc.get_string("frame.dtype")));
    }
    pos += 4 + doc_len + frame_bytes;
    if (pos > body_end) throw Error(Errc::kFormatError, "frame bytes truncated");
    return start;
  };
  for (std::size_t e = 0; e < f.header_.step_counts.size(); ++e) {
    const std::uint32_t steps = get_u32(all.substr(0, body_end), pos);
    if (steps != f.header_.step_counts[e]) {
      throw Error(Errc::kFormatError, "episode " + std::to_string(e) + " step count differs from header");
    }
    pos += 4;
    TrajectoryEpisode ep;
    ep.reset_offset = skip_record();
    ep.step_offsets.reserve(steps);
    for (std::uint32_t i = 0; i < steps; ++i) ep.step_offsets.push_back(skip_record());
    ep.end_offset = pos;
    f.episodes_.push_back(std::move(ep));
  }
  if (pos != body_end) throw Error(Errc::kFormatError, "trailing bytes after the last episode");
  return f;
}

Record TrajectoryFile::record_at(std::size_t offset) const {
  const std::string_view all(bytes_);
  const std::uint32_t doc_len = get_u32(all, offset);
  const KvDocument doc = KvDocument::parse(all.substr(offset + 4, doc_len));
  std::size_t frame_bytes = 0;
  if (doc.contains("frame.shape")) {
    const auto shape = doc.get_int_list("frame.shape");
    frame_bytes = static_cast<std::size_t>(shape[0] * shape[1] * shape[2]) *
                  dtype_size(dtype_from_name(doc.get_string("frame.dtype")));
  }
  return decode_record(all.substr(offset, 4 + doc_len + frame_bytes));
}

Observation TrajectoryFile::reset_observation(std::size_t episode) const {
  return observation_from_record(record_at(episodes_.at(episode).reset_offset));
}

StepResult TrajectoryFile::step(std::size_t episode, std::size_t index) const {
  const Record rec = record_at(episodes_.at(episode).step_offsets.at(index));
  StepResult r = step_from_record(rec);
  r.info.recorded_action = get_action(rec.doc, "action");
  return r;
}

ActionInput TrajectoryFile::action(std::size_t episode, std::size_t index) const {
  return get_action(record_at(episodes_.at(episode).step_offsets.at(index)).doc, "action");
}

ValidationReport validate_trajectory(const std::string& path) {
  const TrajectoryFile file = TrajectoryFile::open(path);
  const TrajectoryHeader& h = file.header();
  if (h.settings.game_id != h.game_id) throw Error(Errc::kFormatError, "header game_id differs from settings");
  const ActionSpaceSpec action_space = action_space_from_doc(h.action_space);
  const ObservationSpace obs_space = parse_observation_space(h.observation_space);

  // The header settings and wrappers must reconstruct the recorded spaces.
  if (const auto ids = GameRegistry::builtin().ids(); std::find(ids.begin(), ids.end(), h.game_id) != ids.end()) {
    WrapperConfig wc = h.wrappers;
    auto env = wrap(make(h.game_id, h.settings), wc);
    if (env->action_space().describe() != h.action_space) {
      throw Error(Errc::kFormatError, "action space does not match the header settings");
    }
    if (describe_observation_space(env->observation_space()) != h.observation_space) {
      throw Error(Errc::kFormatError, "observation space does not match the header settings");
    }
  }

  ValidationReport report;
  report.path = path;
  report.episode_count = file.episode_count();
  if (report.episode_count == 0) throw Error(Errc::kNoCompleteEpisode, "file holds no episodes");
  const std::size_t rewards = action_space.players == 2 ? 2 : 1;
  for (std::size_t e = 0; e < file.episode_count(); ++e) {
    const std::string where = "episode " + std::to_string(e);
    std::string why;
    if (!conforms(obs_space, file.reset_observation(e), &why)) {
      throw Error(Errc::kFormatError, where + " reset observation: " + why);
    }
    const std::size_t steps = file.episode(e).step_offsets.size();
    if (steps == 0) throw Error(Errc::kFormatError, where + " has no steps");
    for (std::size_t i = 0; i < steps; ++i) {
      const StepResult r = file.step(e, i);
      const std::string at = where + " step " + std::to_string(i);
      if (!conforms(obs_space, r.observation, &why)) throw Error(Errc::kFormatError, at + ": " + why);
      if (r.reward.size() != rewards) throw Error(Errc::kFormatError, at + ": reward count");
      if (r.done != (i + 1 == steps)) throw Error(Errc::kFormatError, at + ": done must be set exactly at the last step");
      try {
        check_action(action_space, *r.info.recorded_action);
      } catch (const Error& err) {
        throw Error(Errc::kFormatError, at + ": action " + err.what());
      }
      ++report.step_count;
    }
  }
  return report;
}

// ---- replay ----

ReplayEnv::ReplayEnv(const std::vector<std::string>& files, int total_cpus, int rank, const GameRegistry& registry) {
  if (total_cpus < 1 || rank < 0 || rank >= total_cpus) {
    throw Error(Errc::kBadShard, "need 0 <= rank < total_cpus (got rank " + std::to_string(rank) + ", total_cpus " +
                                     std::to_string(total_cpus) + ")");
  }
  if (files.empty()) throw Error(Errc::kInvalidConfig, "no trajectory files given");
  for (const auto& path : files) files_.push_back(TrajectoryFile::open(path));
  const TrajectoryHeader& first = files_.front().header();
  for (const auto& f : files_) {
    const auto& h = f.header();
    if (h.game_id != first.game_id || h.action_space != first.action_space ||
        h.observation_space != first.observation_space) {
      throw Error(Errc::kIncompatibleRecordings, "'" + f.path() + "' is not compatible with '" +
                                                     files_.front().path() + "'");
    }
  }
  def_ = registry.find(first.game_id);
  action_space_ = action_space_from_doc(first.action_space);
  observation_space_ = parse_observation_space(first.observation_space);
  rng_.seed(first.settings.seed);

  std::size_t global = 0;
  for (std::size_t fi = 0; fi < files_.size(); ++fi) {
    for (std::size_t e = 0; e < files_[fi].episode_count(); ++e, ++global) {
      if (global % static_cast<std::size_t>(total_cpus) == static_cast<std::size_t>(rank)) {
        queue_.emplace_back(fi, e);
        global_ids_.push_back(global);
      }
    }
  }
}

std::vector<std::size_t> ReplayEnv::served_episodes() const { return global_ids_; }

Observation ReplayEnv::reset() {
  if (closed_) throw Error(Errc::kUseAfterClose, "environment is closed");
  if (next_ >= queue_.size()) {
    if (!current_) throw Error(Errc::kExhaustedTrajectories, "no episodes assigned to this shard");
    exhausted_ = true;
    return last_observation_;
  }
  current_ = queue_[next_++];
  step_index_ = 0;
  episode_over_ = false;
  last_observation_ = files_[current_->first].reset_observation(current_->second);
  return last_observation_;
}

StepResult ReplayEnv::step(const ActionInput&) {
  if (closed_) throw Error(Errc::kUseAfterClose, "environment is closed");
  if (exhausted_) throw Error(Errc::kExhaustedTrajectories, "all assigned episodes have been replayed");
  if (!current_) throw Error(Errc::kNotReset, "step before reset");
  if (episode_over_) throw Error(Errc::kNotReset, "episode is over; call reset");
  StepResult r = files_[current_->first].step(current_->second, step_index_++);
  episode_over_ = r.done;
  last_observation_ = r.observation;
  return r;
}

Frame ReplayEnv::render() {
  if (closed_) throw Error(Errc::kUseAfterClose, "environment is closed");
  if (!current_) throw Error(Errc::kNotReset, "render before reset");
  const Frame* f = last_observation_.frame();
  if (!f) throw Error(Errc::kFormatError, "recording holds no frames");
  return *f;
}

}  // namespace arena
