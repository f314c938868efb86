// SPDX-License-Identifier: Apache-2.0
#include "arena/settings.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "arena/errors.hpp"
#include "arena/game_definition.hpp"

namespace arena {
namespace {

[[noreturn]] void invalid(std::string_view key, const std::string& what) {
  throw Error(Errc::kInvalidSettings, "key '" + std::string(key) + "': " + what);
}

template <typename F>
auto guarded(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::kInvalidSettings) throw;
    invalid(key, e.what());
  }
}

}  // namespace

std::string_view player_mode_name(PlayerMode mode) {
  switch (mode) {
    case PlayerMode::kP1: return "P1";
    case PlayerMode::kP2: return "P2";
    case PlayerMode::kRandom: return "Random";
    case PlayerMode::kP1P2: return "P1P2";
  }
  return "P1";
}

std::string_view action_space_name(ActionSpaceKind kind) {
  return kind == ActionSpaceKind::kDiscrete ? "Discrete" : "MultiDiscrete";
}

KvDocument EnvironmentSettings::to_document() const {
  KvDocument d;
  d.set("game_id", game_id);
  d.set("player", std::string(player_mode_name(player)));
  d.set_int("step_ratio", step_ratio);
  d.set_int_list("frame_shape", {frame_shape.height, frame_shape.width, frame_shape.channels});
  d.set_real("continue_game", continue_game);
  d.set_int("difficulty", difficulty);
  d.set_string_list("characters", characters[0]);
  if (two_player()) d.set_string_list("characters.P2", characters[1]);
  d.set_int("char_outfits", char_outfits);
  d.set("action_space", std::string(action_space_name(action_space)));
  d.set_bool("attack_but_combination", attack_but_combination);
  d.set_bool("hardcore", hardcore);
  d.set("seed", std::to_string(seed));
  return d;
}

EnvironmentSettings EnvironmentSettings::from_document(const KvDocument& doc) {
  static const std::set<std::string, std::less<>> known = {
      "game_id", "player", "step_ratio", "frame_shape", "continue_game", "difficulty", "characters",
      "characters.P2", "char_outfits", "action_space", "attack_but_combination", "hardcore", "seed"};
  for (const auto& [k, v] : doc.entries()) {
    if (!known.contains(k)) invalid(k, "unknown setting");
  }

  EnvironmentSettings s;
  if (const auto* v = doc.find("game_id")) s.game_id = *v;
  if (const auto* v = doc.find("player")) {
    if (*v == "P1") s.player = PlayerMode::kP1;
    else if (*v == "P2") s.player = PlayerMode::kP2;
    else if (*v == "Random") s.player = PlayerMode::kRandom;
    else if (*v == "P1P2") s.player = PlayerMode::kP1P2;
    else invalid("player", "expected P1, P2, Random or P1P2");
  }
  s.step_ratio = static_cast<int>(guarded("step_ratio", [&] { return doc.get_int_or("step_ratio", s.step_ratio); }));
  if (doc.contains("frame_shape")) {
    const auto shape = guarded("frame_shape", [&] { return doc.get_int_list("frame_shape"); });
    if (shape.size() != 3) invalid("frame_shape", "expected h,w,c");
    s.frame_shape = {static_cast<int>(shape[0]), static_cast<int>(shape[1]), static_cast<int>(shape[2])};
  }
  s.continue_game = guarded("continue_game", [&] { return doc.get_real_or("continue_game", s.continue_game); });
  s.difficulty = static_cast<int>(guarded("difficulty", [&] { return doc.get_int_or("difficulty", s.difficulty); }));
  if (doc.contains("characters")) s.characters[0] = doc.get_string_list("characters");
  if (doc.contains("characters.P2")) s.characters[1] = doc.get_string_list("characters.P2");
  s.char_outfits =
      static_cast<int>(guarded("char_outfits", [&] { return doc.get_int_or("char_outfits", s.char_outfits); }));
  if (const auto* v = doc.find("action_space")) {
    if (*v == "Discrete") s.action_space = ActionSpaceKind::kDiscrete;
    else if (*v == "MultiDiscrete") s.action_space = ActionSpaceKind::kMultiDiscrete;
    else invalid("action_space", "expected Discrete or MultiDiscrete");
  }
  s.attack_but_combination = guarded("attack_but_combination",
                                     [&] { return doc.get_bool_or("attack_but_combination", false); });
  s.hardcore = guarded("hardcore", [&] { return doc.get_bool_or("hardcore", false); });
  if (const auto* v = doc.find("seed")) {
    std::uint64_t seed = 0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), seed);
    if (res.ec != std::errc() || res.ptr != v->data() + v->size()) {
      const auto as_signed = parse_int(*v);
      if (!as_signed) invalid("seed", "expected 64-bit integer");
      seed = static_cast<std::uint64_t>(*as_signed);
    }
    s.seed = seed;
  }
  return s;
}

void EnvironmentSettings::validate(const GameDefinition& def) const {
  if (step_ratio < 1 || step_ratio > 6) invalid("step_ratio", "must be in 1..6");
  const auto& fs = frame_shape;
  if (fs.channels != 1 && fs.channels != 3) invalid("frame_shape", "channels must be 1 or 3");
  if (fs.height < 0 || fs.width < 0 || ((fs.height == 0) != (fs.width == 0))) {
    invalid("frame_shape", "height and width must both be positive, or both 0 for native");
  }
  if (!(continue_game >= 0.0 && continue_game <= 1.0)) invalid("continue_game", "must be in [0, 1]");
  if (!two_player() && (difficulty < 1 || difficulty > def.difficulty_levels)) {
    throw Error(Errc::kDifficultyOutOfRange, "difficulty " + std::to_string(difficulty) + " not in 1.." +
                                                 std::to_string(def.difficulty_levels));
  }
  if (char_outfits < 1) invalid("char_outfits", "must be >= 1");

  std::size_t min_palettes = SIZE_MAX;
  for (const auto& c : def.roster) min_palettes = std::min(min_palettes, c.outfit_palettes.size());
  const int players = two_player() ? 2 : 1;
  for (int p = 0; p < players; ++p) {
    const auto& names = characters[p];
    if (static_cast<int>(names.size()) > def.chars_per_side) {
      invalid(p == 0 ? "characters" : "characters.P2",
              "at most " + std::to_string(def.chars_per_side) + " characters per side");
    }
    for (const auto& name : names) {
      if (name == kRandomCharacter) {
        if (static_cast<std::size_t>(char_outfits) > min_palettes) {
          throw Error(Errc::kOutfitOutOfRange, "char_outfits " + std::to_string(char_outfits));
        }
        continue;
      }
      const int idx = def.character_index(name);
      if (idx < 0) throw Error(Errc::kUnknownCharacter, "no character '" + name + "' in " + def.game_id);
      if (static_cast<std::size_t>(char_outfits) > def.roster[idx].outfit_palettes.size()) {
        throw Error(Errc::kOutfitOutOfRange, "char_outfits " + std::to_string(char_outfits) + " for " + name);
      }
    }
    if (static_cast<int>(names.size()) < def.chars_per_side &&
        static_cast<std::size_t>(char_outfits) > min_palettes) {
      throw Error(Errc::kOutfitOutOfRange, "char_outfits " + std::to_string(char_outfits));
    }
  }
}

}  // namespace arena
