// SPDX-License-Identifier: Apache-2.0
#include "arena/game_definition.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "arena/errors.hpp"

namespace arena {

// Generated from data/games/*.json at configure time.
extern const std::vector<std::pair<std::string_view, std::string_view>>& embedded_game_files();

namespace {

using nlohmann::json;

AttackSpec parse_attack(const json& j) {
  AttackSpec a;
  a.damage = j.at("damage").get<int>();
  a.range = j.at("range").get<int>();
  a.startup_ticks = j.at("startup_ticks").get<int>();
  a.active_ticks = j.at("active_ticks").get<int>();
  a.recovery_ticks = j.at("recovery_ticks").get<int>();
  a.guard_break_ticks = j.value("guard_break_ticks", 0);
  return a;
}

std::array<AttackSpec, kAttackButtons> parse_attack_table(const json& j) {
  if (!j.is_array() || j.size() != kAttackButtons) {
    throw Error(Errc::kFormatError, "attack table must list exactly 3 buttons");
  }
  std::array<AttackSpec, kAttackButtons> out{};
  for (int i = 0; i < kAttackButtons; ++i) out[i] = parse_attack(j[i]);
  return out;
}

void require(bool cond, const std::string& what) {
  if (!cond) throw Error(Errc::kFormatError, "game definition: " + what);
}

}  // namespace

AttackSpec GameDefinition::attack(const CharacterSpec& character, int attack_index) const {
  if (attack_index >= 1 && attack_index <= kAttackButtons) return character.attacks[attack_index - 1];
  const int combo = attack_index - 1 - kAttackButtons;
  if (combo < 0 || combo >= static_cast<int>(attack_combos.size())) {
    throw Error(Errc::kActionOutOfRange, "attack index " + std::to_string(attack_index));
  }
  AttackSpec merged;
  merged.range = INT32_MAX;
  for (const int button : attack_combos[combo]) {
    const auto& a = character.attacks[button - 1];
    merged.damage += a.damage;
    merged.range = std::min(merged.range, a.range);
    merged.startup_ticks = std::max(merged.startup_ticks, a.startup_ticks);
    merged.active_ticks = std::max(merged.active_ticks, a.active_ticks);
    merged.recovery_ticks = std::max(merged.recovery_ticks, a.recovery_ticks);
    merged.guard_break_ticks = std::max(merged.guard_break_ticks, a.guard_break_ticks);
  }
  return merged;
}

int GameDefinition::character_index(std::string_view name) const {
  for (std::size_t i = 0; i < roster.size(); ++i) {
    if (roster[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void GameDefinition::validate() const {
  require(!game_id.empty(), "empty game_id");
  require(h_max > h_min, "h_max must exceed h_min");
  require(chars_per_side >= 1, "chars_per_side >= 1");
  require(max_stages >= 1, "max_stages >= 1");
  require(rounds_to_win >= 1, "rounds_to_win >= 1");
  require(!roster.empty(), "empty roster");
  require(static_cast<int>(roster.size()) >= chars_per_side, "roster smaller than chars_per_side");
  require(arena_width > 2 * min_separation, "arena too narrow");
  require(round_timer_ticks >= 1, "round_timer_ticks >= 1");
  require(jump_ticks >= 1, "jump_ticks >= 1");
  require(native_frame.height >= 64 && native_frame.width >= 64 && native_frame.channels == 3,
          "native frame must be at least 64x64x3");
  require(difficulty_levels >= 1, "difficulty_levels >= 1");
  for (const auto& combo : attack_combos) {
    require(combo.size() >= 2, "combo needs at least two buttons");
    for (const int b : combo) require(b >= 1 && b <= kAttackButtons, "combo button out of range");
    auto sorted = combo;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "repeated combo button");
  }
  for (const auto& c : roster) {
    require(!c.name.empty() && c.name.find(',') == std::string::npos, "bad character name");
    require(c.name != "Random", "'Random' is reserved");
    require(c.move_speed >= 1, "move_speed >= 1");
    require(c.outfit_palettes.size() >= 2, c.name + ": at least two outfit palettes");
    for (const auto& a : c.attacks) {
      require(a.damage > 0 && a.range > 0, c.name + ": attack damage and range must be positive");
      require(a.startup_ticks >= 1 && a.active_ticks >= 1 && a.recovery_ticks >= 1,
              c.name + ": attack tick counts must be >= 1");
    }
  }
}

GameDefinition parse_game_definition(std::string_view json_text) {
  GameDefinition def;
  try {
    const json j = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
    def.format_version = j.at("format_version").get<int>();
    require(def.format_version == 1, "unsupported format_version");
    def.game_id = j.at("game_id").get<std::string>();
    def.h_max = j.at("health").at("max").get<int>();
    def.h_min = j.at("health").at("min").get<int>();
    def.chars_per_side = j.at("chars_per_side").get<int>();
    def.max_stages = j.at("max_stages").get<int>();
    def.rounds_to_win = j.at("rounds_to_win").get<int>();
    def.arena_width = j.at("arena_width").get<int>();
    def.round_timer_ticks = j.at("round_timer_ticks").get<int>();
    def.jump_ticks = j.value("jump_ticks", def.jump_ticks);
    def.min_separation = j.value("min_separation", def.min_separation);
    const auto shape = j.at("native_frame").get<std::vector<int>>();
    require(shape.size() == 3, "native_frame needs 3 entries");
    def.native_frame = {shape[0], shape[1], shape[2]};
    def.difficulty_levels = j.at("difficulty_levels").get<int>();
    def.attack_combos = j.at("attack_combos").get<std::vector<std::vector<int>>>();
    const auto defaults = parse_attack_table(j.at("default_attacks"));
    for (const auto& c : j.at("roster")) {
      CharacterSpec spec;
      spec.name = c.at("name").get<std::string>();
      spec.move_speed = c.at("move_speed").get<int>();
      spec.attacks = c.contains("attacks") ? parse_attack_table(c.at("attacks")) : defaults;
      for (const auto& p : c.at("palettes")) {
        const auto rgb = p.get<std::vector<int>>();
        require(rgb.size() == 3, "palette entries are RGB triples");
        spec.outfit_palettes.push_back({static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]),
                                        static_cast<std::uint8_t>(rgb[2])});
      }
      def.roster.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kFormatError, std::string("game definition: ") + e.what());
  }
  def.validate();
  return def;
}

const GameRegistry& GameRegistry::builtin() {
  static const GameRegistry registry = [] {
    GameRegistry r;
    for (const auto& [name, text] : embedded_game_files()) r.add(parse_game_definition(text));
    if (const char* dir = std::getenv("ARENA_GAMES_DIR"); dir && *dir) {
      std::error_code ec;
      for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        std::stringstream ss;
        ss << in.rdbuf();
        r.add(parse_game_definition(ss.str()));
      }
    }
    return r;
  }();
  return registry;
}

void GameRegistry::add(GameDefinition def) {
  def.validate();
  auto id = def.game_id;
  games_[id] = std::make_shared<const GameDefinition>(std::move(def));
}

std::shared_ptr<const GameDefinition> GameRegistry::find(std::string_view game_id) const {
  const auto it = games_.find(game_id);
  if (it == games_.end()) throw Error(Errc::kUnknownGame, "no game '" + std::string(game_id) + "'");
  return it->second;
}

std::vector<std::string> GameRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : games_) out.push_back(k);
  return out;
}

}  // namespace arena
