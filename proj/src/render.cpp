// SPDX-License-Identifier: Apache-2.0
#include "arena/render.hpp"

#include <algorithm>
#include <cstring>

namespace arena {
namespace {

constexpr Rgb kStageColors[8] = {
    {52, 72, 110}, {96, 60, 90}, {60, 100, 70}, {110, 84, 50},
    {70, 70, 70},  {40, 90, 110}, {110, 50, 50}, {80, 60, 120},
};
constexpr Rgb kHealthFill{40, 220, 40};
constexpr Rgb kHealthEmpty{90, 20, 20};
constexpr Rgb kTimerFill{230, 230, 230};
constexpr Rgb kTimerEmpty{50, 50, 50};
constexpr Rgb kPipOn{255, 215, 0};
constexpr Rgb kPipOff{30, 30, 30};
constexpr Rgb kActiveMarker{255, 255, 255};
constexpr Rgb kAttackColor{255, 255, 255};
constexpr Rgb kStartupColor{160, 160, 160};
constexpr Rgb kGuardColor{120, 200, 255};

void fill(Frame& f, PixelRect r, Rgb c) {
  r.x0 = std::clamp(r.x0, 0, f.shape.width);
  r.x1 = std::clamp(r.x1, 0, f.shape.width);
  r.y0 = std::clamp(r.y0, 0, f.shape.height);
  r.y1 = std::clamp(r.y1, 0, f.shape.height);
  if (r.x0 >= r.x1 || r.y0 >= r.y1) return;
  std::uint8_t* row0 = f.u8.data() + f.index(r.y0, r.x0, 0);
  for (int x = 0; x < r.x1 - r.x0; ++x) {
    row0[3 * x] = c.r;
    row0[3 * x + 1] = c.g;
    row0[3 * x + 2] = c.b;
  }
  const std::size_t span = static_cast<std::size_t>(r.x1 - r.x0) * 3;
  for (int y = r.y0 + 1; y < r.y1; ++y) std::memcpy(f.u8.data() + f.index(y, r.x0, 0), row0, span);
}

int ground_y(const GameDefinition& def) { return def.native_frame.height - def.native_frame.height / 8; }

int to_px(int position, const GameDefinition& def) {
  return position * def.native_frame.width / def.arena_width;
}

}  // namespace

PixelRect fighter_rect(const MatchState& s, const GameDefinition& def, int side) {
  const auto& f = s.fighters[side];
  const int h = def.native_frame.height;
  const int half_w = std::max(4, def.native_frame.width / 21);
  const int cx = to_px(f.position, def);
  int height = h * 5 / 16;
  int lift = 0;
  if (f.pose == Pose::kCrouch) {
    height = h * 3 / 16;
  } else if (f.pose == Pose::kJump) {
    height = h / 4;
    const int total = def.jump_ticks;
    const int t = total - f.jump_ticks_left;
    const int peak = h * 3 / 16;
    lift = total > 0 ? 4 * peak * t * (total - t) / (total * total) : 0;
  }
  const int bottom = ground_y(def) - lift;
  return {cx - half_w, bottom - height, cx + half_w, bottom};
}

Frame render_native(const MatchState& s, const GameDefinition& def) {
  Frame f;
  render_native_into(s, def, f);
  return f;
}

void render_native_into(const MatchState& s, const GameDefinition& def, Frame& f) {
  const int w = def.native_frame.width;
  const int h = def.native_frame.height;
  if (f.shape != def.native_frame || f.dtype != DType::kU8) {
    f = Frame::zeros_u8(def.native_frame);
  }

  const Rgb bg = kStageColors[(s.stage_index - 1) % 8];
  const int gy = ground_y(def);
  fill(f, {0, 0, w, gy}, bg);
  fill(f, {0, gy, w, h}, {static_cast<std::uint8_t>(bg.r * 3 / 5), static_cast<std::uint8_t>(bg.g * 3 / 5),
                          static_cast<std::uint8_t>(bg.b * 3 / 5)});

  // Health bars: one row per character; left side fills from the left edge,
  // right side from the right edge.
  const int margin = w / 32;
  const int bar_w = w / 2 - 2 * margin;
  const int row_h = std::max(2, h / 64);
  for (int side = 0; side < 2; ++side) {
    const auto& fs = s.fighters[side];
    for (int c = 0; c < def.chars_per_side; ++c) {
      const int y0 = margin + c * (row_h + 2);
      const int filled = static_cast<int>(static_cast<long long>(bar_w) * (fs.healths[c] - def.h_min) /
                                          def.delta_h());
      const int x0 = side == 0 ? margin : w - margin - bar_w;
      fill(f, {x0, y0, x0 + bar_w, y0 + row_h}, kHealthEmpty);
      if (side == 0) {
        fill(f, {x0, y0, x0 + filled, y0 + row_h}, kHealthFill);
      } else {
        fill(f, {x0 + bar_w - filled, y0, x0 + bar_w, y0 + row_h}, kHealthFill);
      }
      if (def.chars_per_side > 1 && c == fs.active_char) {
        const int mx = side == 0 ? x0 - margin / 2 - 2 : x0 + bar_w + margin / 2;
        fill(f, {mx, y0, mx + 2, y0 + row_h}, kActiveMarker);
      }
    }
  }

  // Timer bar, centered under the health bars.
  const int hud_y = margin + def.chars_per_side * (row_h + 2) + 2;
  const int timer_w = w / 2;
  const int tx0 = (w - timer_w) / 2;
  const int timer_filled =
      static_cast<int>(static_cast<long long>(timer_w) * s.timer_ticks / def.round_timer_ticks);
  fill(f, {tx0, hud_y, tx0 + timer_w, hud_y + row_h}, kTimerEmpty);
  fill(f, {tx0, hud_y, tx0 + timer_filled, hud_y + row_h}, kTimerFill);

  // Round-win pips per side and stage pips in the middle.
  const int pip = std::max(3, w / 64);
  const int pip_y = hud_y + row_h + 3;
  for (int side = 0; side < 2; ++side) {
    for (int k = 0; k < def.rounds_to_win; ++k) {
      const int x0 = side == 0 ? margin + k * (pip + 2) : w - margin - (k + 1) * (pip + 2) + 2;
      fill(f, {x0, pip_y, x0 + pip, pip_y + pip}, k < s.fighters[side].round_wins ? kPipOn : kPipOff);
    }
  }
  const int stage_w = def.max_stages * (pip + 2) - 2;
  const int sx0 = (w - stage_w) / 2;
  for (int k = 0; k < def.max_stages; ++k) {
    const int x0 = sx0 + k * (pip + 2);
    fill(f, {x0, pip_y, x0 + pip, pip_y + pip}, k < s.stage_index ? kPipOn : kPipOff);
  }

  for (int side = 0; side < 2; ++side) {
    const auto& fs = s.fighters[side];
    const auto& character = def.roster[fs.char_ids[fs.active_char]];
    fill(f, fighter_rect(s, def, side), character.outfit_palettes[fs.outfit_ids[fs.active_char]]);
  }

  for (int side = 0; side < 2; ++side) {
    const auto& fs = s.fighters[side];
    const auto body = fighter_rect(s, def, side);
    const int dir = side == 0 ? 1 : -1;
    const int front = dir > 0 ? body.x1 : body.x0;
    if (fs.attack && fs.attack->phase != AttackPhase::kRecovery) {
      const auto spec = def.attack(def.roster[fs.char_ids[fs.active_char]], fs.attack->attack_index);
      const bool active = fs.attack->phase == AttackPhase::kActive;
      const int reach = active ? std::max(2, to_px(spec.range, def) - (body.x1 - body.x0) / 2) : 3;
      const int y0 = body.y0 + (body.y1 - body.y0) / 4;
      const PixelRect r = dir > 0 ? PixelRect{front, y0, front + reach, y0 + 4}
                                  : PixelRect{front - reach, y0, front, y0 + 4};
      fill(f, r, active ? kAttackColor : kStartupColor);
    } else if (fs.guarding) {
      const PixelRect r = dir > 0 ? PixelRect{front, body.y0, front + 3, body.y1}
                                  : PixelRect{front - 3, body.y0, front, body.y1};
      fill(f, r, kGuardColor);
    }
  }
}

}  // namespace arena
