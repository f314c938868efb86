// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "arena/frame.hpp"
#include "arena/game_definition.hpp"
#include "arena/match.hpp"

namespace arena {

struct PixelRect {
  int x0 = 0;  // inclusive
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

// Body rectangle of one fighter in native-frame pixels.
PixelRect fighter_rect(const MatchState& state, const GameDefinition& def, int side);

// Software rasterizer for the native frame. Pure function of (state, def):
// stage background, floor, health/timer/win/stage HUD, fighters as
// palette-colored rectangles plus attack and guard indicators.
Frame render_native(const MatchState& state, const GameDefinition& def);
void render_native_into(const MatchState& state, const GameDefinition& def, Frame& out);

}  // namespace arena
