// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "arena/image.hpp"
#include "arena/render.hpp"
#include "test_support.hpp"

namespace arena {
namespace {

using testing::duel;

const GameDefinition& def_of(std::string_view id) { return *GameRegistry::builtin().find(id); }

bool pixel_is(const Frame& f, int y, int x, Rgb c) {
  return f.u8[f.index(y, x, 0)] == c.r && f.u8[f.index(y, x, 1)] == c.g && f.u8[f.index(y, x, 2)] == c.b;
}

// Reads the HUD back out of a native frame. The geometry is restated here
// rather than shared with the renderer.
struct HudReading {
  std::array<std::vector<int>, 2> bar_fill;  // filled pixels per character row
  std::array<int, 2> wins{};
  int stage = 0;
  int timer_fill = 0;
};

HudReading read_hud(const Frame& f, const GameDefinition& def) {
  const Rgb health_fill{40, 220, 40};
  const Rgb timer_fill{230, 230, 230};
  const Rgb pip_on{255, 215, 0};
  const int w = f.shape.width;
  const int margin = w / 32;
  const int row_h = std::max(2, f.shape.height / 64);
  const int pip = std::max(3, w / 64);
  HudReading r;
  for (int side = 0; side < 2; ++side) {
    for (int c = 0; c < def.chars_per_side; ++c) {
      const int y = margin + c * (row_h + 2) + row_h / 2;
      int n = 0;
      const int x_begin = side == 0 ? 0 : w / 2;
      for (int x = x_begin; x < x_begin + w / 2; ++x) n += pixel_is(f, y, x, health_fill);
      r.bar_fill[side].push_back(n);
    }
  }
  const int hud_y = margin + def.chars_per_side * (row_h + 2) + 2;
  for (int x = 0; x < w; ++x) r.timer_fill += pixel_is(f, hud_y, x, timer_fill);
  const int pip_y = hud_y + row_h + 3 + pip / 2;
  for (int x = 0; x < w / 4; ++x) r.wins[0] += pixel_is(f, pip_y, x, pip_on);
  for (int x = w - w / 4; x < w; ++x) r.wins[1] += pixel_is(f, pip_y, x, pip_on);
  for (int x = w / 4; x < w - w / 4; ++x) r.stage += pixel_is(f, pip_y, x, pip_on);
  r.wins[0] /= pip;
  r.wins[1] /= pip;
  r.stage /= pip;
  return r;
}

TEST(Render, NativeShapeAndDeterminism) {
  const auto& def = def_of("duel");
  const auto s = init_match(def, {}, 3);
  const auto a = render_native(s, def);
  EXPECT_EQ(a.shape, (FrameShape{256, 256, 3}));
  EXPECT_EQ(a.dtype, DType::kU8);
  EXPECT_EQ(a.u8.size(), 256u * 256u * 3u);
  EXPECT_EQ(a, render_native(s, def));
  Frame reused = Frame::zeros_u8({4, 4, 1});
  render_native_into(s, def, reused);
  EXPECT_EQ(a, reused);
}

TEST(Render, FighterRectanglesFollowPositionAndPose) {
  const auto& def = def_of("duel");
  auto s = init_match(def, {}, 3);
  const auto r = fighter_rect(s, def, 0);
  EXPECT_EQ((r.x0 + r.x1) / 2, 64);  // arena 128 of 512 -> pixel 64 of 256
  EXPECT_EQ(r.y1, 224);
  EXPECT_EQ(r.y1 - r.y0, 80);
  s.fighters[0].pose = Pose::kCrouch;
  EXPECT_EQ(fighter_rect(s, def, 0).y1 - fighter_rect(s, def, 0).y0, 48);
}

// Changing only outfits changes only pixels inside the fighters' bodies.
TEST(Render, OutfitChangeIsConfinedToFighterRectangles) {
  for (const auto id : {"duel", "tagduel"}) {
    const auto& def = def_of(id);
    EnvironmentSettings settings;
    settings.player = PlayerMode::kP1P2;
    Rng rng(5);
    auto s = init_match(def, settings, 9);
    for (int t = 0; t < 300 && s.phase == MatchPhase::kInRound; ++t) {
      std::vector<Event> ev;
      tick_in_place(s, def,
                    {Input{static_cast<int>(uniform_below(rng, 9)), static_cast<int>(uniform_below(rng, 4))},
                     Input{static_cast<int>(uniform_below(rng, 9)), static_cast<int>(uniform_below(rng, 4))}},
                    ev);
      if (t % 20 != 0) continue;
      auto other = s;
      for (auto& f : other.fighters) {
        for (std::size_t c = 0; c < f.outfit_ids.size(); ++c) {
          const int n = static_cast<int>(def.roster[f.char_ids[c]].outfit_palettes.size());
          f.outfit_ids[c] = (f.outfit_ids[c] + 1) % n;
        }
      }
      const auto a = render_native(s, def);
      const auto b = render_native(other, def);
      const auto r0 = fighter_rect(s, def, 0);
      const auto r1 = fighter_rect(s, def, 1);
      int changed = 0;
      for (int y = 0; y < a.shape.height; ++y) {
        for (int x = 0; x < a.shape.width; ++x) {
          bool diff = false;
          for (int c = 0; c < 3; ++c) diff |= a.u8[a.index(y, x, c)] != b.u8[b.index(y, x, c)];
          if (!diff) continue;
          ++changed;
          ASSERT_TRUE(r0.contains(x, y) || r1.contains(x, y)) << id << " pixel " << x << "," << y;
        }
      }
      EXPECT_GT(changed, 0);
    }
  }
}

// Every HUD quantity the observation exposes can be read back from pixels:
// health to within the bar resolution, timer to within one second, round
// wins and stage exactly.
TEST(Render, HudIsDecodableFromPixels) {
  for (const auto id : {"duel", "tagduel"}) {
    const auto& def = def_of(id);
    const int bar_w = 256 / 2 - 2 * (256 / 32);
    const int timer_w = 128;
    EnvironmentSettings settings;
    settings.player = PlayerMode::kP1P2;
    Rng rng(17);
    auto s = init_match(def, settings, 4);
    int checked = 0;
    for (int t = 0; t < 20000 && s.phase != MatchPhase::kGameOver; ++t) {
      if (s.phase == MatchPhase::kRoundEnd) {
        advance_phase(s, def);
        continue;
      }
      std::vector<Event> ev;
      tick_in_place(s, def,
                    {Input{static_cast<int>(uniform_below(rng, 9)), static_cast<int>(uniform_below(rng, 4))},
                     Input{kMoveNone, static_cast<int>(uniform_below(rng, 4))}},
                    ev);
      if (t % 37 != 0) continue;
      const auto hud = read_hud(render_native(s, def), def);
      for (int side = 0; side < 2; ++side) {
        EXPECT_EQ(hud.wins[side], s.fighters[side].round_wins);
        for (int c = 0; c < def.chars_per_side; ++c) {
          const int h = s.fighters[side].healths[c];
          const int fill = hud.bar_fill[side][c];
          // Health values whose bar has this fill; the true value is one of them.
          int lo = def.h_max + 1, hi = def.h_min - 1;
          for (int v = def.h_min; v <= def.h_max; ++v) {
            if (bar_w * (v - def.h_min) / def.delta_h() == fill) {
              lo = std::min(lo, v);
              hi = std::max(hi, v);
            }
          }
          ASSERT_LE(lo, h) << id;
          ASSERT_GE(hi, h) << id;
          EXPECT_LE(hi - lo, (def.delta_h() + bar_w - 1) / bar_w);
        }
      }
      EXPECT_EQ(hud.stage, s.stage_index);
      const int tick_lo = (hud.timer_fill * def.round_timer_ticks + timer_w - 1) / timer_w;
      const int tick_hi = ((hud.timer_fill + 1) * def.round_timer_ticks - 1) / timer_w;
      ASSERT_LE(tick_lo, s.timer_ticks);
      ASSERT_GE(tick_hi, s.timer_ticks);
      const int sec_lo = (tick_lo + 59) / 60;
      const int sec_hi = (tick_hi + 59) / 60;
      EXPECT_LE(sec_hi - sec_lo, 1);
      ++checked;
    }
    EXPECT_GT(checked, 100);
  }
}

TEST(Render, RoundWinsAndStagePipsExact) {
  const auto& def = def_of("duel");
  auto s = init_match(def, {}, 1);
  s.fighters[0].round_wins = 1;
  s.stage_index = 6;
  const auto hud = read_hud(render_native(s, def), def);
  EXPECT_EQ(hud.wins[0], 1);
  EXPECT_EQ(hud.wins[1], 0);
  EXPECT_EQ(hud.stage, 6);
}

TEST(Image, WarpNearestNeighborAndGrayscale) {
  Frame in = Frame::zeros_u8({2, 2, 3});
  const std::uint8_t px[4][3] = {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {255, 255, 255}};
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 3; ++c) in.u8[static_cast<std::size_t>(i * 3 + c)] = px[i][c];
  }
  const auto gray = frame_warp(in, 2, 2, true);
  EXPECT_EQ(gray.shape, (FrameShape{2, 2, 1}));
  EXPECT_EQ(gray.u8, (std::vector<std::uint8_t>{76, 150, 29, 255}));
  const auto up = frame_warp(in, 4, 4, false);
  EXPECT_EQ(up.shape, (FrameShape{4, 4, 3}));
  EXPECT_EQ(up.u8[up.index(3, 3, 2)], 255);
  EXPECT_EQ(up.u8[up.index(0, 1, 0)], 255);
  EXPECT_EQ(up.u8[up.index(0, 2, 1)], 255);
  const auto down = frame_warp(in, 1, 1, false);
  EXPECT_EQ(down.u8, (std::vector<std::uint8_t>{255, 0, 0}));
}

TEST(Render, EnvRenderStaysNativeWhenObservationIsWarped) {
  EnvironmentSettings s;
  s.frame_shape = {64, 48, 1};
  auto env = duel(s);
  const auto obs = env->reset();
  EXPECT_EQ(obs.frame()->shape, (FrameShape{64, 48, 1}));
  const auto native = env->render();
  EXPECT_EQ(native.shape, (FrameShape{256, 256, 3}));
  EXPECT_EQ(frame_warp(native, 64, 48, true), *obs.frame());
}

}  // namespace
}  // namespace arena
