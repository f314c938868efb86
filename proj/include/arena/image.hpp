// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "arena/frame.hpp"

namespace arena {

// Nearest-neighbor resize of an 8-bit frame; with `grayscale` an RGB input
// becomes one channel of round(0.299 R + 0.587 G + 0.114 B).
Frame frame_warp(const Frame& in, int height, int width, bool grayscale);
void frame_warp_into(const Frame& in, int height, int width, bool grayscale, Frame& out);

}  // namespace arena
