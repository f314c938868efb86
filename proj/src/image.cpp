// SPDX-License-Identifier: Apache-2.0
#include "arena/image.hpp"

#include <vector>

#include "arena/errors.hpp"

namespace arena {

Frame frame_warp(const Frame& in, int height, int width, bool grayscale) {
  Frame out;
  frame_warp_into(in, height, width, grayscale, out);
  return out;
}

void frame_warp_into(const Frame& in, int height, int width, bool grayscale, Frame& out) {
  if (height < 1 || width < 1) throw Error(Errc::kInvalidConfig, "warp target must be at least 1x1");
  if (in.dtype != DType::kU8) throw Error(Errc::kInvalidConfig, "frame warp expects 8-bit frames");
  const int in_c = in.shape.channels;
  if (in_c != 1 && in_c != 3) throw Error(Errc::kInvalidConfig, "frame warp expects 1 or 3 channels");
  if (in_c == 1 && !grayscale) throw Error(Errc::kInvalidConfig, "cannot warp a grayscale frame to RGB");
  const int out_c = grayscale ? 1 : 3;
  const FrameShape shape{height, width, out_c};
  if (out.shape != shape || out.dtype != DType::kU8 || out.u8.size() != shape.value_count()) {
    out = Frame::zeros_u8(shape);
  }

  std::vector<int> src_x(width);
  for (int x = 0; x < width; ++x) {
    src_x[x] = static_cast<int>(static_cast<long long>(x) * in.shape.width / width);
  }
  std::uint8_t* dst = out.u8.data();
  for (int y = 0; y < height; ++y) {
    const int sy = static_cast<int>(static_cast<long long>(y) * in.shape.height / height);
    const std::uint8_t* row = in.u8.data() + in.index(sy, 0, 0);
    for (int x = 0; x < width; ++x) {
      const std::uint8_t* px = row + static_cast<std::size_t>(src_x[x]) * in_c;
      if (!grayscale) {
        *dst++ = px[0];
        *dst++ = px[1];
        *dst++ = px[2];
      } else if (in_c == 1) {
        *dst++ = px[0];
      } else {
        // Integer form of round(0.299 R + 0.587 G + 0.114 B).
        *dst++ = static_cast<std::uint8_t>((299u * px[0] + 587u * px[1] + 114u * px[2] + 500u) / 1000u);
      }
    }
  }
}

}  // namespace arena
