// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace arena {

struct FrameShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t value_count() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  bool operator==(const FrameShape&) const = default;
};

enum class DType : std::uint8_t { kU8 = 0, kF32 = 1 };

std::string_view dtype_name(DType dtype);
DType dtype_from_name(std::string_view name);
inline std::size_t dtype_size(DType dtype) { return dtype == DType::kU8 ? 1 : 4; }

// Row-major HxWxC image. Exactly one of the two buffers is populated,
// selected by `dtype`.
struct Frame {
  FrameShape shape;
  DType dtype = DType::kU8;
  std::vector<std::uint8_t> u8;
  std::vector<float> f32;

  static Frame zeros_u8(FrameShape shape) {
    Frame f;
    f.shape = shape;
    f.u8.assign(shape.value_count(), 0);
    return f;
  }

  std::size_t value_count() const { return shape.value_count(); }
  std::size_t byte_size() const { return value_count() * dtype_size(dtype); }

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(shape.width) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(shape.channels) +
           static_cast<std::size_t>(c);
  }

  bool operator==(const Frame&) const = default;
};

using FrameBuffer = Frame;

}  // namespace arena
