#pragma once

#include <cstdint>
#include <vector>

#include "noma/geom.hpp"

namespace noma {

// Row-major single-channel image.
template <typename T>
struct Image {
  int width = 0, height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h),
      data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

using DepthImage = Image<float>;    // distance along the ray, 0 = no return
using MaskImage = Image<std::uint8_t>;  // instance ids, 0 = background

struct ColorImage {
  int width = 0, height = 0;
  std::vector<Vec3> data;

  ColorImage() = default;
  ColorImage(int w, int h, Vec3 fill = {})
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  Vec3& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const Vec3& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

}  // namespace noma
