#pragma once

#include <cstdint>
#include <vector>

#include "objn/core/error.hpp"

namespace objn {

// Row-major 2-D raster with an interleaved channel axis.
template <class T>
struct Raster {
  int h = 0, w = 0, c = 1;
  std::vector<T> v;

  Raster() = default;
  Raster(int h_, int w_, int c_ = 1, T fill = T{})
      : h(h_), w(w_), c(c_), v(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

  T& at(int y, int x, int ch = 0) {
    return v[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  const T& at(int y, int x, int ch = 0) const {
    return v[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }

  bool in_bounds(int y, int x) const { return y >= 0 && y < h && x >= 0 && x < w; }

  std::size_t size() const { return v.size(); }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  bool same_shape(const Raster& o) const { return h == o.h && w == o.w && c == o.c; }

  bool operator==(const Raster& o) const {
    return h == o.h && w == o.w && c == o.c && v == o.v;
  }
};

using GrayU8 = Raster<std::uint8_t>;   // c = 1
using RgbU8 = Raster<std::uint8_t>;    // c = 3
using Mask = Raster<std::uint8_t>;     // c = 1, values 0/1
using GrayF = Raster<float>;           // c = 1

struct Vec2 {
  double x = 0, y = 0;
};

struct Vec2i {
  int x = 0, y = 0;
  bool operator==(const Vec2i&) const = default;
};

}  // namespace objn
