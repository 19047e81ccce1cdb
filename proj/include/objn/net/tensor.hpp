#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "objn/core/error.hpp"

namespace objn {

// Dense [T, C, H, W] tensor. T doubles as the batch axis for the per-frame
// spatial layers; the temporal convs are the only ops that mix along it.
template <class S>
struct Tensor {
  int t = 0, c = 0, h = 0, w = 0;
  std::vector<S> v;

  Tensor() = default;
  Tensor(int t_, int c_, int h_, int w_, S fill = S(0))
      : t(t_), c(c_), h(h_), w(w_),
        v(static_cast<std::size_t>(t_) * c_ * h_ * w_, fill) {}

  std::size_t size() const { return v.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

  S& at(int ti, int ci, int yi, int xi) {
    return v[((static_cast<std::size_t>(ti) * c + ci) * h + yi) * w + xi];
  }
  S at(int ti, int ci, int yi, int xi) const {
    return v[((static_cast<std::size_t>(ti) * c + ci) * h + yi) * w + xi];
  }
  S* frame(int ti) { return v.data() + static_cast<std::size_t>(ti) * c * plane(); }
  const S* frame(int ti) const { return v.data() + static_cast<std::size_t>(ti) * c * plane(); }

  bool same_shape(const Tensor& o) const {
    return t == o.t && c == o.c && h == o.h && w == o.w;
  }
  std::string shape_str() const {
    return "[" + std::to_string(t) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + "]";
  }
};

template <class S>
void require_shape(const Tensor<S>& x, int t, int c, int h, int w, const char* where) {
  auto bad = [&](const char* axis, int got, int want) {
    throw RuntimeError(std::string(where) + ": axis " + axis + " is " + std::to_string(got) +
                       ", expected " + std::to_string(want));
  };
  if (t >= 0 && x.t != t) bad("T", x.t, t);
  if (c >= 0 && x.c != c) bad("C", x.c, c);
  if (h >= 0 && x.h != h) bad("H", x.h, h);
  if (w >= 0 && x.w != w) bad("W", x.w, w);
}

// Copy of frames [start, start+count).
template <class S>
Tensor<S> time_slice(const Tensor<S>& x, int start, int count) {
  if (start < 0 || count < 1 || start + count > x.t)
    throw RuntimeError("time_slice: frames [" + std::to_string(start) + "," +
                       std::to_string(start + count) + ") outside tensor " + x.shape_str());
  Tensor<S> out(count, x.c, x.h, x.w);
  std::copy(x.frame(start), x.frame(start + count), out.frame(0));
  return out;
}

}  // namespace objn
