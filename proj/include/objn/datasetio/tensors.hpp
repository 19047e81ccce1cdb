#pragma once

#include <string>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/raster.hpp"
#include "objn/net/tensor.hpp"

namespace objn {

// RGB frames [start, start+count) as a [count,3,H,W] tensor scaled to [0,1].
template <class S>
Tensor<S> rgb_window_tensor(const std::vector<RgbU8>& frames, int start, int count) {
  if (start < 0 || count < 1 || static_cast<std::size_t>(start + count) > frames.size())
    throw DataError("frame window [" + std::to_string(start) + "," +
                    std::to_string(start + count) + ") outside sequence of " +
                    std::to_string(frames.size()));
  const RgbU8& f0 = frames[static_cast<std::size_t>(start)];
  Tensor<S> out(count, 3, f0.h, f0.w);
  const std::size_t plane = out.plane();
  for (int t = 0; t < count; ++t) {
    const RgbU8& f = frames[static_cast<std::size_t>(start + t)];
    S* dst = out.frame(t);
    for (std::size_t i = 0; i < plane; ++i)
      for (int c = 0; c < 3; ++c)
        dst[static_cast<std::size_t>(c) * plane + i] = static_cast<S>(f.v[i * 3 + c] / 255.0);
  }
  return out;
}

// Luma frames as [count,1,H,W] in [0,1].
template <class S>
Tensor<S> luma_window_tensor(const std::vector<GrayU8>& frames, int start, int count) {
  if (start < 0 || count < 1 || static_cast<std::size_t>(start + count) > frames.size())
    throw DataError("luma window [" + std::to_string(start) + "," +
                    std::to_string(start + count) + ") outside sequence of " +
                    std::to_string(frames.size()));
  const GrayU8& f0 = frames[static_cast<std::size_t>(start)];
  Tensor<S> out(count, 1, f0.h, f0.w);
  const std::size_t plane = out.plane();
  for (int t = 0; t < count; ++t) {
    const GrayU8& f = frames[static_cast<std::size_t>(start + t)];
    for (std::size_t i = 0; i < plane; ++i) out.frame(t)[i] = static_cast<S>(f.v[i] / 255.0);
  }
  return out;
}

// Attention heat frames as [count,1,H,W]; already in [0,1].
template <class S>
Tensor<S> heat_window_tensor(const std::vector<GrayF>& frames, int start, int count) {
  if (start < 0 || count < 1 || static_cast<std::size_t>(start + count) > frames.size())
    throw DataError("attention window [" + std::to_string(start) + "," +
                    std::to_string(start + count) + ") outside sequence of " +
                    std::to_string(frames.size()));
  const GrayF& f0 = frames[static_cast<std::size_t>(start)];
  Tensor<S> out(count, 1, f0.h, f0.w);
  const std::size_t plane = out.plane();
  for (int t = 0; t < count; ++t) {
    const GrayF& f = frames[static_cast<std::size_t>(start + t)];
    for (std::size_t i = 0; i < plane; ++i) out.frame(t)[i] = static_cast<S>(f.v[i]);
  }
  return out;
}

// Class map from a [*,3,H,W] boundary-probability slice whose channels are
// classes 1..3; the dropped "none" probability is the remainder.
template <class S>
Mask mbs_channels_argmax(const Tensor<S>& ch, int t) {
  require_shape(ch, -1, 3, -1, -1, "mbs_channels_argmax");
  Mask out(ch.h, ch.w, 1);
  const std::size_t plane = ch.plane();
  const S* fr = ch.frame(t);
  for (std::size_t i = 0; i < plane; ++i) {
    S rest = S(1) - (fr[i] + fr[plane + i] + fr[2 * plane + i]);
    int best = 0;
    S bv = rest;
    for (int c = 0; c < 3; ++c)
      if (fr[static_cast<std::size_t>(c) * plane + i] > bv) {
        bv = fr[static_cast<std::size_t>(c) * plane + i];
        best = c + 1;
      }
    out.v[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

// Argmax over the class axis of one output frame; ties go to the lower index.
template <class S>
Mask argmax_frame(const Tensor<S>& prob, int t) {
  Mask out(prob.h, prob.w, 1);
  const std::size_t plane = prob.plane();
  const S* fr = prob.frame(t);
  for (std::size_t i = 0; i < plane; ++i) {
    int best = 0;
    S bv = fr[i];
    for (int c = 1; c < prob.c; ++c)
      if (fr[static_cast<std::size_t>(c) * plane + i] > bv) {
        bv = fr[static_cast<std::size_t>(c) * plane + i];
        best = c;
      }
    out.v[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace objn
