#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "objn/core/raster.hpp"
#include "objn/scenegen/render.hpp"
#include "objn/scenegen/scene.hpp"

namespace objn {

// Label values shared by generation, training and evaluation.
constexpr std::uint8_t kMbsNone = 0;
constexpr std::uint8_t kMbsFront = 1;  // foreground band
constexpr std::uint8_t kMbsBack = 2;   // background band
constexpr std::uint8_t kMbsBoth = 3;   // opposite senses overlap
constexpr int kMbsClasses = 4;

// Displacements closer than this count as equal; poses are exact doubles, so
// anything nonzero here only absorbs rounding in the transform chain.
constexpr double kMotionEps = 1e-9;

// One frame's occlusion edge between a specific front layer and the surface
// directly behind it (a lower layer or the background).
struct BoundarySegment {
  int frame = 0;
  std::vector<Vec2i> pixels;           // row-major order
  int front_layer = 0;                 // index into scene.layers
  int back_layer = kBackgroundLayer;   // index, or background sentinel
  bool moving = false;
};

struct MBSLabelSequence {
  std::vector<GrayU8> labels;  // per frame, values 0..3
};

namespace detail {

// Frame-to-frame displacement difference between the front and back surface
// at composite-space point q. The camera shake term is common to both
// surfaces and cancels, so composite space is the right place to compare.
inline bool pair_moves(const SceneSpec& s, int front, int back, int frame, const Vec2& q) {
  if (s.frames < 2) return false;
  const int other = frame + 1 < s.frames ? frame + 1 : frame - 1;
  const Vec2 df = surface_displacement(s.layers[static_cast<std::size_t>(front)], frame, other, q);
  Vec2 db{0, 0};
  if (back != kBackgroundLayer)
    db = surface_displacement(s.layers[static_cast<std::size_t>(back)], frame, other, q);
  return std::abs(df.x - db.x) > kMotionEps || std::abs(df.y - db.y) > kMotionEps;
}

inline void dilate_cheb3(Mask& m) {
  for (int pass = 0; pass < 3; ++pass) {
    Mask next = m;
    for (int y = 0; y < m.h; ++y)
      for (int x = 0; x < m.w; ++x) {
        if (m.at(y, x)) continue;
        bool hit = false;
        for (int dy = -1; dy <= 1 && !hit; ++dy)
          for (int dx = -1; dx <= 1 && !hit; ++dx)
            if (m.in_bounds(y + dy, x + dx) && m.at(y + dy, x + dx)) hit = true;
        if (hit) next.at(y, x) = 1;
      }
    m = std::move(next);
  }
}

}  // namespace detail

// All occlusion boundaries of one frame, grouped per (front, back) pair and
// split by whether the two surfaces actually move relative to each other at
// each pixel. A rotating layer can emit both a moving and a static segment
// against the same neighbor (its pivot edge does not displace).
inline std::vector<BoundarySegment> occlusion_boundaries(const SceneSpec& s, int frame) {
  const LayerMap vis = layer_visibility(s, frame);
  const Vec2i sh = s.camera_shake[static_cast<std::size_t>(frame)];
  // key: (front, back); value: [static pixels, moving pixels]
  std::map<std::pair<int, int>, std::array<std::vector<Vec2i>, 2>> pairs;
  auto depth_of = [&](int idx) {
    return idx == kBackgroundLayer ? std::numeric_limits<int>::min()
                                   : s.layers[static_cast<std::size_t>(idx)].depth;
  };
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const int front = vis.at(y, x);
      if (front == kBackgroundLayer) continue;
      // Which surfaces does this silhouette pixel border? Dedup per pixel.
      int seen[8];
      int n_seen = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx == 0) continue;
          if (!vis.in_bounds(y + dy, x + dx)) continue;  // frame edge is not a boundary
          const int back = vis.at(y + dy, x + dx);
          if (back == front || depth_of(back) > depth_of(front)) continue;
          bool dup = false;
          for (int i = 0; i < n_seen; ++i) dup = dup || seen[i] == back;
          if (dup) continue;
          seen[n_seen++] = back;
          const Vec2 q{static_cast<double>(x - sh.x), static_cast<double>(y - sh.y)};
          const bool moving = detail::pair_moves(s, front, back, frame, q);
          pairs[{front, back}][moving ? 1 : 0].push_back({x, y});
        }
    }
  std::vector<BoundarySegment> out;
  for (auto& [key, split] : pairs)
    for (int moving = 0; moving < 2; ++moving) {
      if (split[static_cast<std::size_t>(moving)].empty()) continue;
      BoundarySegment seg;
      seg.frame = frame;
      seg.front_layer = key.first;
      seg.back_layer = key.second;
      seg.moving = moving == 1;
      seg.pixels = std::move(split[static_cast<std::size_t>(moving)]);
      out.push_back(std::move(seg));
    }
  return out;
}

// 4-class motion boundary sense maps. Each moving segment seeds a Chebyshev
// radius-3 band; the band is kept only on its own side (front band inside the
// front layer's visible region, back band inside the surface behind). Pixels
// tagged with both senses become class 3.
inline MBSLabelSequence mbs_labels(const SceneSpec& s) {
  validate_scene(s);
  MBSLabelSequence seq;
  seq.labels.reserve(static_cast<std::size_t>(s.frames));
  for (int t = 0; t < s.frames; ++t) {
    const LayerMap vis = layer_visibility(s, t);
    Mask front_sense(s.height, s.width, 1, 0), back_sense(s.height, s.width, 1, 0);
    for (const BoundarySegment& seg : occlusion_boundaries(s, t)) {
      if (!seg.moving) continue;
      Mask band(s.height, s.width, 1, 0);
      for (const Vec2i& p : seg.pixels) band.at(p.y, p.x) = 1;
      detail::dilate_cheb3(band);
      for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) {
          if (!band.at(y, x)) continue;
          if (vis.at(y, x) == seg.front_layer) front_sense.at(y, x) = 1;
          if (vis.at(y, x) == seg.back_layer) back_sense.at(y, x) = 1;
        }
    }
    GrayU8 lab(s.height, s.width, 1, kMbsNone);
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x) {
        const bool f = front_sense.at(y, x), b = back_sense.at(y, x);
        lab.at(y, x) = f && b ? kMbsBoth : f ? kMbsFront : b ? kMbsBack : kMbsNone;
      }
    seq.labels.push_back(std::move(lab));
  }
  return seq;
}

}  // namespace objn
