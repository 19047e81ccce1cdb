#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/raster.hpp"
#include "objn/core/rng.hpp"
#include "objn/scenegen/render.hpp"
#include "objn/scenegen/scene.hpp"

namespace objn {

enum class AttentionMode { center, constellation, both };

inline const char* to_string(AttentionMode m) {
  switch (m) {
    case AttentionMode::center: return "center";
    case AttentionMode::constellation: return "constellation";
    case AttentionMode::both: return "both";
  }
  return "?";
}

inline AttentionMode attention_mode_from_string(const std::string& s) {
  for (auto m : {AttentionMode::center, AttentionMode::constellation, AttentionMode::both})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown attention mode: " + s);
}

// Per-frame randomization of the cue. Zeroing both fields gives the exact
// geometric cue (used at evaluation time).
struct JitterConfig {
  double pos_sigma = 2.0;   // px, gaussian, per frame (and per point)
  double scale_amp = 0.2;   // sigma multiplier drawn from 1 +/- amp
};

struct AttentionSequence {
  std::vector<GrayF> heat;  // per frame, values in [0,1]
  AttentionMode mode = AttentionMode::center;
  int target_layer = 0;
};

struct Constellation {
  enum class Split { vertical, horizontal, diagonal, quadrants };
  Split split = Split::vertical;
  std::vector<Vec2> points;  // native (object-frame) coordinates, rigid across frames
};

namespace detail {

// Native-mask foreground centroid; pushed through the pose it tracks the full
// footprint centroid whether or not anything occludes or clips it.
inline Vec2 native_centroid(const Mask& m) {
  double sx = 0, sy = 0;
  int n = 0;
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x)
      if (m.at(y, x)) {
        sx += x;
        sy += y;
        ++n;
      }
  return {sx / n, sy / n};
}

inline void add_gaussian(GrayF& heat, const Vec2& center, double sigma) {
  if (sigma <= 0) return;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int y = 0; y < heat.h; ++y)
    for (int x = 0; x < heat.w; ++x) {
      const double dx = x - center.x, dy = y - center.y;
      heat.at(y, x) += static_cast<float>(std::exp(-(dx * dx + dy * dy) * inv));
    }
}

// Peak-normalize in place; frames where every value underflowed stay zero.
inline void normalize_peak(GrayF& heat) {
  float mx = 0;
  for (float v : heat.v) mx = std::max(mx, v);
  if (mx <= 0) return;
  for (float& v : heat.v) v = std::min(1.0f, v / mx);
}

inline Vec2 advected_point(const SceneSpec& s, const ObjectLayer& layer, const Vec2& native,
                           int frame) {
  const Vec2i sh = s.camera_shake[static_cast<std::size_t>(frame)];
  const Vec2 p = native_to_scene(native, pose_at(layer, frame), mask_center(layer.shape.mask));
  return {p.x + sh.x, p.y + sh.y};
}

inline void check_target(const SceneSpec& s, int target_layer) {
  if (target_layer < 0 || target_layer >= static_cast<int>(s.layers.size()))
    throw ConfigError("attention: target layer index out of range");
}

}  // namespace detail

// One isotropic gaussian per frame at the (possibly hidden) footprint
// centroid; sigma = 0.25 x the transformed bounding-box diagonal, both
// jittered per frame.
inline AttentionSequence center_attention(const SceneSpec& s, int target_layer,
                                          const JitterConfig& jitter, std::uint64_t seed) {
  detail::check_target(s, target_layer);
  const ObjectLayer& layer = s.layers[static_cast<std::size_t>(target_layer)];
  const Vec2 centroid = detail::native_centroid(layer.shape.mask);
  Rng rng(derive_seed(seed, {0xA77ull, static_cast<std::uint64_t>(target_layer)}));
  AttentionSequence out;
  out.mode = AttentionMode::center;
  out.target_layer = target_layer;
  for (int t = 0; t < s.frames; ++t) {
    GrayF heat(s.height, s.width, 1, 0.0f);
    Vec2 c = detail::advected_point(s, layer, centroid, t);
    c.x += rng.normal(0, jitter.pos_sigma);
    c.y += rng.normal(0, jitter.pos_sigma);
    const double base = 0.25 * transformed_fg_aabb(layer, pose_at(layer, t)).diagonal();
    const double sigma = base * rng.uniform(1.0 - jitter.scale_amp, 1.0 + jitter.scale_amp);
    detail::add_gaussian(heat, c, sigma);
    detail::normalize_peak(heat);
    out.heat.push_back(std::move(heat));
  }
  return out;
}

// Anchor points for a k-gaussian constellation: the native bounding box is
// split into halves (k=2), quadrants (k=4) or quadrants minus one (k=3), and
// one foreground pixel is drawn per segment. A segment that happens to hold
// no foreground (possible with the diagonal split on sparse shapes) falls
// back to the whole footprint so the constellation keeps k points.
inline Constellation sample_constellation(const ObjectLayer& layer, int k, Rng& rng) {
  if (k < 2 || k > 4) throw ConfigError("constellation: k must be 2..4");
  const Mask& m = layer.shape.mask;
  int x0, y0, x1, y1;
  fg_bounds(m, x0, y0, x1, y1);
  if (x1 < x0 || y1 < y0) throw ConfigError("constellation: degenerate bounding box");
  Constellation c;
  using Split = Constellation::Split;
  if (k == 2) {
    const Split opts[3] = {Split::vertical, Split::horizontal, Split::diagonal};
    c.split = opts[rng.index(3)];
  } else {
    c.split = Split::quadrants;
  }
  const double cx = (x0 + x1) / 2.0, cy = (y0 + y1) / 2.0;
  auto segment_of = [&](int x, int y) {
    switch (c.split) {
      case Split::vertical: return x <= cx ? 0 : 1;
      case Split::horizontal: return y <= cy ? 0 : 1;
      case Split::diagonal: {
        // Above or below the bbox main diagonal.
        const double t = (x1 > x0) ? (x - x0) / static_cast<double>(x1 - x0) : 0.0;
        return y <= y0 + t * (y1 - y0) ? 0 : 1;
      }
      case Split::quadrants: return (x <= cx ? 0 : 1) + (y <= cy ? 0 : 2);
    }
    return 0;
  };
  const int n_segments = k == 2 ? 2 : 4;
  int dropped = -1;
  if (k == 3) dropped = static_cast<int>(rng.index(4));
  std::vector<std::vector<Vec2>> buckets(static_cast<std::size_t>(n_segments));
  std::vector<Vec2> all;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (m.at(y, x)) {
        const Vec2 p{static_cast<double>(x), static_cast<double>(y)};
        buckets[static_cast<std::size_t>(segment_of(x, y))].push_back(p);
        all.push_back(p);
      }
  for (int seg = 0; seg < n_segments; ++seg) {
    if (seg == dropped) continue;
    const auto& pool = buckets[static_cast<std::size_t>(seg)].empty()
                           ? all
                           : buckets[static_cast<std::size_t>(seg)];
    c.points.push_back(pool[rng.index(pool.size())]);
  }
  return c;
}

// Tight gaussians riding fixed object-frame anchor points; the points move
// rigidly with the target, visible or not.
inline AttentionSequence constellation_attention(const SceneSpec& s, int target_layer, int k,
                                                 const JitterConfig& jitter, std::uint64_t seed,
                                                 double point_sigma = 3.0) {
  detail::check_target(s, target_layer);
  const ObjectLayer& layer = s.layers[static_cast<std::size_t>(target_layer)];
  Rng rng(derive_seed(seed, {0xC0457ull, static_cast<std::uint64_t>(target_layer)}));
  const Constellation con = sample_constellation(layer, k, rng);
  AttentionSequence out;
  out.mode = AttentionMode::constellation;
  out.target_layer = target_layer;
  for (int t = 0; t < s.frames; ++t) {
    GrayF heat(s.height, s.width, 1, 0.0f);
    const double sigma =
        point_sigma * rng.uniform(1.0 - jitter.scale_amp, 1.0 + jitter.scale_amp);
    for (const Vec2& native : con.points) {
      Vec2 p = detail::advected_point(s, layer, native, t);
      p.x += rng.normal(0, jitter.pos_sigma);
      p.y += rng.normal(0, jitter.pos_sigma);
      detail::add_gaussian(heat, p, sigma);
    }
    detail::normalize_peak(heat);
    out.heat.push_back(std::move(heat));
  }
  return out;
}

// Sum of the two cue styles, re-normalized to peak 1 per frame.
inline AttentionSequence both_attention(const SceneSpec& s, int target_layer, int k,
                                        const JitterConfig& jitter, std::uint64_t seed) {
  AttentionSequence a = center_attention(s, target_layer, jitter, derive_seed(seed, {1}));
  const AttentionSequence b =
      constellation_attention(s, target_layer, k, jitter, derive_seed(seed, {2}));
  for (int t = 0; t < s.frames; ++t) {
    GrayF& heat = a.heat[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < heat.v.size(); ++i)
      heat.v[i] += b.heat[static_cast<std::size_t>(t)].v[i];
    detail::normalize_peak(heat);
  }
  a.mode = AttentionMode::both;
  return a;
}

inline AttentionMode sample_attention_mode(Rng& rng, double p_center = 1.0 / 3.0,
                                           double p_constellation = 1.0 / 3.0) {
  const double u = rng.uniform();
  if (u < p_center) return AttentionMode::center;
  if (u < p_center + p_constellation) return AttentionMode::constellation;
  return AttentionMode::both;
}

// Uniform entry point used by dataset generation and training.
inline AttentionSequence make_attention(const SceneSpec& s, int target_layer, AttentionMode mode,
                                        int k, const JitterConfig& jitter, std::uint64_t seed) {
  switch (mode) {
    case AttentionMode::center: return center_attention(s, target_layer, jitter, seed);
    case AttentionMode::constellation:
      return constellation_attention(s, target_layer, k, jitter, seed);
    case AttentionMode::both: return both_attention(s, target_layer, k, jitter, seed);
  }
  throw ConfigError("make_attention: bad mode");
}

inline AttentionSequence attention_dropout(const AttentionSequence& att,
                                           const std::vector<int>& frames) {
  AttentionSequence out = att;
  for (int t : frames) {
    if (t < 0 || t >= static_cast<int>(out.heat.size()))
      throw ConfigError("attention_dropout: frame index out of range");
    auto& heat = out.heat[static_cast<std::size_t>(t)];
    std::fill(heat.v.begin(), heat.v.end(), 0.0f);
  }
  return out;
}

}  // namespace objn
