#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "objn/core/raster.hpp"
#include "objn/scenegen/palette.hpp"
#include "objn/scenegen/scene.hpp"

namespace objn {

using LayerMap = Raster<int>;          // per-pixel frontmost layer index
constexpr int kBackgroundLayer = -1;   // sentinel in LayerMap

// Rigid pose of a layer at one frame.
struct LayerPose {
  Vec2 pos;          // scene position of the native mask center
  double angle = 0;  // radians
  double scale = 1;  // native px -> scene px
};

inline LayerPose pose_at(const ObjectLayer& layer, int frame) {
  return {layer.trajectory.position[static_cast<std::size_t>(frame)],
          layer.trajectory.angle[static_cast<std::size_t>(frame)],
          layer.trajectory.scale[static_cast<std::size_t>(frame)]};
}

inline Vec2 mask_center(const Mask& m) { return {(m.w - 1) / 2.0, (m.h - 1) / 2.0}; }

// Forward map: native coordinate -> scene coordinate.
inline Vec2 native_to_scene(const Vec2& o, const LayerPose& p, const Vec2& center) {
  const double c = std::cos(p.angle), s = std::sin(p.angle);
  const double dx = (o.x - center.x) * p.scale, dy = (o.y - center.y) * p.scale;
  return {p.pos.x + c * dx - s * dy, p.pos.y + s * dx + c * dy};
}

// Inverse map: scene coordinate -> native coordinate. Masks are looked up at
// the rounded result (nearest neighbor keeps them binary).
inline Vec2 scene_to_native(const Vec2& q, const LayerPose& p, const Vec2& center) {
  const double c = std::cos(p.angle), s = std::sin(p.angle);
  const double dx = (q.x - p.pos.x) / p.scale, dy = (q.y - p.pos.y) / p.scale;
  return {center.x + c * dx + s * dy, center.y - s * dx + c * dy};
}

// True when scene point q lands on a foreground texel of the layer's mask.
inline bool layer_covers(const ObjectLayer& layer, const LayerPose& pose, const Vec2& q) {
  const Vec2 o = scene_to_native(q, pose, mask_center(layer.shape.mask));
  const int ox = static_cast<int>(std::lround(o.x)), oy = static_cast<int>(std::lround(o.y));
  return layer.shape.mask.in_bounds(oy, ox) && layer.shape.mask.at(oy, ox) != 0;
}

// Rigid displacement of the layer surface at scene point q between two frames.
inline Vec2 surface_displacement(const ObjectLayer& layer, int frame_a, int frame_b,
                                 const Vec2& q) {
  const Vec2 center = mask_center(layer.shape.mask);
  const Vec2 o = scene_to_native(q, pose_at(layer, frame_a), center);
  const Vec2 q2 = native_to_scene(o, pose_at(layer, frame_b), center);
  return {q2.x - q.x, q2.y - q.y};
}

// Scene-space axis-aligned bounds of the transformed native mask rectangle,
// padded so every covered pixel center is inside. ix0/iy0 are clamped to the
// frame; empty boxes come back with ix0 > ix1.
struct SceneBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
  bool empty() const { return x0 > x1 || y0 > y1; }
};

inline SceneBox layer_scene_box(const ObjectLayer& layer, const LayerPose& pose, int h, int w) {
  const Mask& m = layer.shape.mask;
  const Vec2 center = mask_center(m);
  double lo_x = 1e30, lo_y = 1e30, hi_x = -1e30, hi_y = -1e30;
  const double xs[2] = {-0.5, m.w - 0.5}, ys[2] = {-0.5, m.h - 0.5};
  for (double oy : ys)
    for (double ox : xs) {
      const Vec2 p = native_to_scene({ox, oy}, pose, center);
      lo_x = std::min(lo_x, p.x);
      hi_x = std::max(hi_x, p.x);
      lo_y = std::min(lo_y, p.y);
      hi_y = std::max(hi_y, p.y);
    }
  SceneBox b;
  b.x0 = std::max(0, static_cast<int>(std::floor(lo_x)));
  b.y0 = std::max(0, static_cast<int>(std::floor(lo_y)));
  b.x1 = std::min(w - 1, static_cast<int>(std::ceil(hi_x)));
  b.y1 = std::min(h - 1, static_cast<int>(std::ceil(hi_y)));
  return b;
}

// Tight scene-space AABB of the foreground pixels (corners of the fg bounding
// box pushed through the pose). Attention sizing uses its diagonal.
inline void fg_bounds(const Mask& m, int& x0, int& y0, int& x1, int& y1) {
  x0 = m.w;
  y0 = m.h;
  x1 = -1;
  y1 = -1;
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x)
      if (m.at(y, x)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
}

struct Aabb {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double diagonal() const { return std::hypot(x1 - x0, y1 - y0); }
};

inline Aabb transformed_fg_aabb(const ObjectLayer& layer, const LayerPose& pose) {
  int fx0, fy0, fx1, fy1;
  fg_bounds(layer.shape.mask, fx0, fy0, fx1, fy1);
  const Vec2 center = mask_center(layer.shape.mask);
  Aabb b{1e30, 1e30, -1e30, -1e30};
  const double xs[2] = {static_cast<double>(fx0), static_cast<double>(fx1)};
  const double ys[2] = {static_cast<double>(fy0), static_cast<double>(fy1)};
  for (double oy : ys)
    for (double ox : xs) {
      const Vec2 p = native_to_scene({ox, oy}, pose, center);
      b.x0 = std::min(b.x0, p.x);
      b.x1 = std::max(b.x1, p.x);
      b.y0 = std::min(b.y0, p.y);
      b.y1 = std::max(b.y1, p.y);
    }
  return b;
}

namespace detail {

// Sticker color lookup at host-native coordinate o; the last sticker whose
// footprint covers o wins. Returns false when no sticker covers it.
inline bool sticker_color(const ObjectLayer& layer, const Vec2& o, PaletteCache& palettes,
                          Rgb& out) {
  const Vec2 host_c = mask_center(layer.shape.mask);
  for (auto it = layer.stickers.rbegin(); it != layer.stickers.rend(); ++it) {
    const ObjectSticker& st = *it;
    const Vec2 st_c = mask_center(st.shape.mask);
    const double c = std::cos(st.angle), s = std::sin(st.angle);
    const double dx = (o.x - host_c.x - st.offset.x) / st.scale;
    const double dy = (o.y - host_c.y - st.offset.y) / st.scale;
    const Vec2 os{st_c.x + c * dx + s * dy, st_c.y - s * dx + c * dy};
    const int ox = static_cast<int>(std::lround(os.x)), oy = static_cast<int>(std::lround(os.y));
    if (st.shape.mask.in_bounds(oy, ox) && st.shape.mask.at(oy, ox)) {
      out = sample_bilinear_wrap(palettes.shifted(st.texture), st.texture.u0 + os.x,
                                 st.texture.v0 + os.y);
      return true;
    }
  }
  return false;
}

}  // namespace detail

struct LayerRaster {
  Mask mask;    // 0/1 footprint, frame size
  RgbU8 color;  // valid where mask is 1, zero elsewhere
};

// Footprint and fill of one layer at one frame, no shake, clipped to the
// frame. Texture is sampled in native coordinates so it rides the object.
inline LayerRaster rasterize_layer(const ObjectLayer& layer, int frame, int h, int w,
                                   PaletteCache& palettes) {
  LayerRaster out{Mask(h, w, 1, 0), RgbU8(h, w, 3, 0)};
  const LayerPose pose = pose_at(layer, frame);
  const Vec2 center = mask_center(layer.shape.mask);
  const RgbU8& tex = palettes.shifted(layer.texture);
  const SceneBox box = layer_scene_box(layer, pose, h, w);
  for (int y = box.y0; y <= box.y1; ++y)
    for (int x = box.x0; x <= box.x1; ++x) {
      const Vec2 o = scene_to_native({static_cast<double>(x), static_cast<double>(y)}, pose, center);
      const int ox = static_cast<int>(std::lround(o.x)), oy = static_cast<int>(std::lround(o.y));
      if (!layer.shape.mask.in_bounds(oy, ox) || !layer.shape.mask.at(oy, ox)) continue;
      out.mask.at(y, x) = 1;
      Rgb col;
      if (!detail::sticker_color(layer, o, palettes, col))
        col = sample_bilinear_wrap(tex, layer.texture.u0 + o.x, layer.texture.v0 + o.y);
      out.color.at(y, x, 0) = col.r;
      out.color.at(y, x, 1) = col.g;
      out.color.at(y, x, 2) = col.b;
    }
  return out;
}

// Layer indices sorted back to front; storage order is not guaranteed to be
// depth order for deserialized scenes.
inline std::vector<int> depth_order(const SceneSpec& s) {
  std::vector<int> order(s.layers.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return s.layers[static_cast<std::size_t>(a)].depth <
                                       s.layers[static_cast<std::size_t>(b)].depth; });
  return order;
}

// Frontmost layer per pixel before the shake shift.
inline LayerMap visibility_composite(const SceneSpec& s, int frame) {
  LayerMap vis(s.height, s.width, 1, kBackgroundLayer);
  for (int i : depth_order(s)) {
    const ObjectLayer& layer = s.layers[static_cast<std::size_t>(i)];
    const LayerPose pose = pose_at(layer, frame);
    const SceneBox box = layer_scene_box(layer, pose, s.height, s.width);
    for (int y = box.y0; y <= box.y1; ++y)
      for (int x = box.x0; x <= box.x1; ++x)
        if (layer_covers(layer, pose, {static_cast<double>(x), static_cast<double>(y)}))
          vis.at(y, x) = i;
  }
  return vis;
}

// Frontmost layer per pixel as seen in the rendered (shaken) frame. Border
// pixels revealed by the shift read background.
inline LayerMap layer_visibility(const SceneSpec& s, int frame) {
  LayerMap vis = visibility_composite(s, frame);
  const Vec2i sh = s.camera_shake[static_cast<std::size_t>(frame)];
  if (sh.x == 0 && sh.y == 0) return vis;
  LayerMap out(s.height, s.width, 1, kBackgroundLayer);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const int qx = x - sh.x, qy = y - sh.y;
      if (vis.in_bounds(qy, qx)) out.at(y, x) = vis.at(qy, qx);
    }
  return out;
}

inline std::uint8_t luma_of(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>(
      std::min(255l, std::lround(0.299 * r + 0.587 * g + 0.114 * b)));
}

namespace detail {

inline RgbU8 blur_rgb(const RgbU8& img, int k, bool gaussian) {
  const int r = k / 2;
  std::vector<double> kern(static_cast<std::size_t>(k) * k, 1.0 / (k * k));
  if (gaussian) {
    // Binomial taps: [1 2 1]/4 and [1 4 6 4 1]/16, separably combined.
    const double t3[3] = {1 / 4.0, 2 / 4.0, 1 / 4.0};
    const double t5[5] = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};
    const double* t = k == 3 ? t3 : t5;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) kern[static_cast<std::size_t>(i) * k + j] = t[i] * t[j];
  }
  RgbU8 out(img.h, img.w, 3);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const int yy = std::clamp(y + dy, 0, img.h - 1);
            const int xx = std::clamp(x + dx, 0, img.w - 1);
            acc += kern[static_cast<std::size_t>(dy + r) * k + (dx + r)] * img.at(yy, xx, c);
          }
        out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(acc));
      }
  return out;
}

}  // namespace detail

struct FrameSequence {
  std::vector<RgbU8> rgb;
  std::vector<GrayU8> luma;
};

// Full pipeline per frame: composite (background, then layers back to front),
// shift by camera shake with background continuing into revealed border,
// blur, then luma.
inline FrameSequence render_frames(const SceneSpec& s) {
  validate_scene(s);
  PaletteCache palettes(s.seed);
  FrameSequence seq;
  seq.rgb.reserve(static_cast<std::size_t>(s.frames));
  seq.luma.reserve(static_cast<std::size_t>(s.frames));

  const RgbU8& bg_tex = palettes.shifted(s.background);
  auto bg_at = [&](double x, double y) {
    return sample_bilinear_wrap(bg_tex, s.background.u0 + x, s.background.v0 + y);
  };

  for (int t = 0; t < s.frames; ++t) {
    RgbU8 frame(s.height, s.width, 3);
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x) {
        const Rgb c = bg_at(x, y);
        frame.at(y, x, 0) = c.r;
        frame.at(y, x, 1) = c.g;
        frame.at(y, x, 2) = c.b;
      }
    for (int i : depth_order(s)) {
      const ObjectLayer& layer = s.layers[static_cast<std::size_t>(i)];
      const LayerRaster lr = rasterize_layer(layer, t, s.height, s.width, palettes);
      for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x)
          if (lr.mask.at(y, x))
            for (int c = 0; c < 3; ++c) frame.at(y, x, c) = lr.color.at(y, x, c);
    }

    const Vec2i sh = s.camera_shake[static_cast<std::size_t>(t)];
    if (sh.x != 0 || sh.y != 0) {
      RgbU8 shifted(s.height, s.width, 3);
      for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) {
          const int qx = x - sh.x, qy = y - sh.y;
          if (frame.in_bounds(qy, qx)) {
            for (int c = 0; c < 3; ++c) shifted.at(y, x, c) = frame.at(qy, qx, c);
          } else {
            const Rgb c = bg_at(qx, qy);  // background plane continues past the frame
            shifted.at(y, x, 0) = c.r;
            shifted.at(y, x, 1) = c.g;
            shifted.at(y, x, 2) = c.b;
          }
        }
      frame = std::move(shifted);
    }

    const int k = s.blur_schedule[static_cast<std::size_t>(t)];
    if (k != 0) frame = detail::blur_rgb(frame, k, s.gaussian_blur);

    GrayU8 lum(s.height, s.width, 1);
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x)
        lum.at(y, x) = luma_of(frame.at(y, x, 0), frame.at(y, x, 1), frame.at(y, x, 2));
    seq.rgb.push_back(std::move(frame));
    seq.luma.push_back(std::move(lum));
  }
  return seq;
}

}  // namespace objn
