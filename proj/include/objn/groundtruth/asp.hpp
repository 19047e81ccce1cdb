#pragma once

#include <cstdint>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/raster.hpp"
#include "objn/scenegen/render.hpp"
#include "objn/scenegen/scene.hpp"

namespace objn {

constexpr std::uint8_t kAspNone = 0;
constexpr std::uint8_t kAspVisible = 1;
constexpr std::uint8_t kAspObscured = 2;
constexpr int kAspClasses = 3;

struct ASPLabelSequence {
  int target_layer = 0;
  std::vector<GrayU8> labels;  // per frame, values 0..2
};

// In-frame footprint of one layer at one frame, in rendered (shaken) space.
// Pixels whose composite-space source falls outside the frame are clipped,
// matching what the rendered frame can show.
inline Mask layer_footprint(const SceneSpec& s, int layer_index, int frame) {
  const ObjectLayer& layer = s.layers[static_cast<std::size_t>(layer_index)];
  const LayerPose pose = pose_at(layer, frame);
  Mask fp(s.height, s.width, 1, 0);
  const SceneBox box = layer_scene_box(layer, pose, s.height, s.width);
  for (int y = box.y0; y <= box.y1; ++y)
    for (int x = box.x0; x <= box.x1; ++x)
      if (layer_covers(layer, pose, {static_cast<double>(x), static_cast<double>(y)}))
        fp.at(y, x) = 1;
  const Vec2i sh = s.camera_shake[static_cast<std::size_t>(frame)];
  if (sh.x == 0 && sh.y == 0) return fp;
  Mask out(s.height, s.width, 1, 0);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x)
      if (fp.in_bounds(y - sh.y, x - sh.x)) out.at(y, x) = fp.at(y - sh.y, x - sh.x);
  return out;
}

// 3-class attended-surface maps: the target's in-frame footprint split into
// visible (topmost) and obscured (under a higher layer); everything else 0.
inline ASPLabelSequence asp_labels(const SceneSpec& s, int target_layer) {
  validate_scene(s);
  if (target_layer < 0 || target_layer >= static_cast<int>(s.layers.size()))
    throw ConfigError("asp_labels: target layer index out of range");
  ASPLabelSequence seq;
  seq.target_layer = target_layer;
  seq.labels.reserve(static_cast<std::size_t>(s.frames));
  for (int t = 0; t < s.frames; ++t) {
    const Mask fp = layer_footprint(s, target_layer, t);
    const LayerMap vis = layer_visibility(s, t);
    GrayU8 lab(s.height, s.width, 1, kAspNone);
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x)
        if (fp.at(y, x))
          lab.at(y, x) = vis.at(y, x) == target_layer ? kAspVisible : kAspObscured;
    seq.labels.push_back(std::move(lab));
  }
  return seq;
}

}  // namespace objn
