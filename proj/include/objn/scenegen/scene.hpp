#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/jsonio.hpp"
#include "objn/core/raster.hpp"
#include "objn/core/rng.hpp"
#include "objn/core/version.hpp"
#include "objn/scenegen/palette.hpp"
#include "objn/scenegen/shape.hpp"

namespace objn {

// Per-frame rigid pose of one layer. Stationary layers hold every field
// constant; moving layers follow constant velocity, constant spin, and a
// constant relative scale drift.
struct Trajectory {
  std::vector<Vec2> position;  // sub-pixel center in scene coordinates
  std::vector<double> angle;   // radians, counter-clockwise
  std::vector<double> scale;   // native-mask px -> scene px
  bool stationary = false;

  int frames() const { return static_cast<int>(position.size()); }
};

// A smaller shape glued onto a host object's texture; it moves rigidly with
// the host and never extends past the host footprint.
struct ObjectSticker {
  ShapeAsset shape;
  TextureSpec texture;
  Vec2 offset;        // host-native coordinates, relative to host mask center
  double scale = 1;   // sticker-native px -> host-native px
  double angle = 0;   // radians, relative to host
};

struct ObjectLayer {
  ShapeAsset shape;
  TextureSpec texture;
  Trajectory trajectory;
  int depth = 0;  // 0 = backmost non-background layer; higher occludes lower
  std::vector<ObjectSticker> stickers;
};

// Fully resolved description of one scene. Everything downstream (frames,
// visibility, labels, attention) is a pure function of this struct.
struct SceneSpec {
  std::uint64_t seed = 0;
  int frames = 15;
  int height = 256, width = 256;
  TextureSpec background;
  std::vector<ObjectLayer> layers;          // ordered by ascending depth
  std::vector<Vec2i> camera_shake;          // per frame, camera_shake[0] == (0,0)
  std::vector<int> blur_schedule;           // per frame: 0 (none), 3 or 5
  bool gaussian_blur = false;               // box kernels unless set
  std::string generator_version = kGeneratorVersion;
};

// Knobs for sample_scene. Defaults give lively 256x256 scenes; desk-scale
// tests shrink the frame and tighten the ranges.
struct GenConfig {
  int frames = 15;
  int height = 256, width = 256;
  int min_layers = 1, max_layers = 4;
  std::vector<int> palette_ids = {0, 1, 2, 3, 4, 5};

  double stationary_prob = 0.3;
  double speed_min = 0.5, speed_max = 3.0;   // px per frame
  double spin_prob = 0.5, spin_max = 0.06;   // rad per frame
  double drift_prob = 0.3, drift_max = 0.012;  // relative scale change per frame
  double size_min = 0.25, size_max = 0.6;    // object extent as fraction of min(H,W)

  double sticker_prob = 0.4;
  int max_stickers = 2;

  double shake_prob = 0.5;
  int shake_step_max = 3;   // per-frame walk step bound, px
  int shake_total_max = 8;  // accumulated offset clamp, px

  double blur_prob = 0.15;  // per frame; kernel then 3x3 or 5x5 at even odds
  bool gaussian_blur = false;

  double hue_shift_max = 360.0;
};

inline GenConfig gen_config_from_json(const Json& j) {
  GenConfig c;
  c.frames = json_get_or(j, "frames", c.frames);
  c.height = json_get_or(j, "height", c.height);
  c.width = json_get_or(j, "width", c.width);
  c.min_layers = json_get_or(j, "min_layers", c.min_layers);
  c.max_layers = json_get_or(j, "max_layers", c.max_layers);
  c.palette_ids = json_get_or(j, "palette_ids", c.palette_ids);
  c.stationary_prob = json_get_or(j, "stationary_prob", c.stationary_prob);
  c.speed_min = json_get_or(j, "speed_min", c.speed_min);
  c.speed_max = json_get_or(j, "speed_max", c.speed_max);
  c.spin_prob = json_get_or(j, "spin_prob", c.spin_prob);
  c.spin_max = json_get_or(j, "spin_max", c.spin_max);
  c.drift_prob = json_get_or(j, "drift_prob", c.drift_prob);
  c.drift_max = json_get_or(j, "drift_max", c.drift_max);
  c.size_min = json_get_or(j, "size_min", c.size_min);
  c.size_max = json_get_or(j, "size_max", c.size_max);
  c.sticker_prob = json_get_or(j, "sticker_prob", c.sticker_prob);
  c.max_stickers = json_get_or(j, "max_stickers", c.max_stickers);
  c.shake_prob = json_get_or(j, "shake_prob", c.shake_prob);
  c.shake_step_max = json_get_or(j, "shake_step_max", c.shake_step_max);
  c.shake_total_max = json_get_or(j, "shake_total_max", c.shake_total_max);
  c.blur_prob = json_get_or(j, "blur_prob", c.blur_prob);
  c.gaussian_blur = json_get_or(j, "gaussian_blur", c.gaussian_blur);
  c.hue_shift_max = json_get_or(j, "hue_shift_max", c.hue_shift_max);
  if (c.frames < 1 || c.height < 8 || c.width < 8) throw ConfigError("scene dimensions too small");
  if (c.min_layers < 0 || c.max_layers < c.min_layers) throw ConfigError("bad layer count range");
  if (c.palette_ids.empty()) throw ConfigError("palette_ids is empty");
  for (int id : c.palette_ids)
    if (id < 0 || id >= kPaletteCount) throw ConfigError("palette_id out of range");
  return c;
}

inline Json gen_config_to_json(const GenConfig& c) {
  Json j;
  j["frames"] = c.frames;
  j["height"] = c.height;
  j["width"] = c.width;
  j["min_layers"] = c.min_layers;
  j["max_layers"] = c.max_layers;
  j["palette_ids"] = c.palette_ids;
  j["stationary_prob"] = c.stationary_prob;
  j["speed_min"] = c.speed_min;
  j["speed_max"] = c.speed_max;
  j["spin_prob"] = c.spin_prob;
  j["spin_max"] = c.spin_max;
  j["drift_prob"] = c.drift_prob;
  j["drift_max"] = c.drift_max;
  j["size_min"] = c.size_min;
  j["size_max"] = c.size_max;
  j["sticker_prob"] = c.sticker_prob;
  j["max_stickers"] = c.max_stickers;
  j["shake_prob"] = c.shake_prob;
  j["shake_step_max"] = c.shake_step_max;
  j["shake_total_max"] = c.shake_total_max;
  j["blur_prob"] = c.blur_prob;
  j["gaussian_blur"] = c.gaussian_blur;
  j["hue_shift_max"] = c.hue_shift_max;
  return j;
}

namespace detail {

inline TextureSpec sample_texture(Rng& rng, const GenConfig& cfg) {
  TextureSpec t;
  t.palette_id = cfg.palette_ids[rng.index(cfg.palette_ids.size())];
  t.u0 = rng.uniform(0.0, kPaletteSize);
  t.v0 = rng.uniform(0.0, kPaletteSize);
  t.hue_deg = rng.uniform(0.0, cfg.hue_shift_max);
  return t;
}

}  // namespace detail

// Samples a fully resolved scene. One PRNG stream seeded from `seed` drives
// every choice in a fixed order, so equal (seed, config) always produce the
// same spec.
inline SceneSpec sample_scene(std::uint64_t seed, const GenConfig& cfg, const ShapeLibrary& lib) {
  if (lib.shapes.empty()) throw ConfigError("sample_scene: shape library is empty");
  Rng rng(derive_seed(seed, {0x5CE4Eull}));
  SceneSpec s;
  s.seed = seed;
  s.frames = cfg.frames;
  s.height = cfg.height;
  s.width = cfg.width;
  s.gaussian_blur = cfg.gaussian_blur;
  s.background = detail::sample_texture(rng, cfg);

  const int n_layers = static_cast<int>(rng.uniform_int(cfg.min_layers, cfg.max_layers));
  const double frame_min = std::min(cfg.height, cfg.width);
  for (int i = 0; i < n_layers; ++i) {
    ObjectLayer layer;
    layer.depth = i;
    layer.shape = lib.shapes[rng.index(lib.shapes.size())];
    layer.texture = detail::sample_texture(rng, cfg);

    const double extent = rng.uniform(cfg.size_min, cfg.size_max) * frame_min;
    const double scale0 = extent / shapegen::kNative;
    const double angle0 = rng.uniform(0.0, 2.0 * M_PI);
    const Vec2 start{rng.uniform(0.2 * cfg.width, 0.8 * cfg.width),
                     rng.uniform(0.2 * cfg.height, 0.8 * cfg.height)};

    Trajectory& tr = layer.trajectory;
    tr.stationary = rng.bernoulli(cfg.stationary_prob);
    Vec2 vel{0, 0};
    double spin = 0, drift = 0;
    if (!tr.stationary) {
      const double dir = rng.uniform(0.0, 2.0 * M_PI);
      const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
      vel = {speed * std::cos(dir), speed * std::sin(dir)};
      if (rng.bernoulli(cfg.spin_prob)) spin = rng.uniform(-cfg.spin_max, cfg.spin_max);
      if (rng.bernoulli(cfg.drift_prob)) drift = rng.uniform(-cfg.drift_max, cfg.drift_max);
    }
    tr.position.resize(cfg.frames);
    tr.angle.resize(cfg.frames);
    tr.scale.resize(cfg.frames);
    for (int t = 0; t < cfg.frames; ++t) {
      tr.position[t] = {start.x + vel.x * t, start.y + vel.y * t};
      tr.angle[t] = angle0 + spin * t;
      tr.scale[t] = scale0 * std::pow(1.0 + drift, t);
    }

    if (rng.bernoulli(cfg.sticker_prob)) {
      const int n_stickers = static_cast<int>(rng.uniform_int(1, cfg.max_stickers));
      for (int k = 0; k < n_stickers; ++k) {
        ObjectSticker st;
        st.shape = lib.shapes[rng.index(lib.shapes.size())];
        st.texture = detail::sample_texture(rng, cfg);
        st.offset = {rng.uniform(-0.25, 0.25) * shapegen::kNative,
                     rng.uniform(-0.25, 0.25) * shapegen::kNative};
        st.scale = rng.uniform(0.2, 0.45);
        st.angle = rng.uniform(0.0, 2.0 * M_PI);
        layer.stickers.push_back(std::move(st));
      }
    }
    s.layers.push_back(std::move(layer));
  }

  s.camera_shake.assign(cfg.frames, Vec2i{0, 0});
  if (cfg.shake_prob > 0 && rng.bernoulli(cfg.shake_prob)) {
    Vec2i cur{0, 0};
    for (int t = 1; t < cfg.frames; ++t) {
      cur.x += static_cast<int>(rng.uniform_int(-cfg.shake_step_max, cfg.shake_step_max));
      cur.y += static_cast<int>(rng.uniform_int(-cfg.shake_step_max, cfg.shake_step_max));
      cur.x = std::clamp(cur.x, -cfg.shake_total_max, cfg.shake_total_max);
      cur.y = std::clamp(cur.y, -cfg.shake_total_max, cfg.shake_total_max);
      s.camera_shake[t] = cur;
    }
  }

  s.blur_schedule.assign(cfg.frames, 0);
  for (int t = 0; t < cfg.frames; ++t)
    if (cfg.blur_prob > 0 && rng.bernoulli(cfg.blur_prob))
      s.blur_schedule[t] = rng.bernoulli(0.5) ? 5 : 3;

  return s;
}

inline void validate_scene(const SceneSpec& s) {
  if (s.frames < 1) throw DataError("scene: frames < 1");
  if (s.height < 1 || s.width < 1) throw DataError("scene: empty frame size");
  if (static_cast<int>(s.camera_shake.size()) != s.frames)
    throw DataError("scene: camera_shake length != frames");
  if (s.camera_shake[0].x != 0 || s.camera_shake[0].y != 0)
    throw DataError("scene: camera_shake[0] must be (0,0)");
  if (static_cast<int>(s.blur_schedule.size()) != s.frames)
    throw DataError("scene: blur_schedule length != frames");
  for (int b : s.blur_schedule)
    if (b != 0 && b != 3 && b != 5) throw DataError("scene: blur kernel must be 0, 3 or 5");
  std::vector<int> depths;
  for (const auto& layer : s.layers) {
    depths.push_back(layer.depth);
    if (layer.shape.fg_count() == 0) throw DataError("scene: shape mask has no foreground");
    const Trajectory& tr = layer.trajectory;
    if (tr.frames() != s.frames || static_cast<int>(tr.angle.size()) != s.frames ||
        static_cast<int>(tr.scale.size()) != s.frames)
      throw DataError("scene: trajectory length != frames");
    if (tr.stationary)
      for (int t = 1; t < s.frames; ++t)
        if (tr.position[t].x != tr.position[0].x || tr.position[t].y != tr.position[0].y ||
            tr.angle[t] != tr.angle[0] || tr.scale[t] != tr.scale[0])
          throw DataError("scene: stationary layer changes pose");
  }
  std::sort(depths.begin(), depths.end());
  if (std::adjacent_find(depths.begin(), depths.end()) != depths.end())
    throw DataError("scene: duplicate layer depth");
}

// Mask payloads are bit-packed row-major (8 px per byte, MSB first) and
// base64'd so spec.json stays self-contained and byte-stable.
inline Json mask_to_json(const Mask& m) {
  std::vector<std::uint8_t> bits((static_cast<std::size_t>(m.h) * m.w + 7) / 8, 0);
  for (int i = 0; i < m.h * m.w; ++i)
    if (m.v[static_cast<std::size_t>(i)]) bits[static_cast<std::size_t>(i) / 8] |= 0x80 >> (i % 8);
  Json j;
  j["h"] = m.h;
  j["w"] = m.w;
  j["bits"] = base64_encode(bits.data(), bits.size());
  return j;
}

inline Mask mask_from_json(const Json& j) {
  const int h = json_get<int>(j, "h"), w = json_get<int>(j, "w");
  if (h < 1 || w < 1) throw DataError("mask: bad dimensions");
  const auto bits = base64_decode(json_get<std::string>(j, "bits"));
  if (bits.size() < (static_cast<std::size_t>(h) * w + 7) / 8)
    throw DataError("mask: payload too short");
  Mask m(h, w, 1, 0);
  for (int i = 0; i < h * w; ++i)
    m.v[static_cast<std::size_t>(i)] =
        (bits[static_cast<std::size_t>(i) / 8] >> (7 - i % 8)) & 1;
  return m;
}

inline Json shape_to_json(const ShapeAsset& a) {
  Json j;
  j["id"] = a.id;
  j["source"] = to_string(a.source);
  j["mask"] = mask_to_json(a.mask);
  return j;
}

inline ShapeAsset shape_from_json(const Json& j) {
  ShapeAsset a;
  a.id = json_get<std::string>(j, "id");
  a.source = shape_source_from_string(json_get<std::string>(j, "source"));
  a.mask = mask_from_json(j.at("mask"));
  if (a.fg_count() == 0) throw DataError("shape: mask has no foreground");
  return a;
}

inline Json texture_to_json(const TextureSpec& t) {
  Json j;
  j["palette_id"] = t.palette_id;
  j["u0"] = t.u0;
  j["v0"] = t.v0;
  j["hue_deg"] = t.hue_deg;
  return j;
}

inline TextureSpec texture_from_json(const Json& j) {
  TextureSpec t;
  t.palette_id = json_get<int>(j, "palette_id");
  if (t.palette_id < 0 || t.palette_id >= kPaletteCount)
    throw DataError("texture: palette_id out of range");
  t.u0 = json_get<double>(j, "u0");
  t.v0 = json_get<double>(j, "v0");
  t.hue_deg = json_get<double>(j, "hue_deg");
  return t;
}

inline Json scene_to_json(const SceneSpec& s) {
  Json j;
  j["format_version"] = kSceneFormatVersion;
  j["generator_version"] = s.generator_version;
  j["seed"] = s.seed;
  j["frames"] = s.frames;
  j["height"] = s.height;
  j["width"] = s.width;
  j["background"] = texture_to_json(s.background);
  Json shake = Json::array();
  for (const auto& v : s.camera_shake) shake.push_back(Json::array({v.x, v.y}));
  j["camera_shake"] = std::move(shake);
  j["blur_schedule"] = s.blur_schedule;
  j["gaussian_blur"] = s.gaussian_blur;
  Json layers = Json::array();
  for (const auto& layer : s.layers) {
    Json l;
    l["depth"] = layer.depth;
    l["shape"] = shape_to_json(layer.shape);
    l["texture"] = texture_to_json(layer.texture);
    Json tr;
    tr["stationary"] = layer.trajectory.stationary;
    Json pos = Json::array();
    for (const auto& p : layer.trajectory.position) pos.push_back(Json::array({p.x, p.y}));
    tr["position"] = std::move(pos);
    tr["angle"] = layer.trajectory.angle;
    tr["scale"] = layer.trajectory.scale;
    l["trajectory"] = std::move(tr);
    Json stickers = Json::array();
    for (const auto& st : layer.stickers) {
      Json sj;
      sj["shape"] = shape_to_json(st.shape);
      sj["texture"] = texture_to_json(st.texture);
      sj["offset"] = Json::array({st.offset.x, st.offset.y});
      sj["scale"] = st.scale;
      sj["angle"] = st.angle;
      stickers.push_back(std::move(sj));
    }
    l["stickers"] = std::move(stickers);
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  return j;
}

inline SceneSpec scene_from_json(const Json& j) {
  const int fv = json_get_or<int>(j, "format_version", -1);
  if (fv != kSceneFormatVersion) throw DataError("scene: unsupported format_version");
  SceneSpec s;
  s.generator_version = json_get<std::string>(j, "generator_version");
  s.seed = json_get<std::uint64_t>(j, "seed");
  s.frames = json_get<int>(j, "frames");
  s.height = json_get<int>(j, "height");
  s.width = json_get<int>(j, "width");
  s.background = texture_from_json(j.at("background"));
  for (const auto& v : j.at("camera_shake"))
    s.camera_shake.push_back({v.at(0).get<int>(), v.at(1).get<int>()});
  s.blur_schedule = json_get<std::vector<int>>(j, "blur_schedule");
  s.gaussian_blur = json_get_or(j, "gaussian_blur", false);
  for (const auto& l : j.at("layers")) {
    ObjectLayer layer;
    layer.depth = json_get<int>(l, "depth");
    layer.shape = shape_from_json(l.at("shape"));
    layer.texture = texture_from_json(l.at("texture"));
    const Json& tr = l.at("trajectory");
    layer.trajectory.stationary = json_get<bool>(tr, "stationary");
    for (const auto& p : tr.at("position"))
      layer.trajectory.position.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    layer.trajectory.angle = json_get<std::vector<double>>(tr, "angle");
    layer.trajectory.scale = json_get<std::vector<double>>(tr, "scale");
    for (const auto& sj : l.at("stickers")) {
      ObjectSticker st;
      st.shape = shape_from_json(sj.at("shape"));
      st.texture = texture_from_json(sj.at("texture"));
      st.offset = {sj.at("offset").at(0).get<double>(), sj.at("offset").at(1).get<double>()};
      st.scale = json_get<double>(sj, "scale");
      st.angle = json_get<double>(sj, "angle");
      layer.stickers.push_back(std::move(st));
    }
    s.layers.push_back(std::move(layer));
  }
  validate_scene(s);
  return s;
}

}  // namespace objn
