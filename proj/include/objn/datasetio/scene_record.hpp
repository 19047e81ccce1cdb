#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "objn/attention/attention.hpp"
#include "objn/core/error.hpp"
#include "objn/core/jsonio.hpp"
#include "objn/core/png_io.hpp"
#include "objn/groundtruth/asp.hpp"
#include "objn/groundtruth/mbs.hpp"
#include "objn/scenegen/render.hpp"
#include "objn/scenegen/scene.hpp"

namespace objn {

namespace fs = std::filesystem;

// Everything derivable from one SceneSpec, materialized.
struct SceneContent {
  SceneSpec spec;
  FrameSequence frames;
  MBSLabelSequence mbs;
  std::vector<ASPLabelSequence> asp;        // one per layer
  std::vector<AttentionSequence> attention;  // one per layer, stored recipe
};

inline std::string frame_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%03d.png", t);
  return buf;
}

inline std::string layer_dir_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "layer_%02d", i);
  return buf;
}

// The attention sequence stored with a scene uses this fixed recipe (mode,
// constellation size and jitter all derived from the scene seed), so a
// record can be regenerated bit-exactly from spec.json alone. Training draws
// fresh jitter instead of reading these.
inline AttentionSequence stored_attention(const SceneSpec& spec, int layer) {
  const std::uint64_t seed =
      derive_seed(spec.seed, {0xA77E57ull, static_cast<std::uint64_t>(layer)});
  Rng rng(seed);
  const AttentionMode mode = sample_attention_mode(rng);
  const int k = static_cast<int>(rng.uniform_int(2, 4));
  return make_attention(spec, layer, mode, k, JitterConfig{}, seed);
}

inline SceneContent materialize_scene(const SceneSpec& spec) {
  SceneContent c;
  c.spec = spec;
  c.frames = render_frames(spec);
  c.mbs = mbs_labels(spec);
  for (int i = 0; i < static_cast<int>(spec.layers.size()); ++i) {
    c.asp.push_back(asp_labels(spec, i));
    c.attention.push_back(stored_attention(spec, i));
  }
  return c;
}

inline GrayU8 heat_to_gray(const GrayF& heat) {
  GrayU8 g(heat.h, heat.w, 1);
  for (std::size_t i = 0; i < heat.v.size(); ++i)
    g.v[i] = static_cast<std::uint8_t>(std::lround(std::clamp(heat.v[i], 0.0f, 1.0f) * 255.0f));
  return g;
}

inline GrayF gray_to_heat(const GrayU8& g) {
  GrayF heat(g.h, g.w, 1);
  for (std::size_t i = 0; i < g.v.size(); ++i) heat.v[i] = g.v[i] / 255.0f;
  return heat;
}

inline void write_scene(const fs::path& dir, const SceneContent& c) {
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "luma");
  fs::create_directories(dir / "mbs_gt");
  save_json(dir / "spec.json", scene_to_json(c.spec));
  for (int t = 0; t < c.spec.frames; ++t) {
    write_png(dir / "frames" / frame_name(t), c.frames.rgb[static_cast<std::size_t>(t)]);
    write_png(dir / "luma" / frame_name(t), c.frames.luma[static_cast<std::size_t>(t)]);
    write_png(dir / "mbs_gt" / frame_name(t), c.mbs.labels[static_cast<std::size_t>(t)]);
  }
  for (int i = 0; i < static_cast<int>(c.spec.layers.size()); ++i) {
    const fs::path asp_dir = dir / "asp_gt" / layer_dir_name(i);
    const fs::path att_dir = dir / "attention" / layer_dir_name(i);
    fs::create_directories(asp_dir);
    fs::create_directories(att_dir);
    for (int t = 0; t < c.spec.frames; ++t) {
      write_png(asp_dir / frame_name(t),
                c.asp[static_cast<std::size_t>(i)].labels[static_cast<std::size_t>(t)]);
      write_png(att_dir / frame_name(t),
                heat_to_gray(c.attention[static_cast<std::size_t>(i)].heat[static_cast<std::size_t>(t)]));
    }
  }
}

namespace detail {

inline GrayU8 read_label_png(const fs::path& p, int max_class, const char* what) {
  if (!fs::exists(p)) throw DataError(std::string("scene record: missing ") + what + ": " + p.string());
  GrayU8 img = read_png_gray(p);
  for (auto v : img.v)
    if (v > max_class)
      throw DataError(std::string("scene record: ") + what + " has out-of-range class value " +
                      std::to_string(static_cast<int>(v)) + " in " + p.string());
  return img;
}

}  // namespace detail

// Loads and validates a scene directory. Label values are range-checked;
// any missing artifact is named in the error.
inline SceneContent read_scene(const fs::path& dir) {
  const fs::path spec_path = dir / "spec.json";
  if (!fs::exists(spec_path))
    throw DataError("scene record: missing spec.json in " + dir.string());
  SceneContent c;
  c.spec = scene_from_json(load_json(spec_path));
  const int T = c.spec.frames;
  for (int t = 0; t < T; ++t) {
    const fs::path fp = dir / "frames" / frame_name(t);
    if (!fs::exists(fp)) throw DataError("scene record: missing frame: " + fp.string());
    c.frames.rgb.push_back(read_png_rgb(fp));
    const fs::path lp = dir / "luma" / frame_name(t);
    if (!fs::exists(lp)) throw DataError("scene record: missing luma frame: " + lp.string());
    c.frames.luma.push_back(read_png_gray(lp));
    c.mbs.labels.push_back(
        detail::read_label_png(dir / "mbs_gt" / frame_name(t), kMbsClasses - 1, "MBS label"));
  }
  for (int i = 0; i < static_cast<int>(c.spec.layers.size()); ++i) {
    ASPLabelSequence asp;
    asp.target_layer = i;
    AttentionSequence att;
    att.target_layer = i;
    for (int t = 0; t < T; ++t) {
      asp.labels.push_back(detail::read_label_png(dir / "asp_gt" / layer_dir_name(i) / frame_name(t),
                                                  kAspClasses - 1, "ASP label"));
      const fs::path ap = dir / "attention" / layer_dir_name(i) / frame_name(t);
      if (!fs::exists(ap)) throw DataError("scene record: missing attention frame: " + ap.string());
      att.heat.push_back(gray_to_heat(read_png_gray(ap)));
    }
    c.asp.push_back(std::move(asp));
    c.attention.push_back(std::move(att));
  }
  for (const auto& img : c.frames.rgb)
    if (img.h != c.spec.height || img.w != c.spec.width)
      throw DataError("scene record: frame size disagrees with spec in " + dir.string());
  return c;
}

// Content hash over the canonical spec bytes; every raster is a pure
// function of the spec, so this pins the whole record.
inline std::string scene_hash(const SceneSpec& spec) { return json_hash_hex(scene_to_json(spec)); }

}  // namespace objn
