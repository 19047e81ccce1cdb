#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <string>

#include "objn/core/jsonio.hpp"
#include "objn/scenegen/palette.hpp"
#include "objn/scenegen/render.hpp"
#include "objn/scenegen/scene.hpp"
#include "objn/scenegen/shape.hpp"

using namespace objn;

namespace {

GenConfig small_cfg() {
  GenConfig c;
  c.frames = 6;
  c.height = 48;
  c.width = 48;
  c.max_layers = 3;
  c.blur_prob = 0.3;
  return c;
}

// A hand-built one-layer scene: a square crossing a plain background.
SceneSpec square_scene(int frames, int hw, Vec2 start, Vec2 vel, double spin = 0.0) {
  SceneSpec s;
  s.seed = 1;
  s.frames = frames;
  s.height = hw;
  s.width = hw;
  s.camera_shake.assign(static_cast<std::size_t>(frames), Vec2i{0, 0});
  s.blur_schedule.assign(static_cast<std::size_t>(frames), 0);

  ObjectLayer layer;
  layer.depth = 0;
  layer.shape.id = "square";
  layer.shape.mask = Mask(16, 16, 1, 1);
  layer.texture.palette_id = 1;
  for (int t = 0; t < frames; ++t) {
    layer.trajectory.position.push_back({start.x + vel.x * t, start.y + vel.y * t});
    layer.trajectory.angle.push_back(spin * t);
    layer.trajectory.scale.push_back(1.0);
  }
  layer.trajectory.stationary = vel.x == 0 && vel.y == 0 && spin == 0;
  s.layers.push_back(std::move(layer));
  return s;
}

}  // namespace

TEST_CASE("palettes have names and deterministic pixels", "[scenegen]") {
  std::set<std::string> names;
  for (int id = 0; id < kPaletteCount; ++id) names.insert(palette_name(id));
  CHECK(names.size() == static_cast<std::size_t>(kPaletteCount));
  CHECK_THROWS_AS(palette_name(kPaletteCount), ConfigError);

  const RgbU8 a = make_palette(2, 99), b = make_palette(2, 99), c = make_palette(2, 100);
  CHECK(a.h == kPaletteSize);
  CHECK(a.w == kPaletteSize);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("hue shift wraps at full turns", "[scenegen]") {
  const RgbU8 img = make_palette(1, 7);
  CHECK(hue_shift_image(img, 0.0) == hue_shift_image(img, 360.0));
  CHECK_FALSE(hue_shift_image(img, 0.0) == hue_shift_image(img, 90.0));
}

TEST_CASE("builtin shape library is deterministic and well-formed", "[scenegen]") {
  const ShapeLibrary a = ShapeLibrary::builtin(), b = ShapeLibrary::builtin();
  REQUIRE(!a.shapes.empty());
  REQUIRE(a.shapes.size() == b.shapes.size());
  for (std::size_t i = 0; i < a.shapes.size(); ++i) {
    CHECK(a.shapes[i].id == b.shapes[i].id);
    CHECK(a.shapes[i].mask == b.shapes[i].mask);
    int fg = 0;
    for (auto v : a.shapes[i].mask.v) fg += v ? 1 : 0;
    CHECK(fg > 0);
  }
}

TEST_CASE("sample_scene is a pure function of seed, config and library", "[scenegen]") {
  const auto lib = ShapeLibrary::builtin();
  const auto cfg = small_cfg();
  const SceneSpec a = sample_scene(123, cfg, lib), b = sample_scene(123, cfg, lib);
  CHECK(canonical_dump(scene_to_json(a)) == canonical_dump(scene_to_json(b)));
  const SceneSpec c = sample_scene(124, cfg, lib);
  CHECK(canonical_dump(scene_to_json(a)) != canonical_dump(scene_to_json(c)));
}

TEST_CASE("sampled scenes respect the config envelope", "[scenegen]") {
  const auto lib = ShapeLibrary::builtin();
  const auto cfg = small_cfg();
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const SceneSpec s = sample_scene(seed, cfg, lib);
    REQUIRE_NOTHROW(validate_scene(s));
    CHECK(s.frames == cfg.frames);
    CHECK(static_cast<int>(s.layers.size()) >= cfg.min_layers);
    CHECK(static_cast<int>(s.layers.size()) <= cfg.max_layers);
    CHECK(s.camera_shake[0] == Vec2i{0, 0});
    for (std::size_t i = 0; i < s.layers.size(); ++i) {
      CHECK(s.layers[i].depth == static_cast<int>(i));
      CHECK(s.layers[i].trajectory.frames() == cfg.frames);
      if (s.layers[i].trajectory.stationary) {
        const auto& pos = s.layers[i].trajectory.position;
        CHECK(pos.front().x == pos.back().x);
        CHECK(pos.front().y == pos.back().y);
      }
    }
    for (int b : s.blur_schedule) CHECK((b == 0 || b == 3 || b == 5));
    for (const Vec2i& sh : s.camera_shake) {
      CHECK(std::abs(sh.x) <= cfg.shake_total_max);
      CHECK(std::abs(sh.y) <= cfg.shake_total_max);
    }
  }
}

TEST_CASE("scene json round-trips to the same canonical bytes", "[scenegen]") {
  const auto lib = ShapeLibrary::builtin();
  const SceneSpec s = sample_scene(55, small_cfg(), lib);
  const Json j = scene_to_json(s);
  const SceneSpec back = scene_from_json(j);
  CHECK(canonical_dump(scene_to_json(back)) == canonical_dump(j));
}

TEST_CASE("validate_scene rejects malformed specs", "[scenegen]") {
  const auto lib = ShapeLibrary::builtin();
  SceneSpec s = sample_scene(7, small_cfg(), lib);
  SceneSpec bad = s;
  bad.camera_shake.pop_back();
  CHECK_THROWS_AS(validate_scene(bad), DataError);
  bad = s;
  bad.camera_shake[0] = {1, 0};
  CHECK_THROWS_AS(validate_scene(bad), DataError);
  bad = s;
  bad.blur_schedule.clear();
  CHECK_THROWS_AS(validate_scene(bad), DataError);
}

TEST_CASE("rendering is deterministic and luma is derived from rgb", "[scenegen]") {
  const auto lib = ShapeLibrary::builtin();
  const SceneSpec s = sample_scene(21, small_cfg(), lib);
  const FrameSequence a = render_frames(s), b = render_frames(s);
  REQUIRE(a.rgb.size() == static_cast<std::size_t>(s.frames));
  REQUIRE(a.luma.size() == a.rgb.size());
  for (std::size_t t = 0; t < a.rgb.size(); ++t) {
    CHECK(a.rgb[t] == b.rgb[t]);
    CHECK(a.rgb[t].h == s.height);
    CHECK(a.rgb[t].w == s.width);
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x) {
        const auto expect = luma_of(a.rgb[t].at(y, x, 0), a.rgb[t].at(y, x, 1),
                                    a.rgb[t].at(y, x, 2));
        REQUIRE(a.luma[t].at(y, x) == expect);
      }
  }
}

TEST_CASE("camera shake shifts the composite rigidly", "[scenegen]") {
  SceneSpec still = square_scene(3, 48, {24, 24}, {2, 1});
  SceneSpec shaken = still;
  shaken.camera_shake[1] = {4, -3};
  shaken.camera_shake[2] = {-2, 5};
  const FrameSequence a = render_frames(still), b = render_frames(shaken);
  for (int t = 1; t < 3; ++t) {
    const Vec2i sh = shaken.camera_shake[static_cast<std::size_t>(t)];
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 48; ++x) {
        const int sy = y - sh.y, sx = x - sh.x;
        if (sy < 0 || sy >= 48 || sx < 0 || sx >= 48) continue;
        for (int c = 0; c < 3; ++c)
          REQUIRE(b.rgb[static_cast<std::size_t>(t)].at(y, x, c) ==
                  a.rgb[static_cast<std::size_t>(t)].at(sy, sx, c));
      }
  }
}

TEST_CASE("box blur preserves constant images and spreads edges", "[scenegen]") {
  RgbU8 flat(16, 16, 3, 120);
  CHECK(detail::blur_rgb(flat, 3, false) == flat);
  CHECK(detail::blur_rgb(flat, 5, true) == flat);

  RgbU8 dot(16, 16, 3, 0);
  dot.at(8, 8, 0) = 255;
  const RgbU8 blurred = detail::blur_rgb(dot, 3, false);
  CHECK(blurred.at(8, 8, 0) < 255);
  CHECK(blurred.at(8, 7, 0) > 0);
  CHECK(blurred.at(7, 9, 0) > 0);
  CHECK(blurred.at(8, 4, 0) == 0);
}

TEST_CASE("blurred frames differ from sharp ones only when scheduled", "[scenegen]") {
  SceneSpec sharp = square_scene(3, 48, {24, 24}, {2, 0});
  SceneSpec soft = sharp;
  soft.blur_schedule[1] = 5;
  const FrameSequence a = render_frames(sharp), b = render_frames(soft);
  CHECK(a.rgb[0] == b.rgb[0]);
  CHECK_FALSE(a.rgb[1] == b.rgb[1]);
  CHECK(a.rgb[2] == b.rgb[2]);
}

TEST_CASE("visibility composite reports the frontmost layer", "[scenegen]") {
  SceneSpec s = square_scene(2, 48, {20, 24}, {0, 0});
  // Second layer overlapping the first, higher depth, shifted right.
  ObjectLayer top = s.layers[0];
  top.depth = 1;
  for (auto& p : top.trajectory.position) p.x += 8;
  s.layers.push_back(top);

  const LayerMap vis = layer_visibility(s, 0);
  CHECK(vis.at(24, 14) == 0);             // only the lower square
  CHECK(vis.at(24, 28) == 1);             // overlap: higher depth wins
  CHECK(vis.at(24, 44) == kBackgroundLayer);
  CHECK(vis.at(2, 2) == kBackgroundLayer);
}

TEST_CASE("sticker pixels recolor the host without changing its footprint", "[scenegen]") {
  SceneSpec plain = square_scene(2, 48, {24, 24}, {1, 0});
  SceneSpec stickered = plain;
  ObjectSticker st;
  st.shape.id = "dot";
  st.shape.mask = Mask(6, 6, 1, 1);
  st.texture.palette_id = 3;
  st.texture.u0 = 40;
  st.offset = {0, 0};
  st.scale = 1.0;
  stickered.layers[0].stickers.push_back(st);

  CHECK(layer_visibility(plain, 0) == layer_visibility(stickered, 0));
  const FrameSequence a = render_frames(plain), b = render_frames(stickered);
  CHECK_FALSE(a.rgb[0] == b.rgb[0]);
}
