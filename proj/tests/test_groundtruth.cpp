#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "objn/groundtruth/asp.hpp"
#include "objn/groundtruth/mbs.hpp"
#include "objn/scenegen/scene.hpp"
#include "objn/scenegen/shape.hpp"
#include "oracle/mbs_oracle.hpp"

using namespace objn;

namespace {

GenConfig gt_cfg() {
  GenConfig c;
  c.frames = 6;
  c.height = 48;
  c.width = 48;
  c.max_layers = 3;
  c.blur_prob = 0.3;
  c.shake_prob = 0.4;
  return c;
}

SceneSpec one_square(int frames, int hw, Vec2 start, Vec2 vel, double spin = 0.0,
                     int depth = 0) {
  SceneSpec s;
  s.seed = 1;
  s.frames = frames;
  s.height = hw;
  s.width = hw;
  s.camera_shake.assign(static_cast<std::size_t>(frames), Vec2i{0, 0});
  s.blur_schedule.assign(static_cast<std::size_t>(frames), 0);
  ObjectLayer layer;
  layer.depth = depth;
  layer.shape.id = "square";
  layer.shape.mask = Mask(16, 16, 1, 1);
  for (int t = 0; t < frames; ++t) {
    layer.trajectory.position.push_back({start.x + vel.x * t, start.y + vel.y * t});
    layer.trajectory.angle.push_back(spin * t);
    layer.trajectory.scale.push_back(1.0);
  }
  layer.trajectory.stationary = vel.x == 0 && vel.y == 0 && spin == 0;
  s.layers.push_back(std::move(layer));
  return s;
}

int count_class(const GrayU8& lab, std::uint8_t cls) {
  int n = 0;
  for (auto v : lab.v) n += v == cls ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("fully static scenes carry no boundary labels", "[groundtruth]") {
  SceneSpec s = one_square(4, 48, {24, 24}, {0, 0});
  ObjectLayer second = s.layers[0];
  second.depth = 1;
  for (auto& p : second.trajectory.position) p.x += 6;
  s.layers.push_back(second);

  const MBSLabelSequence seq = mbs_labels(s);
  for (const auto& lab : seq.labels)
    for (auto v : lab.v) REQUIRE(v == kMbsNone);
}

TEST_CASE("a single moving square grows inner and outer bands", "[groundtruth]") {
  const SceneSpec s = one_square(4, 48, {20, 24}, {2, 1});
  const MBSLabelSequence seq = mbs_labels(s);
  const LayerMap vis = layer_visibility(s, 1);
  const GrayU8& lab = seq.labels[1];

  CHECK(count_class(lab, kMbsFront) > 0);
  CHECK(count_class(lab, kMbsBack) > 0);
  CHECK(count_class(lab, kMbsBoth) == 0);

  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      // Sense side: class 1 on the square, class 2 on the background.
      if (lab.at(y, x) == kMbsFront) REQUIRE(vis.at(y, x) == 0);
      if (lab.at(y, x) == kMbsBack) REQUIRE(vis.at(y, x) == kBackgroundLayer);
      // Band width: every labeled pixel lies within Chebyshev distance 3 of
      // a boundary pixel (a square pixel bordering background).
      if (lab.at(y, x) != kMbsNone) {
        bool near_edge = false;
        for (int dy = -3; dy <= 3 && !near_edge; ++dy)
          for (int dx = -3; dx <= 3 && !near_edge; ++dx) {
            const int ny = y + dy, nx = x + dx;
            if (!vis.in_bounds(ny, nx) || vis.at(ny, nx) != 0) continue;
            for (int ey = -1; ey <= 1 && !near_edge; ++ey)
              for (int ex = -1; ex <= 1 && !near_edge; ++ex)
                if (vis.in_bounds(ny + ey, nx + ex) &&
                    vis.at(ny + ey, nx + ex) == kBackgroundLayer)
                  near_edge = true;
          }
        REQUIRE(near_edge);
      }
    }
}

TEST_CASE("equal-velocity contact is a static boundary", "[groundtruth]") {
  SceneSpec s = one_square(4, 48, {18, 24}, {1.5, 0});
  ObjectLayer top = s.layers[0];
  top.depth = 1;
  for (auto& p : top.trajectory.position) p.x += 8;
  s.layers.push_back(top);

  bool saw_pair = false;
  for (const BoundarySegment& seg : occlusion_boundaries(s, 1)) {
    if (seg.front_layer == 1 && seg.back_layer == 0) {
      CHECK_FALSE(seg.moving);
      saw_pair = true;
    }
    if (seg.back_layer == kBackgroundLayer) CHECK(seg.moving);
  }
  CHECK(saw_pair);
}

TEST_CASE("boundary segments lie on the front layer's visible silhouette", "[groundtruth]") {
  const auto lib = ShapeLibrary::builtin();
  const SceneSpec s = sample_scene(31, gt_cfg(), lib);
  for (int t = 0; t < s.frames; ++t) {
    const LayerMap vis = layer_visibility(s, t);
    for (const BoundarySegment& seg : occlusion_boundaries(s, t))
      for (const Vec2i& p : seg.pixels) {
        REQUIRE(vis.at(p.y, p.x) == seg.front_layer);
        bool borders_back = false;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            if (vis.in_bounds(p.y + dy, p.x + dx) &&
                vis.at(p.y + dy, p.x + dx) == seg.back_layer)
              borders_back = true;
        REQUIRE(borders_back);
      }
  }
}

TEST_CASE("rotation alone produces moving boundaries", "[groundtruth]") {
  const SceneSpec s = one_square(4, 48, {24, 24}, {0, 0}, 0.1);
  const MBSLabelSequence seq = mbs_labels(s);
  CHECK(count_class(seq.labels[1], kMbsFront) > 0);
  CHECK(count_class(seq.labels[1], kMbsBack) > 0);
}

TEST_CASE("labels match the brute-force oracle on random scenes", "[groundtruth]") {
  const auto lib = ShapeLibrary::builtin();
  const auto cfg = gt_cfg();
  for (std::uint64_t seed = 200; seed < 212; ++seed) {
    const SceneSpec s = sample_scene(seed, cfg, lib);
    const MBSLabelSequence got = mbs_labels(s);
    const MBSLabelSequence want = oracle::brute_force_mbs_oracle(s);
    REQUIRE(got.labels.size() == want.labels.size());
    for (int t = 0; t < s.frames; ++t) {
      INFO("seed " << seed << " frame " << t);
      REQUIRE(got.labels[static_cast<std::size_t>(t)] ==
              want.labels[static_cast<std::size_t>(t)]);
    }
  }
}

TEST_CASE("camera shake only disturbs labels near the border", "[groundtruth]") {
  SceneSpec base = one_square(4, 48, {24, 24}, {2, 1});
  SceneSpec shaken = base;
  shaken.camera_shake[1] = {3, -2};
  shaken.camera_shake[2] = {-1, 4};
  shaken.camera_shake[3] = {2, 2};
  const MBSLabelSequence a = mbs_labels(base), b = mbs_labels(shaken);
  for (int t = 0; t < 4; ++t) {
    const Vec2i sh = shaken.camera_shake[static_cast<std::size_t>(t)];
    const int margin = 3 + std::max(std::abs(sh.x), std::abs(sh.y)) + 1;
    for (int y = margin; y < 48 - margin; ++y)
      for (int x = margin; x < 48 - margin; ++x) {
        const int sy = y - sh.y, sx = x - sh.x;
        if (sy < margin || sy >= 48 - margin || sx < margin || sx >= 48 - margin) continue;
        REQUIRE(int(b.labels[static_cast<std::size_t>(t)].at(y, x)) ==
                int(a.labels[static_cast<std::size_t>(t)].at(sy, sx)));
      }
  }
}

TEST_CASE("blur never touches ground truth", "[groundtruth]") {
  const auto lib = ShapeLibrary::builtin();
  SceneSpec s = sample_scene(77, gt_cfg(), lib);
  SceneSpec sharp = s;
  std::fill(sharp.blur_schedule.begin(), sharp.blur_schedule.end(), 0);
  SceneSpec soft = s;
  std::fill(soft.blur_schedule.begin(), soft.blur_schedule.end(), 5);
  const MBSLabelSequence a = mbs_labels(sharp), b = mbs_labels(soft);
  for (int t = 0; t < s.frames; ++t)
    REQUIRE(a.labels[static_cast<std::size_t>(t)] == b.labels[static_cast<std::size_t>(t)]);
}

TEST_CASE("asp classes partition the frame and match the z-order oracle", "[groundtruth]") {
  const auto lib = ShapeLibrary::builtin();
  for (std::uint64_t seed = 300; seed < 308; ++seed) {
    const SceneSpec s = sample_scene(seed, gt_cfg(), lib);
    for (int layer = 0; layer < static_cast<int>(s.layers.size()); ++layer) {
      const ASPLabelSequence seq = asp_labels(s, layer);
      REQUIRE(seq.labels.size() == static_cast<std::size_t>(s.frames));
      for (int t = 0; t < s.frames; ++t) {
        const GrayU8 want = oracle::z_order_asp_frame(s, layer, t);
        INFO("seed " << seed << " layer " << layer << " frame " << t);
        REQUIRE(seq.labels[static_cast<std::size_t>(t)] == want);
      }
    }
  }
}

TEST_CASE("asp rejects a bad target layer", "[groundtruth]") {
  const SceneSpec s = one_square(3, 32, {16, 16}, {1, 0});
  CHECK_THROWS_AS(asp_labels(s, -1), ConfigError);
  CHECK_THROWS_AS(asp_labels(s, 1), ConfigError);
}

TEST_CASE("fully covered targets are entirely obscured", "[groundtruth]") {
  SceneSpec s = one_square(3, 48, {24, 24}, {1, 0});
  ObjectLayer lid = s.layers[0];
  lid.depth = 1;
  lid.shape.mask = Mask(24, 24, 1, 1);  // strictly larger, same center
  s.layers.push_back(lid);
  const ASPLabelSequence seq = asp_labels(s, 0);
  for (const auto& lab : seq.labels) {
    CHECK(count_class(lab, kAspVisible) == 0);
    CHECK(count_class(lab, kAspObscured) > 0);
  }
}
