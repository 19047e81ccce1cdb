#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "objn/core/jsonio.hpp"
#include "objn/core/png_io.hpp"
#include "objn/datasetio/dataset.hpp"
#include "objn/datasetio/ingest.hpp"
#include "objn/datasetio/scene_record.hpp"
#include "objn/datasetio/tensors.hpp"

namespace fs = std::filesystem;
using namespace objn;

namespace {

fs::path temp_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / "objn_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

GenConfig tiny_cfg() {
  GenConfig c;
  c.frames = 6;
  c.height = 32;
  c.width = 32;
  c.max_layers = 2;
  return c;
}

BuildConfig tiny_build(int train = 3, int val = 2, int test = 1) {
  BuildConfig b;
  b.train_count = train;
  b.val_count = val;
  b.test_count = test;
  b.gen = tiny_cfg();
  return b;
}

}  // namespace

TEST_CASE("scene records survive a write/read round trip bit-exact", "[datasetio]") {
  const auto dir = temp_dir("record");
  const auto lib = ShapeLibrary::builtin();
  const SceneSpec spec = sample_scene(42, tiny_cfg(), lib);
  const SceneContent c = materialize_scene(spec);
  write_scene(dir / "s0", c);

  const SceneContent back = read_scene(dir / "s0");
  CHECK(canonical_dump(scene_to_json(back.spec)) == canonical_dump(scene_to_json(c.spec)));
  REQUIRE(back.frames.rgb.size() == c.frames.rgb.size());
  for (std::size_t t = 0; t < c.frames.rgb.size(); ++t) {
    CHECK(back.frames.rgb[t] == c.frames.rgb[t]);
    CHECK(back.frames.luma[t] == c.frames.luma[t]);
    CHECK(back.mbs.labels[t] == c.mbs.labels[t]);
  }
  // Attention is stored as 8-bit PNG; the reread heat must requantize to the
  // same bytes the writer produced.
  REQUIRE(back.attention.size() == c.attention.size());
  for (std::size_t i = 0; i < c.attention.size(); ++i)
    for (std::size_t t = 0; t < c.attention[i].heat.size(); ++t)
      CHECK(heat_to_gray(back.attention[i].heat[t]) == heat_to_gray(c.attention[i].heat[t]));
  REQUIRE(back.asp.size() == c.asp.size());
  for (std::size_t i = 0; i < c.asp.size(); ++i)
    for (std::size_t t = 0; t < c.asp[i].labels.size(); ++t)
      CHECK(back.asp[i].labels[t] == c.asp[i].labels[t]);
}

TEST_CASE("stored attention is reproducible from the spec alone", "[datasetio]") {
  const auto lib = ShapeLibrary::builtin();
  const SceneSpec spec = sample_scene(43, tiny_cfg(), lib);
  REQUIRE(!spec.layers.empty());
  const AttentionSequence a = stored_attention(spec, 0), b = stored_attention(spec, 0);
  for (std::size_t t = 0; t < a.heat.size(); ++t) REQUIRE(a.heat[t] == b.heat[t]);
}

TEST_CASE("scene reader names what is missing or corrupt", "[datasetio]") {
  const auto dir = temp_dir("broken");
  const auto lib = ShapeLibrary::builtin();
  const SceneContent c = materialize_scene(sample_scene(44, tiny_cfg(), lib));
  write_scene(dir / "s", c);

  SECTION("missing spec") {
    fs::remove(dir / "s" / "spec.json");
    try {
      read_scene(dir / "s");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("spec.json") != std::string::npos);
    }
  }
  SECTION("missing frame") {
    fs::remove(dir / "s" / "frames" / frame_name(2));
    try {
      read_scene(dir / "s");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(frame_name(2)) != std::string::npos);
    }
  }
  SECTION("label value out of range") {
    GrayU8 bad = c.mbs.labels[1];
    bad.at(0, 0) = 9;
    write_png(dir / "s" / "mbs_gt" / frame_name(1), bad);
    CHECK_THROWS_AS(read_scene(dir / "s"), DataError);
  }
}

TEST_CASE("dataset builds are deterministic with unique per-scene seeds", "[datasetio]") {
  const auto da = temp_dir("build_a"), db = temp_dir("build_b");
  const auto lib = ShapeLibrary::builtin();
  const auto bc = tiny_build();
  const DatasetManifest a = build_dataset(da, bc, 77, lib);
  const DatasetManifest b = build_dataset(db, bc, 77, lib);

  std::set<std::uint64_t> seeds;
  for (auto split : {Split::train, Split::val, Split::test}) {
    const auto& ea = a.split(split);
    const auto& eb = b.split(split);
    REQUIRE(ea.size() == eb.size());
    for (std::size_t i = 0; i < ea.size(); ++i) {
      CHECK(ea[i].seed == eb[i].seed);
      CHECK(ea[i].hash == eb[i].hash);
      CHECK(seeds.insert(ea[i].seed).second);  // no seed reuse across splits
    }
  }
  CHECK(a.split(Split::train).size() == 3);
  CHECK(a.split(Split::val).size() == 2);
  CHECK(a.split(Split::test).size() == 1);

  // Recorded hashes match the stored specs.
  for (const SceneEntry& e : a.split(Split::train)) {
    const SceneContent c = read_scene(a.scene_dir(Split::train, e));
    CHECK(scene_hash(c.spec) == e.hash);
  }
}

TEST_CASE("manifests round-trip through disk", "[datasetio]") {
  const auto dir = temp_dir("manifest");
  const auto lib = ShapeLibrary::builtin();
  const DatasetManifest built = build_dataset(dir, tiny_build(), 5, lib);
  const DatasetManifest loaded = load_manifest(dir);
  CHECK(loaded.global_seed == built.global_seed);
  CHECK(loaded.generator_version == built.generator_version);
  for (auto split : {Split::train, Split::val, Split::test}) {
    REQUIRE(loaded.split(split).size() == built.split(split).size());
    for (std::size_t i = 0; i < loaded.split(split).size(); ++i) {
      CHECK(loaded.split(split)[i].id == built.split(split)[i].id);
      CHECK(loaded.split(split)[i].seed == built.split(split)[i].seed);
      CHECK(loaded.split(split)[i].hash == built.split(split)[i].hash);
    }
  }
  CHECK_THROWS_AS(load_manifest(dir / "nowhere"), DataError);
}

TEST_CASE("ingest reads external frames and validates them", "[datasetio]") {
  const auto dir = temp_dir("ingest");
  RgbU8 img(24, 40, 3, 0);
  for (int i = 0; i < 6; ++i) {
    img.at(3, 5, 0) = static_cast<std::uint8_t>(40 * i);
    char buf[16];
    std::snprintf(buf, sizeof buf, "f%02d.png", i);
    write_png(dir / buf, img);
  }
  const IngestResult r = ingest_external_frames(dir, 5);
  REQUIRE(r.frames.rgb.size() == 6);
  CHECK(r.names.front() == "f00.png");
  CHECK(r.names.back() == "f05.png");
  CHECK(r.frames.luma[0].h == 24);

  SECTION("too few frames") {
    const auto d2 = temp_dir("ingest_few");
    write_png(d2 / "a.png", img);
    CHECK_THROWS_AS(ingest_external_frames(d2, 5), DataError);
  }
  SECTION("size mismatch names the offender") {
    write_png(dir / "g00.png", RgbU8(10, 10, 3, 0));
    try {
      ingest_external_frames(dir, 5);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("g00.png") != std::string::npos);
    }
  }
}

TEST_CASE("window tensors normalize and validate ranges", "[datasetio]") {
  const auto lib = ShapeLibrary::builtin();
  const SceneContent c = materialize_scene(sample_scene(45, tiny_cfg(), lib));

  const auto rgb = rgb_window_tensor<float>(c.frames.rgb, 1, 4);
  CHECK(rgb.t == 4);
  CHECK(rgb.c == 3);
  CHECK(rgb.h == 32);
  CHECK(rgb.w == 32);
  CHECK(rgb.at(0, 0, 3, 7) ==
        Catch::Approx(c.frames.rgb[1].at(3, 7, 0) / 255.0).margin(1e-7));

  const auto luma = luma_window_tensor<float>(c.frames.luma, 0, 3);
  CHECK(luma.c == 1);
  CHECK(luma.at(2, 0, 5, 5) ==
        Catch::Approx(c.frames.luma[2].at(5, 5) / 255.0).margin(1e-7));

  CHECK_THROWS_AS(rgb_window_tensor<float>(c.frames.rgb, 4, 4), DataError);
  CHECK_THROWS_AS(luma_window_tensor<float>(c.frames.luma, -1, 2), DataError);
}

TEST_CASE("argmax breaks ties toward the lower class index", "[datasetio]") {
  Tensor<float> prob(1, 3, 2, 2);
  // Pixel (0,0): tie between classes 0 and 2.
  prob.at(0, 0, 0, 0) = 0.4f;
  prob.at(0, 1, 0, 0) = 0.2f;
  prob.at(0, 2, 0, 0) = 0.4f;
  // Pixel (0,1): class 1 wins.
  prob.at(0, 0, 0, 1) = 0.1f;
  prob.at(0, 1, 0, 1) = 0.8f;
  prob.at(0, 2, 0, 1) = 0.1f;
  // Pixel (1,0): all equal.
  prob.at(0, 0, 1, 0) = prob.at(0, 1, 1, 0) = prob.at(0, 2, 1, 0) = 1.0f / 3.0f;
  // Pixel (1,1): class 2 wins.
  prob.at(0, 2, 1, 1) = 0.9f;

  const Mask m = argmax_frame(prob, 0);
  CHECK(m.at(0, 0) == 0);
  CHECK(m.at(0, 1) == 1);
  CHECK(m.at(1, 0) == 0);
  CHECK(m.at(1, 1) == 2);
}

TEST_CASE("boundary channel argmax reconstructs the dropped class", "[datasetio]") {
  // Channels hold classes 1..3; class 0 is implied as the remainder.
  Tensor<float> ch(1, 3, 1, 2);
  ch.at(0, 0, 0, 0) = 0.1f;
  ch.at(0, 1, 0, 0) = 0.2f;
  ch.at(0, 2, 0, 0) = 0.1f;  // remainder 0.6 -> class 0
  ch.at(0, 0, 0, 1) = 0.2f;
  ch.at(0, 1, 0, 1) = 0.5f;
  ch.at(0, 2, 0, 1) = 0.2f;  // class 2 (channel 1) wins
  const Mask m = mbs_channels_argmax(ch, 0);
  CHECK(m.at(0, 0) == 0);
  CHECK(m.at(0, 1) == 2);
}
