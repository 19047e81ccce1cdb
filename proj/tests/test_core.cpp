#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "objn/core/gif.hpp"
#include "objn/core/hash.hpp"
#include "objn/core/jsonio.hpp"
#include "objn/core/npy.hpp"
#include "objn/core/parallel.hpp"
#include "objn/core/png_io.hpp"
#include "objn/core/raster.hpp"
#include "objn/core/rng.hpp"

namespace fs = std::filesystem;
using namespace objn;

namespace {

fs::path temp_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / "objn_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("rng streams are reproducible and seed-sensitive", "[core]") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    if (va != c.next_u64()) SUCCEED();
  }
  Rng d(42), e(43);
  int diff = 0;
  for (int i = 0; i < 16; ++i) diff += d.next_u64() != e.next_u64() ? 1 : 0;
  CHECK(diff > 0);
}

TEST_CASE("derive_seed separates paths and orders", "[core]") {
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  CHECK(derive_seed(7, {1, 2}) == derive_seed(7, {1, 2}));
  CHECK(derive_seed(7, {}) != derive_seed(7, {0}));
}

TEST_CASE("uniform and uniform_int stay inside their ranges", "[core]") {
  Rng rng(5);
  bool hit_lo = false, hit_hi = false;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const auto v = rng.uniform_int(-2, 2);
    REQUIRE(v >= -2);
    REQUIRE(v <= 2);
    hit_lo = hit_lo || v == -2;
    hit_hi = hit_hi || v == 2;
  }
  CHECK(hit_lo);
  CHECK(hit_hi);
}

TEST_CASE("index draws are uniform enough to trust for target picks", "[core]") {
  Rng rng(11);
  const std::size_t n = 4;
  std::vector<int> hits(n, 0);
  const int draws = 40000;
  for (int i = 0; i < draws; ++i) ++hits[rng.index(n)];
  for (std::size_t k = 0; k < n; ++k) {
    // Expected 10000 per bucket; 4 sigma is about +/-390.
    CHECK(hits[k] > 9500);
    CHECK(hits[k] < 10500);
  }
}

TEST_CASE("binomial stays within bounds and near its mean", "[core]") {
  Rng rng(13);
  double sum = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const int k = rng.binomial(6, 0.5);
    REQUIRE(k >= 0);
    REQUIRE(k <= 6);
    sum += k;
  }
  CHECK(sum / draws == Catch::Approx(3.0).margin(0.05));
}

TEST_CASE("shuffle permutes deterministically", "[core]") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  Rng a(9);
  a.shuffle(v.begin(), v.end());
  auto w = v;
  std::sort(w.begin(), w.end());
  for (int i = 0; i < 50; ++i) CHECK(w[static_cast<std::size_t>(i)] == i);

  std::vector<int> v2(50);
  std::iota(v2.begin(), v2.end(), 0);
  Rng b(9);
  b.shuffle(v2.begin(), v2.end());
  CHECK(v == v2);
}

TEST_CASE("fnv1a matches the published test vectors", "[core]") {
  CHECK(fnv1a(nullptr, 0) == 0xcbf29ce484222325ull);
  const char a = 'a';
  CHECK(fnv1a(&a, 1) == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("file_hash_hex is stable and empty for missing files", "[core]") {
  const auto dir = temp_dir("hash");
  std::ofstream(dir / "f.bin") << "hello";
  const auto h1 = file_hash_hex(dir / "f.bin");
  const auto h2 = file_hash_hex(dir / "f.bin");
  CHECK(h1 == h2);
  CHECK(!h1.empty());
  CHECK(file_hash_hex(dir / "absent.bin").empty());
}

TEST_CASE("png rgb and gray round-trip bit-exact", "[core]") {
  const auto dir = temp_dir("png");
  Rng rng(3);
  RgbU8 img(17, 23, 3);
  for (auto& v : img.v) v = static_cast<std::uint8_t>(rng.index(256));
  write_png(dir / "rgb.png", img);
  CHECK(read_png_rgb(dir / "rgb.png") == img);

  GrayU8 g(9, 5, 1);
  for (auto& v : g.v) v = static_cast<std::uint8_t>(rng.index(4));
  write_png(dir / "g.png", g);
  CHECK(read_png_gray(dir / "g.png") == g);
}

TEST_CASE("png reader rejects missing and corrupt files", "[core]") {
  const auto dir = temp_dir("pngbad");
  CHECK_THROWS_AS(read_png(dir / "absent.png"), DataError);
  std::ofstream(dir / "junk.png") << "not a png at all";
  CHECK_THROWS_AS(read_png(dir / "junk.png"), DataError);
}

TEST_CASE("npy files carry the numpy magic and raw data", "[core]") {
  const auto dir = temp_dir("npy");
  const std::vector<float> data = {1.5f, -2.0f, 0.0f, 4.25f, 5.0f, 6.0f};
  write_npy(dir / "a.npy", {2, 3}, data.data(), data.size());
  std::ifstream in(dir / "a.npy", std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
  REQUIRE(bytes.size() > 10 + data.size() * sizeof(float));
  CHECK(bytes[0] == '\x93');
  CHECK(std::string(bytes.begin() + 1, bytes.begin() + 6) == "NUMPY");
  const std::string header(bytes.begin() + 10, bytes.end() - static_cast<long>(data.size() * 4));
  CHECK(header.find("(2, 3)") != std::string::npos);
  CHECK(header.find("'<f4'") != std::string::npos);
  std::vector<float> tail(data.size());
  std::memcpy(tail.data(), bytes.data() + (bytes.size() - data.size() * 4), data.size() * 4);
  CHECK(tail == data);
}

TEST_CASE("base64 round-trips binary data of awkward lengths", "[core]") {
  Rng rng(77);
  for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{2}, std::size_t{3},
                        std::size_t{4}, std::size_t{31}}) {
    std::vector<std::uint8_t> data(n);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng.index(256));
    const auto enc = base64_encode(data.data(), data.size());
    CHECK(base64_decode(enc) == data);
  }
}

TEST_CASE("canonical json dump is stable and newline-terminated", "[core]") {
  Json a;
  a["zeta"] = 1;
  a["alpha"] = 2;
  Json b;
  b["zeta"] = 1;
  b["alpha"] = 2;
  const std::string d = canonical_dump(a);
  CHECK(d == canonical_dump(b));
  CHECK(d.back() == '\n');
  CHECK(json_hash_hex(a) == json_hash_hex(b));
  b["alpha"] = 3;
  CHECK(json_hash_hex(a) != json_hash_hex(b));
}

TEST_CASE("json load reports the offending file", "[core]") {
  const auto dir = temp_dir("json");
  std::ofstream(dir / "bad.json") << "{ nope";
  try {
    load_json(dir / "bad.json");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bad.json") != std::string::npos);
  }
  CHECK_THROWS_AS(load_json(dir / "absent.json"), DataError);
}

TEST_CASE("parallel_for covers every index exactly once", "[core]") {
  const int saved = job_count();
  for (int jobs : {1, 3}) {
    job_count() = jobs;
    std::vector<std::atomic<int>> hits(257);
    for (auto& h : hits) h = 0;
    parallel_for(257, [&](std::int64_t i) { ++hits[static_cast<std::size_t>(i)]; });
    for (const auto& h : hits) CHECK(h == 1);
  }
  job_count() = saved;
}

TEST_CASE("gif writer emits a plausible animation file", "[core]") {
  const auto dir = temp_dir("gif");
  RgbU8 f(8, 8, 3, 200);
  {
    GifWriter gif(dir / "a.gif", 8, 8, 5);
    gif.add_frame(f);
    for (auto& v : f.v) v = 10;
    gif.add_frame(f);
    gif.finish();
  }
  std::ifstream in(dir / "a.gif", std::ios::binary);
  std::string head(6, '\0');
  in.read(head.data(), 6);
  CHECK(head == "GIF89a");
  in.seekg(0, std::ios::end);
  CHECK(in.tellg() > 100);
}

TEST_CASE("raster accessors and equality behave", "[core]") {
  GrayU8 m(3, 4, 1, 7);
  CHECK(m.in_bounds(0, 0));
  CHECK(m.in_bounds(2, 3));
  CHECK_FALSE(m.in_bounds(3, 0));
  CHECK_FALSE(m.in_bounds(0, -1));
  m.at(1, 2) = 9;
  CHECK(m.at(1, 2) == 9);
  GrayU8 n = m;
  CHECK(m == n);
  n.at(0, 0) = 0;
  CHECK_FALSE(m == n);
}
