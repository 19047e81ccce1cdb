#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/png_io.hpp"
#include "objn/core/raster.hpp"
#include "objn/core/rng.hpp"

namespace objn {

enum class ShapeSource { digit, blob, vase, tree, clothes, car, droplet };

inline const char* to_string(ShapeSource s) {
  switch (s) {
    case ShapeSource::digit: return "digit";
    case ShapeSource::blob: return "blob";
    case ShapeSource::vase: return "vase";
    case ShapeSource::tree: return "tree";
    case ShapeSource::clothes: return "clothes";
    case ShapeSource::car: return "car";
    case ShapeSource::droplet: return "droplet";
  }
  return "?";
}

inline ShapeSource shape_source_from_string(const std::string& s) {
  for (auto v : {ShapeSource::digit, ShapeSource::blob, ShapeSource::vase, ShapeSource::tree,
                 ShapeSource::clothes, ShapeSource::car, ShapeSource::droplet})
    if (s == to_string(v)) return v;
  if (s == "mnist_digit") return ShapeSource::digit;  // external digit-mask sets
  throw ConfigError("unknown shape source: " + s);
}

// A binary silhouette at its native resolution, scaled/rotated at scene time.
struct ShapeAsset {
  std::string id;
  Mask mask;  // values 0/1, at least one foreground pixel
  ShapeSource source = ShapeSource::blob;

  int fg_count() const {
    int n = 0;
    for (auto v : mask.v) n += v ? 1 : 0;
    return n;
  }
};

namespace shapegen {

constexpr int kNative = 64;

// 5x7 glyphs for '0'..'9'; each row is 5 bits, MSB = leftmost column.
inline const std::uint8_t* digit_glyph(int d) {
  static const std::uint8_t glyphs[10][7] = {
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
      {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
      {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
      {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
      {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
      {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
  };
  return glyphs[d];
}

inline void dilate_once(Mask& m) {
  Mask out(m.h, m.w, 1, 0);
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      bool on = false;
      for (int dy = -1; dy <= 1 && !on; ++dy)
        for (int dx = -1; dx <= 1 && !on; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (m.in_bounds(yy, xx) && m.at(yy, xx)) on = true;
        }
      out.at(y, x) = on ? 1 : 0;
    }
  m = out;
}

inline Mask make_digit(int d, Rng& rng) {
  Mask m(kNative, kNative, 1, 0);
  const std::uint8_t* g = digit_glyph(d);
  const double shear = rng.uniform(-0.25, 0.25);
  const double cell_w = 8.0, cell_h = 7.2;  // 5*8=40 x 7*7.2~50 glyph box
  const double x0 = (kNative - 5 * cell_w) / 2.0, y0 = (kNative - 7 * cell_h) / 2.0;
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 5; ++c) {
      if (!(g[r] & (0x10 >> c))) continue;
      const double sx = shear * (3 - r) * cell_h * 0.5;
      const int ax = static_cast<int>(std::floor(x0 + c * cell_w + sx));
      const int ay = static_cast<int>(std::floor(y0 + r * cell_h));
      for (int yy = ay; yy < ay + static_cast<int>(cell_h) + 1; ++yy)
        for (int xx = ax; xx < ax + static_cast<int>(cell_w) + 1; ++xx)
          if (m.in_bounds(yy, xx)) m.at(yy, xx) = 1;
    }
  const int extra = static_cast<int>(rng.uniform_int(0, 1));
  for (int i = 0; i < extra; ++i) dilate_once(m);
  return m;
}

inline Mask make_blob(Rng& rng) {
  Mask m(kNative, kNative, 1, 0);
  const double cx = kNative / 2.0, cy = kNative / 2.0;
  const double base_r = rng.uniform(18.0, 26.0);
  double amp[6], ph[6];
  for (int k = 2; k < 6; ++k) {
    amp[k] = rng.uniform(0.0, 0.25) / std::sqrt(static_cast<double>(k));
    ph[k] = rng.uniform(0.0, 2.0 * M_PI);
  }
  for (int y = 0; y < kNative; ++y)
    for (int x = 0; x < kNative; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double r = std::hypot(dx, dy);
      const double phi = std::atan2(dy, dx);
      double rmax = base_r;
      for (int k = 2; k < 6; ++k) rmax += base_r * amp[k] * std::cos(k * phi + ph[k]);
      if (r <= rmax) m.at(y, x) = 1;
    }
  return m;
}

inline Mask make_vase(Rng& rng) {
  Mask m(kNative, kNative, 1, 0);
  const double cx = kNative / 2.0;
  const double lip = rng.uniform(8.0, 14.0);
  const double belly = rng.uniform(16.0, 26.0);
  const double neck = rng.uniform(4.0, 9.0);
  const double foot = rng.uniform(7.0, 13.0);
  const double neck_y = rng.uniform(0.2, 0.35), belly_y = rng.uniform(0.5, 0.7);
  for (int y = 4; y < kNative - 4; ++y) {
    const double t = (y - 4.0) / (kNative - 9.0);
    double r;
    if (t < neck_y) {
      const double u = t / neck_y;
      r = lip + (neck - lip) * (0.5 - 0.5 * std::cos(M_PI * u));
    } else if (t < belly_y) {
      const double u = (t - neck_y) / (belly_y - neck_y);
      r = neck + (belly - neck) * std::sin(0.5 * M_PI * u);
    } else {
      const double u = (t - belly_y) / (1.0 - belly_y);
      r = belly + (foot - belly) * (0.5 - 0.5 * std::cos(M_PI * u));
    }
    for (int x = 0; x < kNative; ++x)
      if (std::abs(x - cx) <= r) m.at(y, x) = 1;
  }
  return m;
}

inline void fill_ellipse(Mask& m, double cx, double cy, double rx, double ry) {
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      const double u = (x - cx) / rx, v = (y - cy) / ry;
      if (u * u + v * v <= 1.0) m.at(y, x) = 1;
    }
}

inline Mask make_tree(Rng& rng) {
  Mask m(kNative, kNative, 1, 0);
  const double cx = kNative / 2.0;
  const double trunk_w = rng.uniform(3.0, 6.0);
  const int trunk_top = static_cast<int>(rng.uniform(26, 36));
  for (int y = trunk_top; y < kNative - 4; ++y)
    for (int x = 0; x < kNative; ++x)
      if (std::abs(x - cx) <= trunk_w) m.at(y, x) = 1;
  const int blobs = static_cast<int>(rng.uniform_int(3, 5));
  for (int i = 0; i < blobs; ++i) {
    const double bx = cx + rng.uniform(-12.0, 12.0);
    const double by = rng.uniform(12.0, static_cast<double>(trunk_top));
    fill_ellipse(m, bx, by, rng.uniform(8.0, 15.0), rng.uniform(7.0, 12.0));
  }
  return m;
}

inline Mask make_clothes(Rng& rng) {
  // T-shirt: body rectangle, two sloped sleeves, a neck notch.
  Mask m(kNative, kNative, 1, 0);
  const double cx = kNative / 2.0;
  const double body_w = rng.uniform(12.0, 17.0);
  const int top = 14, bottom = kNative - 8;
  for (int y = top; y < bottom; ++y)
    for (int x = 0; x < kNative; ++x)
      if (std::abs(x - cx) <= body_w) m.at(y, x) = 1;
  const double sleeve_len = rng.uniform(9.0, 14.0), sleeve_h = rng.uniform(8.0, 12.0);
  const double slope = rng.uniform(0.2, 0.6);
  for (int y = top; y < top + static_cast<int>(sleeve_h); ++y)
    for (int x = 0; x < kNative; ++x) {
      const double dy = y - top;
      const double lo = body_w, hi = body_w + sleeve_len - slope * dy;
      const double d = std::abs(x - cx);
      if (d >= lo && d <= hi) m.at(y, x) = 1;
    }
  const double neck_r = rng.uniform(3.0, 6.0);
  for (int y = 0; y < kNative; ++y)
    for (int x = 0; x < kNative; ++x) {
      const double u = x - cx, v = y - top;
      if (u * u + v * v <= neck_r * neck_r) m.at(y, x) = 0;
    }
  return m;
}

inline Mask make_car(Rng& rng) {
  Mask m(kNative, kNative, 1, 0);
  const double body_h = rng.uniform(9.0, 13.0);
  const int ground = 48;
  const double body_top = ground - body_h;
  const double left = rng.uniform(6.0, 10.0), right = kNative - rng.uniform(6.0, 10.0);
  for (int y = static_cast<int>(body_top); y < ground; ++y)
    for (int x = static_cast<int>(left); x <= static_cast<int>(right); ++x) m.at(y, x) = 1;
  // cabin trapezoid
  const double cab_h = rng.uniform(8.0, 12.0);
  const double cab_l = left + rng.uniform(8.0, 14.0), cab_r = right - rng.uniform(10.0, 16.0);
  for (int y = static_cast<int>(body_top - cab_h); y < static_cast<int>(body_top); ++y) {
    const double u = (body_top - y) / cab_h;  // 0 at body, 1 at roof
    const double shrink = u * rng.uniform(0.0, 0.1) * (cab_r - cab_l) + u * 4.0;
    for (int x = static_cast<int>(cab_l + shrink); x <= static_cast<int>(cab_r - shrink); ++x)
      if (m.in_bounds(y, x)) m.at(y, x) = 1;
  }
  const double wheel_r = rng.uniform(5.0, 7.5);
  fill_ellipse(m, left + 10.0, ground, wheel_r, wheel_r);
  fill_ellipse(m, right - 10.0, ground, wheel_r, wheel_r);
  return m;
}

inline Mask make_droplet(Rng& rng) {
  Mask m(kNative, kNative, 1, 0);
  const double cx = kNative / 2.0, cy = 38.0;
  const double r = rng.uniform(12.0, 17.0);
  const double tip_y = cy - r - rng.uniform(10.0, 18.0);
  fill_ellipse(m, cx, cy, r, r);
  for (int y = static_cast<int>(tip_y); y < static_cast<int>(cy); ++y) {
    const double u = (y - tip_y) / (cy - tip_y);
    const double half = r * u;
    for (int x = 0; x < kNative; ++x)
      if (std::abs(x - cx) <= half) m.at(y, x) = 1;
  }
  return m;
}

}  // namespace shapegen

// A pool of silhouettes. The built-in pool is procedural and deterministic;
// a directory of binary-mask PNGs (one subdirectory per source family) can
// replace it.
struct ShapeLibrary {
  std::vector<ShapeAsset> shapes;

  static ShapeLibrary builtin(std::uint64_t seed = 0x5EED5) {
    ShapeLibrary lib;
    auto add = [&](ShapeSource src, int variant, Mask m) {
      ShapeAsset a;
      a.id = std::string(to_string(src)) + "_" + std::to_string(variant);
      a.mask = std::move(m);
      a.source = src;
      lib.shapes.push_back(std::move(a));
    };
    for (int d = 0; d < 10; ++d)
      for (int v = 0; v < 3; ++v) {
        Rng r(derive_seed(seed, {0, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(v)}));
        add(ShapeSource::digit, d * 3 + v, shapegen::make_digit(d, r));
      }
    const int per_family = 8;
    struct Family {
      ShapeSource src;
      Mask (*make)(Rng&);
    };
    const Family fams[] = {
        {ShapeSource::blob, shapegen::make_blob},       {ShapeSource::vase, shapegen::make_vase},
        {ShapeSource::tree, shapegen::make_tree},       {ShapeSource::clothes, shapegen::make_clothes},
        {ShapeSource::car, shapegen::make_car},         {ShapeSource::droplet, shapegen::make_droplet},
    };
    for (std::size_t f = 0; f < std::size(fams); ++f)
      for (int v = 0; v < per_family; ++v) {
        Rng r(derive_seed(seed, {1 + f, static_cast<std::uint64_t>(v)}));
        add(fams[f].src, v, fams[f].make(r));
      }
    return lib;
  }

  // Directory layout: <root>/<family>/*.png where family is one of the
  // ShapeSource names; any gray pixel > 127 counts as foreground.
  static ShapeLibrary load_dir(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw ConfigError("shape library not found: " + root.string());
    ShapeLibrary lib;
    std::vector<fs::path> fams;
    for (const auto& e : fs::directory_iterator(root))
      if (e.is_directory()) fams.push_back(e.path());
    std::sort(fams.begin(), fams.end());
    for (const auto& fam : fams) {
      const ShapeSource src = shape_source_from_string(fam.filename().string());
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(fam))
        if (e.path().extension() == ".png") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        auto img = read_png(f);
        ShapeAsset a;
        a.id = fam.filename().string() + "/" + f.stem().string();
        a.source = src;
        a.mask = Mask(img.h, img.w, 1, 0);
        for (int y = 0; y < img.h; ++y)
          for (int x = 0; x < img.w; ++x)
            a.mask.at(y, x) = img.at(y, x, 0) > 127 ? 1 : 0;
        if (a.fg_count() == 0) throw DataError("shape mask has no foreground: " + f.string());
        lib.shapes.push_back(std::move(a));
      }
    }
    if (lib.shapes.empty()) throw ConfigError("shape library is empty: " + root.string());
    return lib;
  }
};

}  // namespace objn
