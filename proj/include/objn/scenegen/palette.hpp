#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/raster.hpp"
#include "objn/core/rng.hpp"

namespace objn {

constexpr int kPaletteCount = 6;
constexpr int kPaletteSize = 256;

inline const char* palette_name(int id) {
  static const char* names[kPaletteCount] = {"random_dot", "color_splash", "stripes",
                                             "checker",    "noise",        "bricks"};
  if (id < 0 || id >= kPaletteCount) throw ConfigError("palette_id out of range");
  return names[id];
}

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

namespace detail {

inline Rgb hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0) / 60.0;
  const int i = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
  double r, g, b;
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  auto u8 = [](double x) { return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0)); };
  return {u8(r), u8(g), u8(b)};
}

inline void rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8, double& h, double& s,
                       double& v) {
  const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  v = mx;
  const double d = mx - mn;
  s = mx <= 0 ? 0 : d / mx;
  if (d <= 0) {
    h = 0;
  } else if (mx == r) {
    h = 60.0 * std::fmod((g - b) / d, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / d + 2.0);
  } else {
    h = 60.0 * ((r - g) / d + 4.0);
  }
  if (h < 0) h += 360.0;
}

inline Rgb random_saturated(Rng& rng) {
  return hsv_to_rgb(rng.uniform(0, 360), rng.uniform(0.7, 1.0), rng.uniform(0.6, 1.0));
}

}  // namespace detail

// Deterministic palette imagery; textures sample these with wrap-around.
inline RgbU8 make_palette(int id, std::uint64_t palette_seed) {
  const int n = kPaletteSize;
  RgbU8 img(n, n, 3);
  Rng rng(derive_seed(palette_seed, {static_cast<std::uint64_t>(id)}));
  auto put = [&](int y, int x, Rgb c) {
    img.at(y, x, 0) = c.r;
    img.at(y, x, 1) = c.g;
    img.at(y, x, 2) = c.b;
  };
  switch (id) {
    case 0: {  // random_dot: two-tone per-pixel noise
      const Rgb dark{20, 20, 20}, light{235, 235, 235};
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) put(y, x, rng.bernoulli(0.5) ? light : dark);
      break;
    }
    case 1: {  // color_splash: smooth color field plus soft disks
      const int g = 8;
      std::vector<Rgb> grid(static_cast<std::size_t>(g) * g);
      for (auto& c : grid) c = detail::random_saturated(rng);
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const double gy = y * g / static_cast<double>(n), gx = x * g / static_cast<double>(n);
          const int y0 = static_cast<int>(gy), x0 = static_cast<int>(gx);
          const double fy = gy - y0, fx = gx - x0;
          auto at = [&](int yy, int xx) { return grid[static_cast<std::size_t>(yy % g) * g + (xx % g)]; };
          auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
          const Rgb c00 = at(y0, x0), c01 = at(y0, x0 + 1), c10 = at(y0 + 1, x0), c11 = at(y0 + 1, x0 + 1);
          Rgb c;
          c.r = static_cast<std::uint8_t>(std::lround(lerp(lerp(c00.r, c01.r, fx), lerp(c10.r, c11.r, fx), fy)));
          c.g = static_cast<std::uint8_t>(std::lround(lerp(lerp(c00.g, c01.g, fx), lerp(c10.g, c11.g, fx), fy)));
          c.b = static_cast<std::uint8_t>(std::lround(lerp(lerp(c00.b, c01.b, fx), lerp(c10.b, c11.b, fx), fy)));
          put(y, x, c);
        }
      for (int splash = 0; splash < 24; ++splash) {
        const double cx = rng.uniform(0, n), cy = rng.uniform(0, n), r = rng.uniform(8, 30);
        const Rgb c = detail::random_saturated(rng);
        for (int y = 0; y < n; ++y)
          for (int x = 0; x < n; ++x) {
            double dx = std::abs(x - cx), dy = std::abs(y - cy);
            dx = std::min(dx, n - dx);  // wrap so the palette tiles
            dy = std::min(dy, n - dy);
            const double d = std::hypot(dx, dy);
            if (d < r) {
              const double a = 1.0 - d / r;
              img.at(y, x, 0) = static_cast<std::uint8_t>(std::lround(img.at(y, x, 0) * (1 - a) + c.r * a));
              img.at(y, x, 1) = static_cast<std::uint8_t>(std::lround(img.at(y, x, 1) * (1 - a) + c.g * a));
              img.at(y, x, 2) = static_cast<std::uint8_t>(std::lround(img.at(y, x, 2) * (1 - a) + c.b * a));
            }
          }
      }
      break;
    }
    case 2: {  // stripes
      const double theta = rng.uniform(0, M_PI);
      const double period = rng.uniform(10, 28);
      const int ncol = static_cast<int>(rng.uniform_int(2, 3));
      Rgb cols[3];
      for (int i = 0; i < ncol; ++i) cols[i] = detail::random_saturated(rng);
      const double cth = std::cos(theta), sth = std::sin(theta);
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const double s = x * cth + y * sth;
          int band = static_cast<int>(std::floor(s / period));
          band = ((band % ncol) + ncol) % ncol;
          put(y, x, cols[band]);
        }
      break;
    }
    case 3: {  // checker
      const int cell = static_cast<int>(rng.uniform_int(8, 28));
      const Rgb a = detail::random_saturated(rng), b = detail::random_saturated(rng);
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) put(y, x, ((x / cell + y / cell) % 2) ? a : b);
      break;
    }
    case 4: {  // noise: two-octave value noise through a 3-stop gradient
      const Rgb stops[3] = {detail::random_saturated(rng), detail::random_saturated(rng),
                            detail::random_saturated(rng)};
      auto octave = [&](int g) {
        std::vector<double> grid(static_cast<std::size_t>(g) * g);
        for (auto& v : grid) v = rng.uniform();
        return grid;
      };
      const int g1 = 8, g2 = 32;
      const auto o1 = octave(g1), o2 = octave(g2);
      auto sample = [&](const std::vector<double>& grid, int g, double y, double x) {
        const double gy = y * g / n, gx = x * g / n;
        const int y0 = static_cast<int>(gy), x0 = static_cast<int>(gx);
        const double fy = gy - y0, fx = gx - x0;
        auto at = [&](int yy, int xx) { return grid[static_cast<std::size_t>(yy % g) * g + (xx % g)]; };
        const double a = at(y0, x0) * (1 - fx) + at(y0, x0 + 1) * fx;
        const double b = at(y0 + 1, x0) * (1 - fx) + at(y0 + 1, x0 + 1) * fx;
        return a * (1 - fy) + b * fy;
      };
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          double v = 0.65 * sample(o1, g1, y, x) + 0.35 * sample(o2, g2, y, x);
          v = std::clamp(v, 0.0, 1.0) * 2.0;
          const Rgb c0 = v < 1.0 ? stops[0] : stops[1];
          const Rgb c1 = v < 1.0 ? stops[1] : stops[2];
          const double t = v < 1.0 ? v : v - 1.0;
          Rgb c;
          c.r = static_cast<std::uint8_t>(std::lround(c0.r + (c1.r - c0.r) * t));
          c.g = static_cast<std::uint8_t>(std::lround(c0.g + (c1.g - c0.g) * t));
          c.b = static_cast<std::uint8_t>(std::lround(c0.b + (c1.b - c0.b) * t));
          put(y, x, c);
        }
      break;
    }
    case 5: {  // bricks
      const int bw = 32, bh = 16, mortar = 2;
      const Rgb mortar_c{190, 185, 175};
      const Rgb base = detail::random_saturated(rng);
      for (int by = 0; by * bh < n; ++by) {
        const int xoff = (by % 2) * (bw / 2);
        for (int bx = -1; bx * bw < n; ++bx) {
          Rgb c = base;
          const double jitter = rng.uniform(-0.18, 0.18);
          auto j = [&](std::uint8_t v) {
            return static_cast<std::uint8_t>(std::clamp(std::lround(v * (1.0 + jitter)), 0l, 255l));
          };
          c = {j(base.r), j(base.g), j(base.b)};
          for (int y = by * bh; y < (by + 1) * bh && y < n; ++y)
            for (int x = bx * bw + xoff; x < (bx + 1) * bw + xoff; ++x) {
              if (x < 0 || x >= n) continue;
              const bool is_mortar = (y % bh) < mortar || ((x - xoff) % bw + bw) % bw < mortar;
              put(y, x, is_mortar ? mortar_c : c);
            }
        }
      }
      break;
    }
    default:
      throw ConfigError("palette_id out of range");
  }
  return img;
}

inline RgbU8 hue_shift_image(const RgbU8& img, double degrees) {
  RgbU8 out(img.h, img.w, 3);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      double h, s, v;
      detail::rgb_to_hsv(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2), h, s, v);
      const Rgb c = detail::hsv_to_rgb(h + degrees, s, v);
      out.at(y, x, 0) = c.r;
      out.at(y, x, 1) = c.g;
      out.at(y, x, 2) = c.b;
    }
  return out;
}

// How a surface is painted: which palette, where sampling starts, hue shift.
struct TextureSpec {
  int palette_id = 0;
  double u0 = 0, v0 = 0;      // sample origin inside the palette image
  double hue_deg = 0;         // [0, 360)
  bool operator==(const TextureSpec&) const = default;
};

// Bilinear sample with wrap-around; integer coordinates return exact texels.
inline Rgb sample_bilinear_wrap(const RgbU8& img, double x, double y) {
  const int n = img.w, m = img.h;
  const double fx = x - std::floor(x), fy = y - std::floor(y);
  const int x0 = static_cast<int>(std::floor(x)) % n, y0 = static_cast<int>(std::floor(y)) % m;
  const int xw = ((x0 % n) + n) % n, yw = ((y0 % m) + m) % m;
  const int x1 = (xw + 1) % n, y1 = (yw + 1) % m;
  Rgb out;
  for (int c = 0; c < 3; ++c) {
    const double v00 = img.at(yw, xw, c), v01 = img.at(yw, x1, c);
    const double v10 = img.at(y1, xw, c), v11 = img.at(y1, x1, c);
    const double v = (v00 * (1 - fx) + v01 * fx) * (1 - fy) + (v10 * (1 - fx) + v11 * fx) * fy;
    const auto u8 = static_cast<std::uint8_t>(std::lround(v));
    if (c == 0) out.r = u8;
    else if (c == 1) out.g = u8;
    else out.b = u8;
  }
  return out;
}

// Palette images are pure functions of (id, seed); rendering caches the
// hue-shifted variants per texture.
class PaletteCache {
 public:
  explicit PaletteCache(std::uint64_t palette_seed) : seed_(palette_seed) {}

  const RgbU8& base(int id) {
    auto& slot = base_[static_cast<std::size_t>(id)];
    if (slot.h == 0) slot = make_palette(id, seed_);
    return slot;
  }

  const RgbU8& shifted(const TextureSpec& t) {
    const std::uint64_t key =
        derive_seed(static_cast<std::uint64_t>(t.palette_id),
                    {static_cast<std::uint64_t>(std::llround(t.hue_deg * 1e6))});
    auto it = shifted_.find(key);
    if (it != shifted_.end()) return it->second;
    auto img = hue_shift_image(base(t.palette_id), t.hue_deg);
    return shifted_.emplace(key, std::move(img)).first->second;
  }

 private:
  std::uint64_t seed_;
  std::array<RgbU8, kPaletteCount> base_{};
  std::unordered_map<std::uint64_t, RgbU8> shifted_;
};

}  // namespace objn
