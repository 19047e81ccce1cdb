#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/raster.hpp"
#include "objn/eval/metrics.hpp"

namespace objn {

// Figure colors: boundary classes 1/2/3 are blue/red/green, surface classes
// 1/2 are blue/red; class 0 stays untinted.
struct OverlayColor {
  std::uint8_t r = 0, g = 0, b = 0;
};
inline const std::vector<OverlayColor> kMbsOverlay = {{0, 64, 255}, {255, 32, 32}, {32, 224, 32}};
inline const std::vector<OverlayColor> kAspOverlay = {{0, 64, 255}, {255, 32, 32}};

// Alpha-blend class colors onto a frame. colors[c-1] paints class c; class 0
// pixels pass through, so an all-zero map returns the frame unchanged.
inline RgbU8 overlay_labels(const RgbU8& frame, const Mask& labels,
                            const std::vector<OverlayColor>& colors, double alpha = 0.5) {
  if (frame.h != labels.h || frame.w != labels.w)
    throw DataError("overlay: frame and label sizes differ");
  RgbU8 out = frame;
  for (std::size_t i = 0; i < labels.v.size(); ++i) {
    const int c = labels.v[i];
    if (c == 0) continue;
    if (static_cast<std::size_t>(c) > colors.size())
      throw DataError("overlay: class " + std::to_string(c) + " has no color assigned");
    const OverlayColor& oc = colors[static_cast<std::size_t>(c - 1)];
    const std::uint8_t tint[3] = {oc.r, oc.g, oc.b};
    for (int ch = 0; ch < 3; ++ch) {
      const double v = (1.0 - alpha) * frame.v[3 * i + ch] + alpha * tint[ch];
      out.v[3 * i + ch] = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return out;
}

// Solid class-color map on black, for prediction/ground-truth tiles.
inline RgbU8 class_map_rgb(const Mask& labels, const std::vector<OverlayColor>& colors) {
  RgbU8 out(labels.h, labels.w, 3);
  for (std::size_t i = 0; i < labels.v.size(); ++i) {
    const int c = labels.v[i];
    if (c == 0) continue;
    if (static_cast<std::size_t>(c) > colors.size())
      throw DataError("class map: class " + std::to_string(c) + " has no color assigned");
    const OverlayColor& oc = colors[static_cast<std::size_t>(c - 1)];
    out.v[3 * i] = oc.r;
    out.v[3 * i + 1] = oc.g;
    out.v[3 * i + 2] = oc.b;
  }
  return out;
}

inline RgbU8 gray_to_rgb_image(const GrayU8& g) {
  RgbU8 out(g.h, g.w, 3);
  for (std::size_t i = 0; i < g.v.size(); ++i)
    out.v[3 * i] = out.v[3 * i + 1] = out.v[3 * i + 2] = g.v[i];
  return out;
}

inline RgbU8 heat_to_rgb_image(const GrayF& h) {
  RgbU8 out(h.h, h.w, 3);
  for (std::size_t i = 0; i < h.v.size(); ++i) {
    const double v = std::clamp(h.v[i], 0.0f, 1.0f);
    const auto b = static_cast<std::uint8_t>(std::lround(255.0 * v));
    out.v[3 * i] = out.v[3 * i + 1] = out.v[3 * i + 2] = b;
  }
  return out;
}

// Horizontal strip of equally sized tiles with a 2 px white gutter.
inline RgbU8 hstack_tiles(const std::vector<RgbU8>& tiles, int gutter = 2) {
  if (tiles.empty()) throw DataError("hstack: no tiles");
  const int h = tiles[0].h, w = tiles[0].w;
  for (const RgbU8& t : tiles)
    if (t.h != h || t.w != w) throw DataError("hstack: tile sizes differ");
  const int n = static_cast<int>(tiles.size());
  RgbU8 out(h, n * w + (n - 1) * gutter, 3);
  std::fill(out.v.begin(), out.v.end(), std::uint8_t(255));
  for (int i = 0; i < n; ++i) {
    const int x0 = i * (w + gutter);
    for (int y = 0; y < h; ++y)
      std::copy(tiles[static_cast<std::size_t>(i)].v.begin() + static_cast<std::size_t>(y) * w * 3,
                tiles[static_cast<std::size_t>(i)].v.begin() +
                    static_cast<std::size_t>(y + 1) * w * 3,
                out.v.begin() + (static_cast<std::size_t>(y) * out.w + x0) * 3);
  }
  return out;
}

// Vertical stack of equally wide tiles with a 2 px white gutter.
inline RgbU8 vstack_tiles(const std::vector<RgbU8>& tiles, int gutter = 2) {
  if (tiles.empty()) throw DataError("vstack: no tiles");
  const int w = tiles[0].w;
  int total_h = 0;
  for (const RgbU8& t : tiles) {
    if (t.w != w) throw DataError("vstack: tile widths differ");
    total_h += t.h;
  }
  const int n = static_cast<int>(tiles.size());
  RgbU8 out(total_h + (n - 1) * gutter, w, 3);
  std::fill(out.v.begin(), out.v.end(), std::uint8_t(255));
  int y0 = 0;
  for (const RgbU8& t : tiles) {
    std::copy(t.v.begin(), t.v.end(), out.v.begin() + static_cast<std::size_t>(y0) * w * 3);
    y0 += t.h + gutter;
  }
  return out;
}

// Composite of the three surface-net cue channels: attention in red, luma in
// green, total boundary evidence in blue.
inline RgbU8 asp_input_composite(const GrayF& att, const GrayU8& luma, const GrayF& mbs_any) {
  if (att.h != luma.h || att.w != luma.w || mbs_any.h != luma.h || mbs_any.w != luma.w)
    throw DataError("asp input composite: size mismatch");
  RgbU8 out(luma.h, luma.w, 3);
  for (std::size_t i = 0; i < luma.v.size(); ++i) {
    out.v[3 * i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(att.v[i], 0.0f, 1.0f)));
    out.v[3 * i + 1] = luma.v[i];
    out.v[3 * i + 2] =
        static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(mbs_any.v[i], 0.0f, 1.0f)));
  }
  return out;
}

// One row of the side-by-side diagnostic layout, in the documented column
// order: input, attention, luma, boundary prediction, boundary truth,
// surface-net input composite, surface truth, surface prediction, and the
// prediction blended back onto the input.
struct GridRowInput {
  const RgbU8* frame = nullptr;
  const GrayF* attention = nullptr;
  const GrayU8* luma = nullptr;
  const Mask* mbs_pred = nullptr;
  const Mask* mbs_gt = nullptr;
  const GrayF* mbs_any = nullptr;  // summed boundary probability for the composite
  const Mask* asp_gt = nullptr;
  const Mask* asp_pred = nullptr;
};

inline RgbU8 render_grid_row(const GridRowInput& in, double alpha = 0.5) {
  if (!in.frame || !in.attention || !in.luma || !in.mbs_pred || !in.mbs_gt || !in.mbs_any ||
      !in.asp_gt || !in.asp_pred)
    throw DataError("grid row: missing a column input");
  std::vector<RgbU8> tiles;
  tiles.push_back(*in.frame);
  tiles.push_back(heat_to_rgb_image(*in.attention));
  tiles.push_back(gray_to_rgb_image(*in.luma));
  tiles.push_back(class_map_rgb(*in.mbs_pred, kMbsOverlay));
  tiles.push_back(class_map_rgb(*in.mbs_gt, kMbsOverlay));
  tiles.push_back(asp_input_composite(*in.attention, *in.luma, *in.mbs_any));
  tiles.push_back(class_map_rgb(*in.asp_gt, kAspOverlay));
  tiles.push_back(class_map_rgb(*in.asp_pred, kAspOverlay));
  tiles.push_back(overlay_labels(*in.frame, *in.asp_pred, kAspOverlay, alpha));
  return hstack_tiles(tiles);
}

// Grayscale heatmap of a row-normalized confusion matrix; cell brightness is
// the normalized rate, cells are 32 px with 1 px grid lines.
inline RgbU8 matrix_heatmap(const ConfusionMatrix& cm, int cell = 32) {
  const std::vector<double> n = cm.normalized();
  const int side = cm.k * cell + (cm.k + 1);
  RgbU8 out(side, side, 3);
  std::fill(out.v.begin(), out.v.end(), std::uint8_t(64));
  for (int g = 0; g < cm.k; ++g)
    for (int p = 0; p < cm.k; ++p) {
      const double v = n[static_cast<std::size_t>(g) * cm.k + p];
      const auto b = static_cast<std::uint8_t>(std::lround(255.0 * v));
      const int y0 = 1 + g * (cell + 1), x0 = 1 + p * (cell + 1);
      for (int y = y0; y < y0 + cell; ++y)
        for (int x = x0; x < x0 + cell; ++x) {
          const std::size_t i = (static_cast<std::size_t>(y) * side + x) * 3;
          out.v[i] = b;
          out.v[i + 1] = b;
          out.v[i + 2] = g == p ? b : static_cast<std::uint8_t>(b / 2);
        }
    }
  return out;
}

}  // namespace objn
