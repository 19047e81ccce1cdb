#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <string>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/png_io.hpp"
#include "objn/scenegen/render.hpp"

namespace objn {

struct IngestResult {
  FrameSequence frames;
  std::vector<std::string> names;  // source file names, frame order
};

// Loads an external directory of same-sized PNG frames (lexicographic order)
// for transfer inference. No ground truth is attached.
inline IngestResult ingest_external_frames(const fs::path& dir, int window) {
  if (!fs::is_directory(dir)) throw DataError("ingest: not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (static_cast<int>(files.size()) < window)
    throw DataError("ingest: " + std::to_string(files.size()) + " frames in " + dir.string() +
                    ", need at least the temporal window of " + std::to_string(window));
  IngestResult out;
  int h = -1, w = -1;
  std::string offenders;
  for (const auto& f : files) {
    RgbU8 img = read_png_rgb(f);
    if (h < 0) {
      h = img.h;
      w = img.w;
    } else if (img.h != h || img.w != w) {
      offenders += (offenders.empty() ? "" : ", ") + f.filename().string();
      continue;
    }
    GrayU8 lum(img.h, img.w, 1);
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        lum.at(y, x) = luma_of(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
    out.names.push_back(f.filename().string());
    out.frames.rgb.push_back(std::move(img));
    out.frames.luma.push_back(std::move(lum));
  }
  if (!offenders.empty())
    throw DataError("ingest: inconsistent frame sizes in " + dir.string() + ": " + offenders);
  return out;
}

}  // namespace objn
