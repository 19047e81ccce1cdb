#pragma once

#include <string>

#include "objn/core/error.hpp"
#include "objn/core/jsonio.hpp"

namespace objn {

enum class NormKind { instance, batch, none };
enum class PadKind { zero, periodic };

inline const char* to_string(NormKind n) {
  switch (n) {
    case NormKind::instance: return "instance";
    case NormKind::batch: return "batch";
    case NormKind::none: return "none";
  }
  return "?";
}

inline NormKind norm_from_string(const std::string& s) {
  for (auto n : {NormKind::instance, NormKind::batch, NormKind::none})
    if (s == to_string(n)) return n;
  throw ConfigError("unknown norm kind: " + s);
}

inline const char* to_string(PadKind p) {
  return p == PadKind::zero ? "zero" : "periodic";
}

inline PadKind pad_from_string(const std::string& s) {
  for (auto p : {PadKind::zero, PadKind::periodic})
    if (s == to_string(p)) return p;
  throw ConfigError("unknown padding kind: " + s);
}

// Architecture of one R(2+1)U-Net. The temporal window is fully determined
// by the temporal conv count: each kernel-3 valid conv drops 2 frames, and
// the net collapses the window to a single output frame.
struct NetConfig {
  int levels = 4;
  int base_channels = 32;   // doubles per level
  int temporal_convs = 2;   // 2 -> window 5 (MBS), 3 -> window 7 (ASP)
  int in_channels = 3;
  int out_classes = 4;
  NormKind norm = NormKind::instance;
  PadKind padding = PadKind::zero;

  int temporal_window() const { return 2 * temporal_convs + 1; }
  int channels_at(int level) const { return base_channels << level; }
  int spatial_divisor() const { return 1 << (levels - 1); }

  // Number of temporal convs at a level: one per level shallowest-first,
  // with any excess stacked at the deepest level.
  int temporal_convs_at(int level) const {
    int n = level < temporal_convs ? 1 : 0;
    if (level == levels - 1 && temporal_convs > levels) n += temporal_convs - levels;
    return n;
  }

  void validate() const {
    if (levels < 1) throw ConfigError("net: levels must be >= 1");
    if (base_channels < 1) throw ConfigError("net: base_channels must be >= 1");
    if (temporal_convs < 1) throw ConfigError("net: temporal_convs must be >= 1");
    if (in_channels < 1 || out_classes < 2) throw ConfigError("net: bad channel counts");
  }
};

inline NetConfig mbs_net_config() {
  NetConfig c;
  c.temporal_convs = 2;
  c.in_channels = 3;
  c.out_classes = 4;
  return c;
}

inline NetConfig asp_net_config() {
  NetConfig c;
  c.temporal_convs = 3;
  c.in_channels = 5;
  c.out_classes = 3;
  return c;
}

inline Json net_config_to_json(const NetConfig& c) {
  Json j;
  j["levels"] = c.levels;
  j["base_channels"] = c.base_channels;
  j["temporal_convs"] = c.temporal_convs;
  j["temporal_window"] = c.temporal_window();
  j["in_channels"] = c.in_channels;
  j["out_classes"] = c.out_classes;
  j["norm"] = to_string(c.norm);
  j["padding"] = to_string(c.padding);
  return j;
}

inline NetConfig net_config_from_json(const Json& j) {
  NetConfig c;
  c.levels = json_get_or(j, "levels", c.levels);
  c.base_channels = json_get_or(j, "base_channels", c.base_channels);
  c.temporal_convs = json_get_or(j, "temporal_convs", c.temporal_convs);
  c.in_channels = json_get_or(j, "in_channels", c.in_channels);
  c.out_classes = json_get_or(j, "out_classes", c.out_classes);
  c.norm = norm_from_string(json_get_or<std::string>(j, "norm", to_string(c.norm)));
  c.padding = pad_from_string(json_get_or<std::string>(j, "padding", to_string(c.padding)));
  if (j.contains("temporal_window") &&
      json_get<int>(j, "temporal_window") != c.temporal_window())
    throw ConfigError("net: temporal_window must equal 2*temporal_convs + 1");
  c.validate();
  return c;
}

}  // namespace objn
