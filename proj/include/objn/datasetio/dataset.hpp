#pragma once

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/jsonio.hpp"
#include "objn/core/parallel.hpp"
#include "objn/core/version.hpp"
#include "objn/datasetio/scene_record.hpp"
#include "objn/scenegen/scene.hpp"
#include "objn/scenegen/shape.hpp"

namespace objn {

enum class Split { train, val, test };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

inline Split split_from_string(const std::string& s) {
  for (auto v : {Split::train, Split::val, Split::test})
    if (s == to_string(v)) return v;
  throw ConfigError("unknown split: " + s);
}

struct SceneEntry {
  std::string id;
  std::uint64_t seed = 0;
  std::string hash;  // FNV-1a of canonical spec.json
};

struct DatasetManifest {
  fs::path root;
  std::uint64_t global_seed = 0;
  std::string generator_version;
  std::vector<SceneEntry> scenes[3];  // indexed by Split

  const std::vector<SceneEntry>& split(Split s) const {
    return scenes[static_cast<int>(s)];
  }
  fs::path scene_dir(Split s, const SceneEntry& e) const {
    return root / to_string(s) / e.id;
  }
};

struct BuildConfig {
  int train_count = 15000, val_count = 1000, test_count = 200;
  GenConfig gen;
};

inline BuildConfig build_config_from_json(const Json& j) {
  BuildConfig c;
  c.train_count = json_get_or(j, "train_count", c.train_count);
  c.val_count = json_get_or(j, "val_count", c.val_count);
  c.test_count = json_get_or(j, "test_count", c.test_count);
  if (c.train_count < 0 || c.val_count < 0 || c.test_count < 0)
    throw ConfigError("split counts must be non-negative");
  c.gen = gen_config_from_json(json_get_or(j, "gen", Json::object()));
  return c;
}

inline Json build_config_to_json(const BuildConfig& c) {
  Json j;
  j["train_count"] = c.train_count;
  j["val_count"] = c.val_count;
  j["test_count"] = c.test_count;
  j["gen"] = gen_config_to_json(c.gen);
  return j;
}

inline std::string scene_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%05d", index);
  return buf;
}

inline Json manifest_to_json(const DatasetManifest& m, const BuildConfig& cfg) {
  Json j;
  j["format_version"] = kManifestFormatVersion;
  j["generator_version"] = m.generator_version;
  j["global_seed"] = m.global_seed;
  j["config"] = build_config_to_json(cfg);
  for (auto s : {Split::train, Split::val, Split::test}) {
    Json arr = Json::array();
    for (const auto& e : m.split(s)) {
      Json je;
      je["id"] = e.id;
      je["seed"] = e.seed;
      je["hash"] = e.hash;
      arr.push_back(std::move(je));
    }
    Json sj;
    sj["count"] = m.split(s).size();
    sj["scenes"] = std::move(arr);
    j[to_string(s)] = std::move(sj);
  }
  return j;
}

// Generates every scene of every split under root and writes manifest.json.
// Scene seeds are derived from (global seed, split, index), and build fails
// loudly in the astronomically unlikely event of a cross-split collision.
inline DatasetManifest build_dataset(const fs::path& root, const BuildConfig& cfg,
                                     std::uint64_t seed, const ShapeLibrary& lib) {
  DatasetManifest m;
  m.root = root;
  m.global_seed = seed;
  m.generator_version = kGeneratorVersion;
  const int counts[3] = {cfg.train_count, cfg.val_count, cfg.test_count};
  std::set<std::uint64_t> all_seeds;
  for (auto s : {Split::train, Split::val, Split::test}) {
    const int si = static_cast<int>(s);
    for (int i = 0; i < counts[si]; ++i) {
      SceneEntry e;
      e.id = scene_id(i);
      e.seed = derive_seed(seed, {static_cast<std::uint64_t>(si), static_cast<std::uint64_t>(i)});
      if (!all_seeds.insert(e.seed).second)
        throw RuntimeError("build_dataset: derived seed collision across splits");
      m.scenes[si].push_back(std::move(e));
    }
  }
  for (auto s : {Split::train, Split::val, Split::test}) {
    const int si = static_cast<int>(s);
    auto& entries = m.scenes[si];
    parallel_for(entries.size(), [&](std::size_t i) {
      SceneEntry& e = entries[i];
      try {
        const SceneSpec spec = sample_scene(e.seed, cfg.gen, lib);
        e.hash = scene_hash(spec);
        write_scene(m.scene_dir(s, e), materialize_scene(spec));
      } catch (const std::exception& ex) {
        throw DataError("build_dataset: scene " + std::string(to_string(s)) + "/" + e.id + ": " +
                        ex.what());
      }
    });
  }
  save_json(root / "manifest.json", manifest_to_json(m, cfg));
  return m;
}

inline DatasetManifest load_manifest(const fs::path& root) {
  const Json j = load_json(root / "manifest.json");
  if (json_get_or<int>(j, "format_version", -1) != kManifestFormatVersion)
    throw DataError("manifest: unsupported format_version");
  DatasetManifest m;
  m.root = root;
  m.global_seed = json_get<std::uint64_t>(j, "global_seed");
  m.generator_version = json_get<std::string>(j, "generator_version");
  for (auto s : {Split::train, Split::val, Split::test}) {
    const Json& sj = j.at(to_string(s));
    for (const auto& je : sj.at("scenes")) {
      SceneEntry e;
      e.id = json_get<std::string>(je, "id");
      e.seed = json_get<std::uint64_t>(je, "seed");
      e.hash = json_get<std::string>(je, "hash");
      m.scenes[static_cast<int>(s)].push_back(std::move(e));
    }
    if (m.split(s).size() != sj.at("count").get<std::size_t>())
      throw DataError("manifest: count disagrees with scene list for split " +
                      std::string(to_string(s)));
  }
  return m;
}

}  // namespace objn
