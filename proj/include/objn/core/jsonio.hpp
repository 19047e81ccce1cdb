#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/hash.hpp"

namespace objn {

// ordered_json keeps insertion order, which makes serialized files canonical:
// the same struct always produces the same bytes.
using Json = nlohmann::ordered_json;

inline std::string canonical_dump(const Json& j) { return j.dump(2) + "\n"; }

inline void save_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("save_json: cannot open " + path.string());
  const std::string s = canonical_dump(j);
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!f) throw DataError("save_json: write failed for " + path.string());
}

inline Json load_json(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_json: cannot open " + path.string());
  try {
    return Json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("load_json: parse error in " + path.string() + ": " + e.what());
  }
}

inline std::string json_hash_hex(const Json& j) {
  const std::string s = canonical_dump(j);
  Fnv1a h;
  h.update(s.data(), s.size());
  return h.hex();
}

// Fetch with a clear error instead of nlohmann's generic one.
template <class T>
T json_get(const Json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("missing config key: " + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value type for config key: " + key);
  }
}

template <class T>
T json_get_or(const Json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return json_get<T>(j, key);
}

inline std::string base64_encode(const std::uint8_t* data, std::size_t n) {
  static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (std::size_t i = 0; i < n; i += 3) {
    std::uint32_t v = data[i] << 16;
    if (i + 1 < n) v |= data[i + 1] << 8;
    if (i + 2 < n) v |= data[i + 2];
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out.push_back(i + 1 < n ? tbl[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < n ? tbl[v & 63] : '=');
  }
  return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& s) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<std::uint8_t> out;
  int acc = 0, bits = 0;
  for (char c : s) {
    if (c == '=') break;
    const int v = val(c);
    if (v < 0) throw DataError("base64_decode: bad character");
    acc = (acc << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

}  // namespace objn
