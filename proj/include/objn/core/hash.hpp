#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

namespace objn {

// FNV-1a, used for content fingerprints (reproducibility checks, frozen-weight
// assertions). Not cryptographic.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001B3ull;
    }
  }

  template <class T>
  void update_value(const T& v) {
    update(&v, sizeof(T));
  }

  std::uint64_t digest() const { return h_; }

  std::string hex() const {
    static const char* d = "0123456789abcdef";
    std::string s(16, '0');
    std::uint64_t h = h_;
    for (int i = 15; i >= 0; --i) {
      s[static_cast<std::size_t>(i)] = d[h & 0xF];
      h >>= 4;
    }
    return s;
  }

 private:
  std::uint64_t h_ = 0xCBF29CE484222325ull;
};

inline std::uint64_t fnv1a(const void* data, std::size_t n) {
  Fnv1a h;
  h.update(data, n);
  return h.digest();
}

// Content fingerprint of a file; empty string when the file is unreadable.
inline std::string file_hash_hex(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return "";
  Fnv1a h;
  char buf[1 << 16];
  while (f.read(buf, sizeof buf) || f.gcount() > 0)
    h.update(buf, static_cast<std::size_t>(f.gcount()));
  return h.hex();
}

}  // namespace objn
