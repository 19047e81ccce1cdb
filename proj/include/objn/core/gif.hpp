#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <unordered_map>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/raster.hpp"

namespace objn {

// Animated GIF89a writer with a fixed global palette: 6x6x6 color cube at
// indices 0..215 plus a 40-step gray ramp at 216..255. Output bytes are
// deterministic for a given frame sequence.
class GifWriter {
 public:
  GifWriter(const std::filesystem::path& path, int w, int h, int delay_cs = 12)
      : f_(path, std::ios::binary), w_(w), h_(h), delay_(delay_cs) {
    if (!f_) throw DataError("GifWriter: cannot open " + path.string());
    write_header();
  }

  ~GifWriter() {
    if (f_.is_open()) finish();
  }

  void add_frame(const RgbU8& frame) {
    if (frame.h != h_ || frame.w != w_ || frame.c != 3)
      throw DataError("GifWriter: frame shape mismatch");
    std::vector<std::uint8_t> idx(static_cast<std::size_t>(w_) * h_);
    for (std::size_t i = 0; i < idx.size(); ++i)
      idx[i] = quantize(frame.v[3 * i], frame.v[3 * i + 1], frame.v[3 * i + 2]);
    write_frame(idx);
  }

  void finish() {
    put8(0x3B);  // trailer
    f_.close();
  }

  static std::uint8_t quantize(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const int rc = (r + 25) / 51, gc = (g + 25) / 51, bc = (b + 25) / 51;
    const std::uint8_t cube = static_cast<std::uint8_t>(36 * rc + 6 * gc + bc);
    const int gray = (r * 299 + g * 587 + b * 114) / 1000;
    const int gi = (gray * 39 + 127) / 255;
    const std::uint8_t grayidx = static_cast<std::uint8_t>(216 + gi);
    auto err = [&](std::uint8_t i) {
      std::uint8_t pr, pg, pb;
      palette_entry(i, pr, pg, pb);
      const int dr = pr - r, dg = pg - g, db = pb - b;
      return dr * dr + dg * dg + db * db;
    };
    return err(cube) <= err(grayidx) ? cube : grayidx;
  }

  static void palette_entry(std::uint8_t i, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b) {
    if (i < 216) {
      r = static_cast<std::uint8_t>((i / 36) * 51);
      g = static_cast<std::uint8_t>(((i / 6) % 6) * 51);
      b = static_cast<std::uint8_t>((i % 6) * 51);
    } else {
      const int v = ((i - 216) * 255 + 19) / 39;
      r = g = b = static_cast<std::uint8_t>(v > 255 ? 255 : v);
    }
  }

  // GIF-flavored LZW on 8-bit indices; exposed for the round-trip tests.
  static std::vector<std::uint8_t> lzw_encode(const std::vector<std::uint8_t>& idx) {
    std::vector<std::uint8_t> out;
    std::uint32_t acc = 0;
    int nbits = 0;
    auto put_code = [&](std::uint32_t code, int size) {
      acc |= code << nbits;
      nbits += size;
      while (nbits >= 8) {
        out.push_back(static_cast<std::uint8_t>(acc & 0xFF));
        acc >>= 8;
        nbits -= 8;
      }
    };

    const std::uint32_t kClear = 256, kEnd = 257;
    std::unordered_map<std::uint32_t, std::uint16_t> table;
    std::uint32_t next = 258;
    int code_size = 9;
    put_code(kClear, code_size);

    std::uint32_t prefix = idx.empty() ? 0 : idx[0];
    for (std::size_t i = 1; i < idx.size(); ++i) {
      const std::uint32_t k = idx[i];
      const std::uint32_t key = (prefix << 8) | k;
      auto it = table.find(key);
      if (it != table.end()) {
        prefix = it->second;
        continue;
      }
      put_code(prefix, code_size);
      if (next == 4096) {
        put_code(kClear, code_size);
        table.clear();
        next = 258;
        code_size = 9;
      } else {
        table[key] = static_cast<std::uint16_t>(next++);
        if (next > (1u << code_size) && code_size < 12) ++code_size;
      }
      prefix = k;
    }
    if (!idx.empty()) put_code(prefix, code_size);
    put_code(kEnd, code_size);
    if (nbits > 0) out.push_back(static_cast<std::uint8_t>(acc & 0xFF));
    return out;
  }

  // Decoder counterpart, test-only.
  static std::vector<std::uint8_t> lzw_decode(const std::vector<std::uint8_t>& data,
                                              std::size_t expected) {
    std::vector<std::uint8_t> out;
    out.reserve(expected);
    std::vector<std::pair<int, std::uint8_t>> table(4096, {-1, 0});  // (prefix, last byte)
    auto reset = [&] { return 258u; };
    std::uint32_t next = reset();
    int code_size = 9;
    std::uint32_t acc = 0;
    int nbits = 0;
    std::size_t pos = 0;
    auto get_code = [&]() -> std::int32_t {
      while (nbits < code_size) {
        if (pos >= data.size()) return -1;
        acc |= static_cast<std::uint32_t>(data[pos++]) << nbits;
        nbits += 8;
      }
      const std::uint32_t code = acc & ((1u << code_size) - 1);
      acc >>= code_size;
      nbits -= code_size;
      return static_cast<std::int32_t>(code);
    };
    auto expand = [&](std::uint32_t code) {
      std::vector<std::uint8_t> seq;
      std::int32_t c = static_cast<std::int32_t>(code);
      while (c >= 258) {
        seq.push_back(table[static_cast<std::size_t>(c)].second);
        c = table[static_cast<std::size_t>(c)].first;
      }
      seq.push_back(static_cast<std::uint8_t>(c));
      out.insert(out.end(), seq.rbegin(), seq.rend());
      return static_cast<std::uint8_t>(c);  // first byte of the sequence
    };

    std::int32_t prev = -1;
    std::uint8_t prev_first = 0;
    while (true) {
      const std::int32_t code = get_code();
      if (code < 0 || code == 257) break;
      if (code == 256) {
        next = reset();
        code_size = 9;
        prev = -1;
        continue;
      }
      if (prev < 0) {
        prev_first = expand(static_cast<std::uint32_t>(code));
      } else {
        std::uint8_t first;
        if (static_cast<std::uint32_t>(code) < next) {
          first = expand(static_cast<std::uint32_t>(code));
        } else {
          // KwKwK: sequence is prev + first(prev)
          first = prev_first;
          if (prev >= 258) {
            std::vector<std::uint8_t> seq;
            std::int32_t c = prev;
            while (c >= 258) {
              seq.push_back(table[static_cast<std::size_t>(c)].second);
              c = table[static_cast<std::size_t>(c)].first;
            }
            seq.push_back(static_cast<std::uint8_t>(c));
            out.insert(out.end(), seq.rbegin(), seq.rend());
          } else {
            out.push_back(static_cast<std::uint8_t>(prev));
          }
          out.push_back(first);
        }
        if (next < 4096) {
          table[next] = {prev, first};
          ++next;
          if (next > (1u << code_size) && code_size < 12) ++code_size;
        }
        prev_first = first;
      }
      prev = code;
    }
    return out;
  }

 private:
  void put8(std::uint8_t v) { f_.put(static_cast<char>(v)); }
  void put16(std::uint16_t v) {
    put8(static_cast<std::uint8_t>(v & 0xFF));
    put8(static_cast<std::uint8_t>(v >> 8));
  }

  void write_header() {
    f_.write("GIF89a", 6);
    put16(static_cast<std::uint16_t>(w_));
    put16(static_cast<std::uint16_t>(h_));
    put8(0xF7);  // global color table, 8 bits/pixel, 256 entries
    put8(0);     // background color index
    put8(0);     // aspect
    for (int i = 0; i < 256; ++i) {
      std::uint8_t r, g, b;
      palette_entry(static_cast<std::uint8_t>(i), r, g, b);
      put8(r);
      put8(g);
      put8(b);
    }
    // NETSCAPE2.0 loop-forever extension
    put8(0x21);
    put8(0xFF);
    put8(11);
    f_.write("NETSCAPE2.0", 11);
    put8(3);
    put8(1);
    put16(0);
    put8(0);
  }

  void write_frame(const std::vector<std::uint8_t>& idx) {
    put8(0x21);  // graphic control
    put8(0xF9);
    put8(4);
    put8(0x04);  // do not dispose
    put16(static_cast<std::uint16_t>(delay_));
    put8(0);  // transparent color (unused)
    put8(0);
    put8(0x2C);  // image descriptor
    put16(0);
    put16(0);
    put16(static_cast<std::uint16_t>(w_));
    put16(static_cast<std::uint16_t>(h_));
    put8(0);  // no local color table
    put8(8);  // LZW minimum code size
    const auto packed = lzw_encode(idx);
    std::size_t off = 0;
    while (off < packed.size()) {
      const std::size_t n = std::min<std::size_t>(255, packed.size() - off);
      put8(static_cast<std::uint8_t>(n));
      f_.write(reinterpret_cast<const char*>(packed.data() + off), static_cast<std::streamsize>(n));
      off += n;
    }
    put8(0);  // block terminator
  }

  std::ofstream f_;
  int w_, h_, delay_;
};

}  // namespace objn
