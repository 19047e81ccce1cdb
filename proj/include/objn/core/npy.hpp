#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "objn/core/error.hpp"

namespace objn {

namespace detail {

template <class T>
const char* npy_dtype();
template <>
inline const char* npy_dtype<float>() {
  return "<f4";
}
template <>
inline const char* npy_dtype<double>() {
  return "<f8";
}
template <>
inline const char* npy_dtype<std::uint8_t>() {
  return "|u1";
}

}  // namespace detail

// NPY v1.0 writer, little-endian host assumed.
template <class T>
void write_npy(const std::filesystem::path& path, const std::vector<int>& shape,
               const T* data, std::size_t count) {
  std::ostringstream hdr;
  hdr << "{'descr': '" << detail::npy_dtype<T>() << "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    hdr << shape[i];
    if (shape.size() == 1 || i + 1 < shape.size()) hdr << (shape.size() == 1 ? "," : "");
    if (i + 1 < shape.size()) hdr << ", ";
  }
  hdr << "), }";
  std::string h = hdr.str();
  const std::size_t base = 10 + h.size() + 1;
  const std::size_t pad = (64 - base % 64) % 64;
  h += std::string(pad, ' ');
  h += '\n';

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("write_npy: cannot open " + path.string());
  const char magic[] = "\x93NUMPY";
  f.write(magic, 6);
  const char ver[2] = {1, 0};
  f.write(ver, 2);
  const std::uint16_t hlen = static_cast<std::uint16_t>(h.size());
  f.write(reinterpret_cast<const char*>(&hlen), 2);
  f.write(h.data(), static_cast<std::streamsize>(h.size()));
  f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!f) throw DataError("write_npy: write failed for " + path.string());
}

}  // namespace objn
