// SPDX-License-Identifier: Apache-2.0
//
// Little-endian binary stream helpers shared by the HBNN and HBDS formats.
#ifndef HYBEAM_BINIO_HPP
#define HYBEAM_BINIO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "hybeam/errors.hpp"

namespace hybeam::binio {

static_assert(std::endian::native == std::endian::little,
              "big-endian hosts would need byte swaps here");

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T value;
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw format_error(std::string("truncated file while reading ") + what);
  return value;
}

inline void write_bytes(std::ostream& os, const void* data, std::size_t n) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& is, void* data, std::size_t n, const char* what) {
  is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (!is) throw format_error(std::string("truncated file while reading ") + what);
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint64_t>(os, s.size());
  write_bytes(os, s.data(), s.size());
}

inline std::string read_string(std::istream& is, const char* what) {
  const auto len = read_pod<std::uint64_t>(is, what);
  if (len > (1ULL << 32)) throw format_error(std::string("implausible string length in ") + what);
  std::string s(len, '\0');
  read_bytes(is, s.data(), len, what);
  return s;
}

inline void expect_magic(std::istream& is, const char magic[4], const char* format_name) {
  char buf[4];
  read_bytes(is, buf, 4, "magic bytes");
  if (std::memcmp(buf, magic, 4) != 0) {
    throw format_error(std::string("bad magic bytes: not a ") + format_name + " file");
  }
}

}  // namespace hybeam::binio

#endif  // HYBEAM_BINIO_HPP
