#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "lcgf/error.hpp"

namespace lcgf::detail {

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U r = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      r = static_cast<U>((r << 8) | ((v >> (8 * i)) & 0xff));
    }
    return r;
  } else {
    return v;
  }
}

template <typename U>
void write_le(std::ostream& os, U v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

inline void write_f64(std::ostream& os, double x) {
  write_le(os, std::bit_cast<std::uint64_t>(x));
}

template <typename U>
U read_le(std::istream& is) {
  U v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(U));
  if (!is) throw InputError("unexpected end of binary stream");
  return to_little(v);
}

inline double read_f64(std::istream& is) {
  return std::bit_cast<double>(read_le<std::uint64_t>(is));
}

inline void expect_magic(std::istream& is, std::string_view magic) {
  char buf[8] = {};
  is.read(buf, 8);
  if (!is || std::string_view(buf, 8) != magic) {
    throw InputError("bad magic, expected " + std::string(magic));
  }
}

}  // namespace lcgf::detail
