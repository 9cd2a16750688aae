#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace trialmix::detail {

template <typename T>
T to_little_endian(T value) {
  static_assert(sizeof(T) == 8);
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, 8);
    bits = __builtin_bswap64(bits);
    std::memcpy(&value, &bits, 8);
  }
  return value;
}

template <typename T>
void write_le(std::ostream& os, T value) {
  value = to_little_endian(value);
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_le(std::istream& is, T& value) {
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) return false;
  value = to_little_endian(value);
  return true;
}

}  // namespace trialmix::detail
