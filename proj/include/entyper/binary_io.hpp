#ifndef ENTYPER_BINARY_IO_HPP_
#define ENTYPER_BINARY_IO_HPP_

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "entyper/error.hpp"

// Little-endian primitives for the on-disk containers.

namespace entyper::binio {

template <typename T>
  requires std::is_integral_v<T>
void write_int(std::ostream& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((u >> (8 * i)) & 0xFFu);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
  requires std::is_integral_v<T>
T read_int(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw InputError("unexpected end of binary stream");
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<std::make_unsigned_t<T>>(bytes[i]) << (8 * i);
  }
  return static_cast<T>(u);
}

inline void write_f32(std::ostream& out, float v) {
  write_int(out, std::bit_cast<std::uint32_t>(v));
}
inline float read_f32(std::istream& in) {
  return std::bit_cast<float>(read_int<std::uint32_t>(in));
}
inline void write_f64(std::ostream& out, double v) {
  write_int(out, std::bit_cast<std::uint64_t>(v));
}
inline double read_f64(std::istream& in) {
  return std::bit_cast<double>(read_int<std::uint64_t>(in));
}

inline void write_str(std::ostream& out, std::string_view s) {
  write_int(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string read_str(std::istream& in) {
  auto n = read_int<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw InputError("unexpected end of binary stream");
  return s;
}

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}
inline void expect_magic(std::istream& in, std::string_view magic, std::string_view what) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!in || got != magic) throw InputError(std::string("not a ") + std::string(what) + " file");
}

}  // namespace entyper::binio

#endif  // ENTYPER_BINARY_IO_HPP_
