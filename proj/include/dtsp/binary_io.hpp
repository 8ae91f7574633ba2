/*
 * binary_io.hpp
 *
 * Little-endian fixed-width readers/writers for the cache and result files.
 */
#ifndef DTSP_BINARY_IO_HPP_
#define DTSP_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "dtsp/errors.hpp"

namespace dtsp::bin {

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_u16(std::ostream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

inline void write_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

inline void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void read_exact(std::istream& in, unsigned char* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw ParseError("binary file truncated");
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  read_exact(in, b, 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i)
    v = (v << 8) | b[i];
  return v;
}

inline std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  read_exact(in, b, 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint8_t read_u8(std::istream& in) {
  unsigned char b;
  read_exact(in, &b, 1);
  return b;
}

inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

inline void expect_magic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!in || got != magic)
    throw ParseError("bad magic: expected '" + std::string(magic) + "'");
}

/* guards allocations driven by untrusted sizes */
inline std::uint64_t read_count(std::istream& in, std::uint64_t limit, const char* what) {
  const auto v = read_u64(in);
  if (v > limit)
    throw ParseError(std::string("implausible ") + what + " in binary file");
  return v;
}

}  // namespace dtsp::bin

#endif  // DTSP_BINARY_IO_HPP_
