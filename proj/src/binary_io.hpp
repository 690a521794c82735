#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace voxedit::detail {

inline std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0x0000ff00u) | ((v << 8) & 0x00ff0000u) | (v << 24);
}

inline void write_u32_le(std::ostream& out, std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f32_le(std::ostream& out, float f) { write_u32_le(out, std::bit_cast<std::uint32_t>(f)); }

inline void write_f32_array_le(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float f : values) write_f32_le(out, f);
  }
}

inline void read_exact(std::istream& in, void* dst, std::size_t n, const char* what) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw std::runtime_error(std::string("truncated ") + what);
}

inline std::uint32_t read_u32_le(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  read_exact(in, &v, sizeof v, what);
  if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
  return v;
}

inline float read_f32_le(std::istream& in, const char* what) { return std::bit_cast<float>(read_u32_le(in, what)); }

inline void read_f32_array_le(std::istream& in, std::span<float> dst, const char* what) {
  read_exact(in, dst.data(), dst.size_bytes(), what);
  if constexpr (std::endian::native == std::endian::big) {
    for (float& f : dst) f = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(f)));
  }
}

}  // namespace voxedit::detail
