#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <optional>
#include <ostream>

// Little-endian scalar encoding shared by the checkpoint and feature-dump formats.
namespace osrlab::detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), b.size());
}

inline void put_i32(std::ostream& os, std::int32_t v) { put_u32(os, static_cast<std::uint32_t>(v)); }

inline void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }

inline std::optional<std::uint32_t> get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), b.size())) return std::nullopt;
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::optional<std::int32_t> get_i32(std::istream& is) {
  auto v = get_u32(is);
  if (!v) return std::nullopt;
  return static_cast<std::int32_t>(*v);
}

inline std::optional<float> get_f32(std::istream& is) {
  auto v = get_u32(is);
  if (!v) return std::nullopt;
  return std::bit_cast<float>(*v);
}

}  // namespace osrlab::detail
