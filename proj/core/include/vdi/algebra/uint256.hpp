#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace vdi::algebra {

/// Fixed-width unsigned 256-bit integer, little-endian 64-bit limbs.
struct U256 {
  std::array<std::uint64_t, 4> limb{};

  constexpr U256() = default;
  constexpr explicit U256(std::uint64_t v) : limb{v, 0, 0, 0} {}
  constexpr U256(std::uint64_t l0, std::uint64_t l1, std::uint64_t l2, std::uint64_t l3)
      : limb{l0, l1, l2, l3} {}

  /// Accepts decimal or 0x-prefixed hexadecimal.
  static U256 parse(std::string_view text);
  /// Big-endian bytes; at most 32.
  static U256 from_bytes_be(std::span<const std::uint8_t> bytes);

  void to_bytes_be(std::span<std::uint8_t> out) const;
  std::string to_hex() const;
  std::string to_dec() const;

  bool is_zero() const { return (limb[0] | limb[1] | limb[2] | limb[3]) == 0; }
  bool bit(unsigned i) const { return (limb[i / 64] >> (i % 64)) & 1u; }
  unsigned bit_length() const;

  friend bool operator==(const U256&, const U256&) = default;
  friend std::strong_ordering operator<=>(const U256& a, const U256& b) {
    for (int i = 3; i >= 0; --i) {
      if (a.limb[i] != b.limb[i]) return a.limb[i] <=> b.limb[i];
    }
    return std::strong_ordering::equal;
  }
};

/// a + b, returns carry.
inline std::uint64_t add_with_carry(U256& out, const U256& a, const U256& b) {
  std::uint64_t carry = 0;
  for (int i = 0; i < 4; ++i) {
    unsigned __int128 s = static_cast<unsigned __int128>(a.limb[i]) + b.limb[i] + carry;
    out.limb[i] = static_cast<std::uint64_t>(s);
    carry = static_cast<std::uint64_t>(s >> 64);
  }
  return carry;
}

/// a - b, returns borrow.
inline std::uint64_t sub_with_borrow(U256& out, const U256& a, const U256& b) {
  std::uint64_t borrow = 0;
  for (int i = 0; i < 4; ++i) {
    unsigned __int128 d = static_cast<unsigned __int128>(a.limb[i]) - b.limb[i] - borrow;
    out.limb[i] = static_cast<std::uint64_t>(d);
    borrow = static_cast<std::uint64_t>(d >> 64) ? 1 : 0;
  }
  return borrow;
}
U256 shift_right(const U256& a, unsigned n);
/// Divides in place by a small value, returns the remainder.
std::uint64_t divmod_small(U256& a, std::uint64_t d);

}  // namespace vdi::algebra
