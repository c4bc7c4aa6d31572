#include "vdi/algebra/uint256.hpp"

#include <algorithm>
#include <cctype>

#include "vdi/error.hpp"

namespace vdi::algebra {

using u128 = unsigned __int128;

U256 shift_right(const U256& a, unsigned n) {
  U256 r;
  if (n >= 256) return r;
  unsigned words = n / 64, bits = n % 64;
  for (unsigned i = 0; i + words < 4; ++i) {
    std::uint64_t lo = a.limb[i + words] >> bits;
    std::uint64_t hi = (bits && i + words + 1 < 4) ? a.limb[i + words + 1] << (64 - bits) : 0;
    r.limb[i] = lo | hi;
  }
  return r;
}

std::uint64_t divmod_small(U256& a, std::uint64_t d) {
  u128 rem = 0;
  for (int i = 3; i >= 0; --i) {
    u128 cur = (rem << 64) | a.limb[i];
    a.limb[i] = static_cast<std::uint64_t>(cur / d);
    rem = cur % d;
  }
  return static_cast<std::uint64_t>(rem);
}

unsigned U256::bit_length() const {
  for (int i = 3; i >= 0; --i) {
    if (limb[i]) return static_cast<unsigned>(64 * i + 64 - __builtin_clzll(limb[i]));
  }
  return 0;
}

U256 U256::parse(std::string_view text) {
  auto fail = [&] { throw Error(ErrorCode::ParseError, "bad integer literal '" + std::string(text) + "'"); };
  if (text.empty()) fail();
  U256 r;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    text.remove_prefix(2);
    if (text.empty() || text.size() > 64) fail();
    for (char c : text) {
      int v;
      if (c >= '0' && c <= '9') v = c - '0';
      else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
      else { fail(); return r; }
      r = U256(r.limb[0] << 4, (r.limb[1] << 4) | (r.limb[0] >> 60), (r.limb[2] << 4) | (r.limb[1] >> 60),
               (r.limb[3] << 4) | (r.limb[2] >> 60));
      r.limb[0] |= static_cast<std::uint64_t>(v);
    }
    return r;
  }
  for (char c : text) {
    if (!std::isdigit(static_cast<unsigned char>(c))) fail();
    // r = r * 10 + digit
    u128 carry = static_cast<u128>(c - '0');
    for (int i = 0; i < 4; ++i) {
      u128 cur = static_cast<u128>(r.limb[i]) * 10 + carry;
      r.limb[i] = static_cast<std::uint64_t>(cur);
      carry = cur >> 64;
    }
    if (carry) fail();
  }
  return r;
}

U256 U256::from_bytes_be(std::span<const std::uint8_t> bytes) {
  if (bytes.size() > 32) throw Error(ErrorCode::InvalidArgument, "more than 32 bytes for U256");
  U256 r;
  std::size_t n = bytes.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t pos = n - 1 - i;  // byte significance
    r.limb[pos / 8] |= static_cast<std::uint64_t>(bytes[i]) << (8 * (pos % 8));
  }
  return r;
}

void U256::to_bytes_be(std::span<std::uint8_t> out) const {
  std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t pos = n - 1 - i;
    out[i] = pos < 32 ? static_cast<std::uint8_t>(limb[pos / 8] >> (8 * (pos % 8))) : 0;
  }
}

std::string U256::to_hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  for (int i = 3; i >= 0; --i) {
    for (int nib = 15; nib >= 0; --nib) s.push_back(digits[(limb[i] >> (4 * nib)) & 0xf]);
  }
  auto first = s.find_first_not_of('0');
  return "0x" + (first == std::string::npos ? std::string("0") : s.substr(first));
}

std::string U256::to_dec() const {
  if (is_zero()) return "0";
  U256 t = *this;
  std::string s;
  while (!t.is_zero()) s.push_back(static_cast<char>('0' + divmod_small(t, 10)));
  std::reverse(s.begin(), s.end());
  return s;
}

}  // namespace vdi::algebra
