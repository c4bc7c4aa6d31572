#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vdi/algebra/uint256.hpp"
#include "vdi/error.hpp"

namespace vdi::algebra {

/// A prime field F_p with p < 2^256, using 4-limb Montgomery arithmetic.
///
/// Instances are immutable and must outlive every FieldElement bound to them.
/// The constructor rejects composite or even moduli.
class PrimeField {
 public:
  explicit PrimeField(const U256& modulus, std::string name = {});

  PrimeField(const PrimeField&) = delete;
  PrimeField& operator=(const PrimeField&) = delete;

  const U256& modulus() const { return p_; }
  const std::string& name() const { return name_; }
  unsigned bit_length() const { return bits_; }
  /// Width of the canonical big-endian encoding.
  std::size_t byte_width() const { return (bits_ + 7) / 8; }

  // Raw Montgomery-domain helpers. Inputs must be < p unless noted.
  inline U256 mont_mul(const U256& a, const U256& b) const;
  inline U256 mont_add(const U256& a, const U256& b) const;
  inline U256 mont_sub(const U256& a, const U256& b) const;
  /// Any a < 2^256 is accepted and reduced.
  U256 to_mont(const U256& a) const { return mont_mul(a, r2_); }
  U256 from_mont(const U256& a) const { return mont_mul(a, U256(1)); }
  const U256& mont_one() const { return one_; }
  /// Reduces a 512-bit big-endian value; used for unbiased hashing/sampling.
  U256 mont_from_wide(std::span<const std::uint8_t, 64> bytes) const;

 private:
  friend bool is_probable_prime(const U256& n);
  struct Unchecked {};
  PrimeField(const U256& modulus, std::string name, Unchecked);

  U256 p_;
  U256 r2_;
  U256 r3_;
  U256 one_;
  std::uint64_t inv_ = 0;  // -p^{-1} mod 2^64
  unsigned bits_ = 0;
  std::string name_;
};

/// Miller-Rabin with fixed bases; deterministic for p < 2^64.
bool is_probable_prime(const U256& n);

/// Canonical element of a PrimeField. Internally held in Montgomery form.
class FieldElement {
 public:
  FieldElement() = default;

  static FieldElement zero(const PrimeField& f) { return FieldElement(&f, U256()); }
  static FieldElement one(const PrimeField& f) { return FieldElement(&f, f.mont_one()); }
  static FieldElement from_u64(const PrimeField& f, std::uint64_t v) { return FieldElement(&f, f.to_mont(U256(v))); }
  /// Any value < 2^256; reduced mod p.
  static FieldElement from_u256(const PrimeField& f, const U256& v) { return FieldElement(&f, f.to_mont(v)); }
  /// Centered lift: negative v maps to p - |v|.
  static FieldElement from_int(const PrimeField& f, std::int64_t v);
  /// Strict decoding of the fixed-width big-endian encoding; rejects values >= p.
  static FieldElement from_bytes(const PrimeField& f, std::span<const std::uint8_t> bytes);
  static FieldElement from_wide_bytes(const PrimeField& f, std::span<const std::uint8_t, 64> bytes) {
    return FieldElement(&f, f.mont_from_wide(bytes));
  }

  const PrimeField& field() const { return *f_; }
  bool bound() const { return f_ != nullptr; }

  U256 value() const { return f_->from_mont(m_); }
  bool is_zero() const { return m_.is_zero(); }
  bool is_one() const { return m_ == f_->mont_one(); }
  /// Signed interpretation in [-(p-1)/2, (p-1)/2]; throws MagnitudeOverflow if outside int64.
  std::int64_t to_int() const;

  std::vector<std::uint8_t> to_bytes() const;
  void write_bytes(std::span<std::uint8_t> out) const { value().to_bytes_be(out); }

  FieldElement operator+(const FieldElement& o) const { return FieldElement(f_, f_->mont_add(m_, o.m_)); }
  FieldElement operator-(const FieldElement& o) const { return FieldElement(f_, f_->mont_sub(m_, o.m_)); }
  FieldElement operator*(const FieldElement& o) const { return FieldElement(f_, f_->mont_mul(m_, o.m_)); }
  FieldElement operator-() const { return FieldElement(f_, f_->mont_sub(U256(), m_)); }
  FieldElement operator/(const FieldElement& o) const { return *this * o.inverse(); }
  FieldElement& operator+=(const FieldElement& o) { m_ = f_->mont_add(m_, o.m_); return *this; }
  FieldElement& operator-=(const FieldElement& o) { m_ = f_->mont_sub(m_, o.m_); return *this; }
  FieldElement& operator*=(const FieldElement& o) { m_ = f_->mont_mul(m_, o.m_); return *this; }

  FieldElement square() const { return *this * *this; }
  FieldElement pow(const U256& e) const;
  /// Throws InverseOfZero.
  FieldElement inverse() const;

  friend bool operator==(const FieldElement& a, const FieldElement& b) { return a.m_ == b.m_; }

  const U256& montgomery() const { return m_; }

 private:
  FieldElement(const PrimeField* f, const U256& m) : f_(f), m_(m) {}

  const PrimeField* f_ = nullptr;
  U256 m_;
};

/// Inverts every element with one field inversion. Zeros are rejected.
void batch_invert(std::span<FieldElement> values);

FieldElement inner_product(std::span<const FieldElement> a, std::span<const FieldElement> b);

// Coarsely integrated operand scanning; any a < 2^256 with b < p yields a
// result < p after the final conditional subtraction.
inline U256 PrimeField::mont_mul(const U256& a, const U256& b) const {
  using u128 = unsigned __int128;
  std::uint64_t t[6] = {0, 0, 0, 0, 0, 0};
  for (int i = 0; i < 4; ++i) {
    std::uint64_t carry = 0;
    for (int j = 0; j < 4; ++j) {
      u128 cur = static_cast<u128>(a.limb[j]) * b.limb[i] + t[j] + carry;
      t[j] = static_cast<std::uint64_t>(cur);
      carry = static_cast<std::uint64_t>(cur >> 64);
    }
    u128 s = static_cast<u128>(t[4]) + carry;
    t[4] = static_cast<std::uint64_t>(s);
    t[5] = static_cast<std::uint64_t>(s >> 64);

    std::uint64_t m = t[0] * inv_;
    u128 cur = static_cast<u128>(m) * p_.limb[0] + t[0];
    carry = static_cast<std::uint64_t>(cur >> 64);
    for (int j = 1; j < 4; ++j) {
      cur = static_cast<u128>(m) * p_.limb[j] + t[j] + carry;
      t[j - 1] = static_cast<std::uint64_t>(cur);
      carry = static_cast<std::uint64_t>(cur >> 64);
    }
    s = static_cast<u128>(t[4]) + carry;
    t[3] = static_cast<std::uint64_t>(s);
    t[4] = t[5] + static_cast<std::uint64_t>(s >> 64);
  }
  U256 r(t[0], t[1], t[2], t[3]);
  if (t[4] || r >= p_) {
    U256 d;
    sub_with_borrow(d, r, p_);
    return d;
  }
  return r;
}

inline U256 PrimeField::mont_add(const U256& a, const U256& b) const {
  U256 r;
  std::uint64_t carry = add_with_carry(r, a, b);
  if (carry || r >= p_) sub_with_borrow(r, r, p_);
  return r;
}

inline U256 PrimeField::mont_sub(const U256& a, const U256& b) const {
  U256 r;
  if (sub_with_borrow(r, a, b)) add_with_carry(r, r, p_);
  return r;
}

}  // namespace vdi::algebra
