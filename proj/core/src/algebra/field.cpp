#include "vdi/algebra/field.hpp"

#include <array>

namespace vdi::algebra {

namespace {

U256 double_mod(const U256& a, const U256& p) {
  U256 r;
  std::uint64_t carry = add_with_carry(r, a, a);
  if (carry || r >= p) sub_with_borrow(r, r, p);
  return r;
}

}  // namespace

PrimeField::PrimeField(const U256& modulus, std::string name, Unchecked) : p_(modulus), name_(std::move(name)) {
  if (!p_.bit(0) || p_ < U256(3)) throw Error(ErrorCode::InvalidProfile, "modulus must be an odd prime");
  bits_ = p_.bit_length();

  std::uint64_t x = 1;
  for (int i = 0; i < 7; ++i) x *= 2 - p_.limb[0] * x;
  inv_ = ~x + 1;

  U256 r(1);
  for (int i = 0; i < 256; ++i) r = double_mod(r, p_);
  one_ = r;
  for (int i = 0; i < 256; ++i) r = double_mod(r, p_);
  r2_ = r;
  r3_ = mont_mul(r2_, r2_);
}

PrimeField::PrimeField(const U256& modulus, std::string name) : PrimeField(modulus, std::move(name), Unchecked{}) {
  if (!is_probable_prime(modulus)) {
    throw Error(ErrorCode::InvalidProfile, "modulus " + modulus.to_hex() + " is not prime");
  }
}

U256 PrimeField::mont_from_wide(std::span<const std::uint8_t, 64> bytes) const {
  U256 hi = U256::from_bytes_be(bytes.first<32>());
  U256 lo = U256::from_bytes_be(bytes.last<32>());
  return mont_add(mont_mul(hi, r3_), mont_mul(lo, r2_));
}

bool is_probable_prime(const U256& n) {
  static constexpr std::array<std::uint64_t, 16> kBases = {2,  3,  5,  7,  11, 13, 17, 19,
                                                           23, 29, 31, 37, 41, 43, 47, 53};
  if (n < U256(2)) return false;
  for (std::uint64_t b : kBases) {
    if (n == U256(b)) return true;
    U256 t = n;
    if (divmod_small(t, b) == 0) return false;
  }
  PrimeField f(n, {}, PrimeField::Unchecked{});
  U256 n_minus_1;
  sub_with_borrow(n_minus_1, n, U256(1));
  unsigned s = 0;
  while (!n_minus_1.bit(s)) ++s;
  U256 d = shift_right(n_minus_1, s);
  FieldElement minus_one = FieldElement::from_u256(f, n_minus_1);
  for (std::uint64_t b : kBases) {
    FieldElement x = FieldElement::from_u64(f, b).pow(d);
    if (x.is_one() || x == minus_one) continue;
    bool witness = true;
    for (unsigned i = 1; i < s; ++i) {
      x = x.square();
      if (x == minus_one) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

FieldElement FieldElement::from_int(const PrimeField& f, std::int64_t v) {
  if (v >= 0) return from_u64(f, static_cast<std::uint64_t>(v));
  std::uint64_t mag = static_cast<std::uint64_t>(-(v + 1)) + 1;
  return -from_u64(f, mag);
}

FieldElement FieldElement::from_bytes(const PrimeField& f, std::span<const std::uint8_t> bytes) {
  if (bytes.size() != f.byte_width()) {
    throw Error(ErrorCode::MalformedProof, "field element encoding has wrong width");
  }
  U256 v = U256::from_bytes_be(bytes);
  if (v >= f.modulus()) throw Error(ErrorCode::MalformedProof, "non-canonical field element");
  return from_u256(f, v);
}

std::int64_t FieldElement::to_int() const {
  U256 v = value();
  U256 half = shift_right(f_->modulus(), 1);
  static const U256 kLimit(std::uint64_t{1} << 63);
  if (v <= half) {
    if (v >= kLimit) throw Error(ErrorCode::MagnitudeOverflow, "field element exceeds int64");
    return static_cast<std::int64_t>(v.limb[0]);
  }
  U256 neg;
  sub_with_borrow(neg, f_->modulus(), v);
  if (neg > kLimit) throw Error(ErrorCode::MagnitudeOverflow, "field element exceeds int64");
  return -static_cast<std::int64_t>(neg.limb[0] - 1) - 1;
}

std::vector<std::uint8_t> FieldElement::to_bytes() const {
  std::vector<std::uint8_t> out(f_->byte_width());
  write_bytes(out);
  return out;
}

FieldElement FieldElement::pow(const U256& e) const {
  FieldElement acc = one(*f_);
  for (int i = static_cast<int>(e.bit_length()) - 1; i >= 0; --i) {
    acc = acc.square();
    if (e.bit(static_cast<unsigned>(i))) acc *= *this;
  }
  return acc;
}

namespace {

// x / 2 mod p for odd p.
U256 half_mod(const U256& x, const U256& p) {
  if (!(x.limb[0] & 1)) return shift_right(x, 1);
  U256 s;
  std::uint64_t carry = add_with_carry(s, x, p);
  U256 r = shift_right(s, 1);
  r.limb[3] |= carry << 63;
  return r;
}

U256 sub_mod(const U256& a, const U256& b, const U256& p) {
  U256 r;
  if (sub_with_borrow(r, a, b)) add_with_carry(r, r, p);
  return r;
}

}  // namespace

FieldElement FieldElement::inverse() const {
  if (is_zero()) throw Error(ErrorCode::InverseOfZero, "inverse of zero in " + f_->name());
  // Binary extended Euclid on the canonical value.
  const U256& p = f_->modulus();
  U256 u = value(), v = p, x1(1), x2;
  const U256 one(1);
  while (u != one && v != one) {
    while (!(u.limb[0] & 1)) {
      u = shift_right(u, 1);
      x1 = half_mod(x1, p);
    }
    while (!(v.limb[0] & 1)) {
      v = shift_right(v, 1);
      x2 = half_mod(x2, p);
    }
    if (u >= v) {
      sub_with_borrow(u, u, v);
      x1 = sub_mod(x1, x2, p);
    } else {
      sub_with_borrow(v, v, u);
      x2 = sub_mod(x2, x1, p);
    }
  }
  return from_u256(*f_, u == one ? x1 : x2);
}

void batch_invert(std::span<FieldElement> values) {
  if (values.empty()) return;
  std::vector<FieldElement> prefix(values.size());
  FieldElement acc = FieldElement::one(values[0].field());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].is_zero()) throw Error(ErrorCode::InverseOfZero, "batch inversion hit zero");
    prefix[i] = acc;
    acc *= values[i];
  }
  FieldElement inv = acc.inverse();
  for (std::size_t i = values.size(); i-- > 0;) {
    FieldElement next = inv * values[i];
    values[i] = inv * prefix[i];
    inv = next;
  }
}

FieldElement inner_product(std::span<const FieldElement> a, std::span<const FieldElement> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "inner product of unequal lengths");
  if (a.empty()) throw Error(ErrorCode::DimensionMismatch, "inner product of empty vectors");
  FieldElement acc = FieldElement::zero(a[0].field());
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace vdi::algebra
