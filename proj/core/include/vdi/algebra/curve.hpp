#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vdi/algebra/field.hpp"

namespace vdi::algebra {

enum class ProfileId : std::uint8_t { Test = 0, Main = 1, Custom = 2 };

/// Parameters of a short-Weierstrass curve y^2 = x^3 + ax + b over a base
/// field, together with its prime group order p. The scalar field is F_p, so
/// |F| = |G|. Only prime-order (cofactor 1) curves are accepted.
class CurveProfile {
 public:
  struct Params {
    std::string name;
    U256 base_modulus;
    U256 a;
    U256 b;
    U256 order;
    std::string seed;
  };

  /// Validates primality of both moduli, the Hasse bound and that a sampled
  /// point has the declared order. Throws InvalidProfile.
  CurveProfile(const Params& params, ProfileId id);

  CurveProfile(const CurveProfile&) = delete;
  CurveProfile& operator=(const CurveProfile&) = delete;

  /// Tiny curve over F_65519 with prime order 65287, small enough to enumerate.
  static const CurveProfile& test();
  /// secp256k1 parameters (order ~ 2^256).
  static const CurveProfile& main();
  /// "test" or "main".
  static const CurveProfile& builtin(std::string_view name);
  static const CurveProfile& by_id(ProfileId id);

  /// Parses the `key value` profile format (see docs/file-formats.md).
  static std::unique_ptr<CurveProfile> parse(std::string_view text);
  static std::unique_ptr<CurveProfile> load(const std::string& path);

  const std::string& name() const { return params_.name; }
  ProfileId id() const { return id_; }
  const PrimeField& base_field() const { return *base_; }
  const PrimeField& scalar_field() const { return *scalar_; }
  const FieldElement& a() const { return a_; }
  const FieldElement& b() const { return b_; }
  bool a_is_zero() const { return a_.is_zero(); }
  const U256& order() const { return params_.order; }
  const std::string& seed() const { return params_.seed; }

  FieldElement scalar(std::uint64_t v) const { return FieldElement::from_u64(*scalar_, v); }
  FieldElement scalar_from_int(std::int64_t v) const { return FieldElement::from_int(*scalar_, v); }

  /// Width in bytes of a compressed point.
  std::size_t point_width() const { return base_->byte_width() + 1; }

 private:
  Params params_;
  ProfileId id_;
  std::unique_ptr<PrimeField> base_;
  std::unique_ptr<PrimeField> scalar_;
  FieldElement a_;
  FieldElement b_;
};

/// Square root in a prime field (Tonelli-Shanks), if one exists.
std::optional<FieldElement> sqrt(const FieldElement& v);

/// Affine point on a CurveProfile, or the point at infinity. Immutable.
class GroupPoint {
 public:
  GroupPoint() = default;

  static GroupPoint infinity(const CurveProfile& curve);
  /// Throws PointNotOnCurve.
  static GroupPoint from_affine(const CurveProfile& curve, const FieldElement& x, const FieldElement& y);
  /// Lifts x to the point whose y has the requested parity, if x is on the curve.
  static std::optional<GroupPoint> lift_x(const CurveProfile& curve, const FieldElement& x, bool odd_y);

  const CurveProfile& curve() const { return *curve_; }
  bool is_infinity() const { return infinity_; }
  const FieldElement& x() const { return x_; }
  const FieldElement& y() const { return y_; }
  bool on_curve() const;

  GroupPoint operator+(const GroupPoint& o) const;
  GroupPoint operator-(const GroupPoint& o) const { return *this + o.negate(); }
  GroupPoint negate() const;
  GroupPoint doubled() const;
  GroupPoint operator*(const FieldElement& k) const;
  GroupPoint scalar_mul(const U256& k) const;

  friend bool operator==(const GroupPoint& a, const GroupPoint& b);

  /// Compressed encoding: x (base-field width, big-endian) then a sign byte:
  /// 0x02 even y, 0x03 odd y, 0x00 infinity (x all zero).
  void encode(std::span<std::uint8_t> out) const;
  std::vector<std::uint8_t> encode() const;
  /// Throws MalformedProof on bad encodings or off-curve x.
  static GroupPoint decode(const CurveProfile& curve, std::span<const std::uint8_t> bytes);

 private:
  friend struct PointOps;
  const CurveProfile* curve_ = nullptr;
  FieldElement x_;
  FieldElement y_;
  bool infinity_ = true;
};

/// Precomputed 4-bit windows of one base point for repeated k * base.
class FixedBaseTable {
 public:
  explicit FixedBaseTable(const GroupPoint& base);
  GroupPoint mul(const FieldElement& k) const;

 private:
  const CurveProfile* curve_;
  unsigned windows_;
  std::vector<GroupPoint> table_;  // window w, digit j at w * 15 + j - 1
};

/// sum_i scalars[i] * points[i]; Straus for short inputs, Pippenger buckets otherwise.
GroupPoint multi_scalar_mul(std::span<const GroupPoint> points, std::span<const FieldElement> scalars);

}  // namespace vdi::algebra
