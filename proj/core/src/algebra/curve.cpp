#include "vdi/algebra/curve.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace vdi::algebra {

namespace {

struct Jacobian {
  FieldElement x, y, z;  // z == 0 encodes infinity

  bool is_infinity() const { return z.is_zero(); }
};

}  // namespace

struct PointOps {
  const CurveProfile& c;

  Jacobian infinity() const {
    const auto& f = c.base_field();
    return {FieldElement::one(f), FieldElement::one(f), FieldElement::zero(f)};
  }

  Jacobian from_affine(const GroupPoint& p) const {
    if (p.is_infinity()) return infinity();
    return {p.x_, p.y_, FieldElement::one(c.base_field())};
  }

  GroupPoint to_affine(const Jacobian& j) const {
    if (j.is_infinity()) return GroupPoint::infinity(c);
    FieldElement zi = j.z.inverse();
    FieldElement zi2 = zi.square();
    GroupPoint p;
    p.curve_ = &c;
    p.x_ = j.x * zi2;
    p.y_ = j.y * zi2 * zi;
    p.infinity_ = false;
    return p;
  }

  Jacobian dbl(const Jacobian& p) const {
    if (p.is_infinity() || p.y.is_zero()) return infinity();
    FieldElement xx = p.x.square();
    FieldElement yy = p.y.square();
    FieldElement yyyy = yy.square();
    FieldElement zz = p.z.square();
    FieldElement s = (p.x + yy).square() - xx - yyyy;
    s = s + s;
    FieldElement m = xx + xx + xx;
    if (!c.a_is_zero()) m += c.a() * zz.square();
    FieldElement t = m.square() - s - s;
    FieldElement y8 = yyyy + yyyy;
    y8 = y8 + y8;
    y8 = y8 + y8;
    Jacobian r;
    r.x = t;
    r.y = m * (s - t) - y8;
    r.z = (p.y + p.z).square() - yy - zz;
    return r;
  }

  Jacobian add(const Jacobian& p, const Jacobian& q) const {
    if (p.is_infinity()) return q;
    if (q.is_infinity()) return p;
    FieldElement z1z1 = p.z.square();
    FieldElement z2z2 = q.z.square();
    FieldElement u1 = p.x * z2z2;
    FieldElement u2 = q.x * z1z1;
    FieldElement s1 = p.y * q.z * z2z2;
    FieldElement s2 = q.y * p.z * z1z1;
    FieldElement h = u2 - u1;
    FieldElement rr = s2 - s1;
    if (h.is_zero()) {
      if (rr.is_zero()) return dbl(p);
      return infinity();
    }
    rr = rr + rr;
    FieldElement i = (h + h).square();
    FieldElement j = h * i;
    FieldElement v = u1 * i;
    Jacobian r;
    r.x = rr.square() - j - v - v;
    FieldElement s1j = s1 * j;
    r.y = rr * (v - r.x) - s1j - s1j;
    r.z = ((p.z + q.z).square() - z1z1 - z2z2) * h;
    return r;
  }

  // q affine, not infinity.
  Jacobian add_mixed(const Jacobian& p, const GroupPoint& q) const {
    if (q.is_infinity()) return p;
    if (p.is_infinity()) return from_affine(q);
    FieldElement z1z1 = p.z.square();
    FieldElement u2 = q.x_ * z1z1;
    FieldElement s2 = q.y_ * p.z * z1z1;
    FieldElement h = u2 - p.x;
    FieldElement rr = s2 - p.y;
    if (h.is_zero()) {
      if (rr.is_zero()) return dbl(p);
      return infinity();
    }
    FieldElement hh = h.square();
    FieldElement i = hh + hh;
    i = i + i;
    FieldElement j = h * i;
    rr = rr + rr;
    FieldElement v = p.x * i;
    Jacobian r;
    r.x = rr.square() - j - v - v;
    FieldElement yj = p.y * j;
    r.y = rr * (v - r.x) - yj - yj;
    r.z = (p.z + h).square() - z1z1 - hh;
    return r;
  }

  Jacobian neg(const Jacobian& p) const { return {p.x, -p.y, p.z}; }

  bool equal(const Jacobian& p, const Jacobian& q) const {
    if (p.is_infinity() || q.is_infinity()) return p.is_infinity() == q.is_infinity();
    FieldElement z1z1 = p.z.square();
    FieldElement z2z2 = q.z.square();
    if (!(p.x * z2z2 == q.x * z1z1)) return false;
    return p.y * q.z * z2z2 == q.y * p.z * z1z1;
  }

  Jacobian mul(const GroupPoint& p, const U256& k) const {
    if (p.is_infinity() || k.is_zero()) return infinity();
    std::array<Jacobian, 16> table;
    table[0] = infinity();
    table[1] = from_affine(p);
    for (int i = 2; i < 16; ++i) table[i] = add_mixed(table[i - 1], p);
    Jacobian acc = infinity();
    int top = (static_cast<int>(k.bit_length()) + 3) / 4;
    for (int w = top - 1; w >= 0; --w) {
      for (int d = 0; d < 4; ++d) acc = dbl(acc);
      unsigned nib = static_cast<unsigned>((k.limb[w / 16] >> (4 * (w % 16))) & 0xf);
      if (nib) acc = add(acc, table[nib]);
    }
    return acc;
  }
};

// ---------------------------------------------------------------------------
// CurveProfile

CurveProfile::CurveProfile(const Params& params, ProfileId id) : params_(params), id_(id) {
  base_ = std::make_unique<PrimeField>(params.base_modulus, params.name + "/base");
  scalar_ = std::make_unique<PrimeField>(params.order, params.name + "/scalar");
  if (params.a >= params.base_modulus || params.b >= params.base_modulus) {
    throw Error(ErrorCode::InvalidProfile, "curve coefficients must be reduced");
  }
  a_ = FieldElement::from_u256(*base_, params.a);
  b_ = FieldElement::from_u256(*base_, params.b);
  FieldElement four_a3 = FieldElement::from_u64(*base_, 4) * a_ * a_ * a_;
  FieldElement b2_27 = FieldElement::from_u64(*base_, 27) * b_ * b_;
  if ((four_a3 + b2_27).is_zero()) throw Error(ErrorCode::InvalidProfile, "singular curve");

  // |order - (q + 1)| <= 2 sqrt(q), checked on bit lengths.
  U256 q1;
  add_with_carry(q1, params.base_modulus, U256(1));
  U256 diff;
  if (params.order >= q1) sub_with_borrow(diff, params.order, q1);
  else sub_with_borrow(diff, q1, params.order);
  if (diff.bit_length() > params.base_modulus.bit_length() / 2 + 2) {
    throw Error(ErrorCode::InvalidProfile, "order outside the Hasse interval");
  }

  for (std::uint64_t x = 1;; ++x) {
    auto p = GroupPoint::lift_x(*this, FieldElement::from_u64(*base_, x), false);
    if (!p) continue;
    if (!p->scalar_mul(params.order).is_infinity()) {
      throw Error(ErrorCode::InvalidProfile, "declared order does not annihilate the curve");
    }
    break;
  }
}

const CurveProfile& CurveProfile::test() {
  static const CurveProfile profile(
      Params{"test", U256(65519), U256(4), U256(12), U256(65287), "vdi/test/v1"}, ProfileId::Test);
  return profile;
}

const CurveProfile& CurveProfile::main() {
  static const CurveProfile profile(
      Params{"main", U256::parse("0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F"), U256(0), U256(7),
             U256::parse("0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141"), "vdi/main/v1"},
      ProfileId::Main);
  return profile;
}

const CurveProfile& CurveProfile::builtin(std::string_view name) {
  if (name == "test") return test();
  if (name == "main") return main();
  throw Error(ErrorCode::InvalidProfile, "unknown profile '" + std::string(name) + "'");
}

const CurveProfile& CurveProfile::by_id(ProfileId id) {
  switch (id) {
    case ProfileId::Test: return test();
    case ProfileId::Main: return main();
    case ProfileId::Custom: break;
  }
  throw Error(ErrorCode::InvalidProfile, "no built-in profile for this id");
}

std::unique_ptr<CurveProfile> CurveProfile::parse(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string key, value, extra;
    if (!(ls >> key)) continue;
    if (!(ls >> value) || (ls >> extra)) throw Error(ErrorCode::ParseError, "profile line needs 'key value': " + line);
    kv[key] = value;
  }
  auto need = [&](const char* k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw Error(ErrorCode::InvalidProfile, std::string("profile missing key '") + k + "'");
    return it->second;
  };
  Params p;
  p.name = need("name");
  p.base_modulus = U256::parse(need("base_modulus"));
  p.a = U256::parse(need("a"));
  p.b = U256::parse(need("b"));
  p.order = U256::parse(need("order"));
  p.seed = need("seed");
  if (kv.size() != 6) throw Error(ErrorCode::InvalidProfile, "unknown keys in profile");
  return std::make_unique<CurveProfile>(p, ProfileId::Custom);
}

std::unique_ptr<CurveProfile> CurveProfile::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open profile " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

// ---------------------------------------------------------------------------

std::optional<FieldElement> sqrt(const FieldElement& v) {
  const PrimeField& f = v.field();
  if (v.is_zero()) return v;
  U256 pm1;
  sub_with_borrow(pm1, f.modulus(), U256(1));
  if (f.modulus().limb[0] % 4 == 3) {
    U256 e;
    add_with_carry(e, f.modulus(), U256(1));
    FieldElement r = v.pow(shift_right(e, 2));
    if (!(r.square() == v)) return std::nullopt;
    return r;
  }
  if (!v.pow(shift_right(pm1, 1)).is_one()) return std::nullopt;
  unsigned s = 0;
  while (!pm1.bit(s)) ++s;
  U256 q = shift_right(pm1, s);
  FieldElement z = FieldElement::from_u64(f, 2);
  while (z.pow(shift_right(pm1, 1)).is_one()) z += FieldElement::one(f);
  FieldElement c = z.pow(q);
  U256 q1;
  add_with_carry(q1, q, U256(1));
  FieldElement r = v.pow(shift_right(q1, 1));
  FieldElement t = v.pow(q);
  unsigned m = s;
  while (!t.is_one()) {
    unsigned i = 0;
    FieldElement t2 = t;
    while (!t2.is_one()) {
      t2 = t2.square();
      ++i;
    }
    FieldElement b = c;
    for (unsigned j = 0; j + i + 1 < m; ++j) b = b.square();
    r *= b;
    c = b.square();
    t *= c;
    m = i;
  }
  return r;
}

GroupPoint GroupPoint::infinity(const CurveProfile& curve) {
  GroupPoint p;
  p.curve_ = &curve;
  p.x_ = FieldElement::zero(curve.base_field());
  p.y_ = FieldElement::zero(curve.base_field());
  p.infinity_ = true;
  return p;
}

GroupPoint GroupPoint::from_affine(const CurveProfile& curve, const FieldElement& x, const FieldElement& y) {
  GroupPoint p;
  p.curve_ = &curve;
  p.x_ = x;
  p.y_ = y;
  p.infinity_ = false;
  if (!p.on_curve()) throw Error(ErrorCode::PointNotOnCurve, "(" + x.value().to_hex() + ", " + y.value().to_hex() + ")");
  return p;
}

std::optional<GroupPoint> GroupPoint::lift_x(const CurveProfile& curve, const FieldElement& x, bool odd_y) {
  FieldElement rhs = x * x * x + curve.a() * x + curve.b();
  auto y = sqrt(rhs);
  if (!y) return std::nullopt;
  if (y->value().bit(0) != odd_y) y = -*y;
  GroupPoint p;
  p.curve_ = &curve;
  p.x_ = x;
  p.y_ = *y;
  p.infinity_ = false;
  return p;
}

bool GroupPoint::on_curve() const {
  if (infinity_) return true;
  return y_.square() == x_ * x_ * x_ + curve_->a() * x_ + curve_->b();
}

GroupPoint GroupPoint::operator+(const GroupPoint& o) const {
  PointOps ops{*curve_};
  return ops.to_affine(ops.add_mixed(ops.from_affine(*this), o));
}

GroupPoint GroupPoint::negate() const {
  if (infinity_) return *this;
  GroupPoint p = *this;
  p.y_ = -y_;
  return p;
}

GroupPoint GroupPoint::doubled() const {
  PointOps ops{*curve_};
  return ops.to_affine(ops.dbl(ops.from_affine(*this)));
}

GroupPoint GroupPoint::operator*(const FieldElement& k) const { return scalar_mul(k.value()); }

GroupPoint GroupPoint::scalar_mul(const U256& k) const {
  PointOps ops{*curve_};
  return ops.to_affine(ops.mul(*this, k));
}

bool operator==(const GroupPoint& a, const GroupPoint& b) {
  if (a.infinity_ || b.infinity_) return a.infinity_ == b.infinity_;
  return a.x_ == b.x_ && a.y_ == b.y_;
}

void GroupPoint::encode(std::span<std::uint8_t> out) const {
  std::size_t w = curve_->base_field().byte_width();
  if (out.size() != w + 1) throw Error(ErrorCode::InvalidArgument, "point buffer has wrong width");
  if (infinity_) {
    std::fill(out.begin(), out.end(), 0);
    return;
  }
  x_.write_bytes(out.first(w));
  out[w] = y_.value().bit(0) ? 0x03 : 0x02;
}

std::vector<std::uint8_t> GroupPoint::encode() const {
  std::vector<std::uint8_t> out(curve_->point_width());
  encode(out);
  return out;
}

GroupPoint GroupPoint::decode(const CurveProfile& curve, std::span<const std::uint8_t> bytes) {
  std::size_t w = curve.base_field().byte_width();
  if (bytes.size() != w + 1) throw Error(ErrorCode::MalformedProof, "point encoding has wrong width");
  std::uint8_t tag = bytes[w];
  if (tag == 0x00) {
    if (std::any_of(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(w), [](auto b) { return b != 0; })) {
      throw Error(ErrorCode::MalformedProof, "infinity encoding with nonzero x");
    }
    return infinity(curve);
  }
  if (tag != 0x02 && tag != 0x03) throw Error(ErrorCode::MalformedProof, "bad point sign byte");
  FieldElement x = FieldElement::from_bytes(curve.base_field(), bytes.first(w));
  auto p = lift_x(curve, x, tag == 0x03);
  if (!p) throw Error(ErrorCode::MalformedProof, "x-coordinate not on curve");
  return *p;
}

// ---------------------------------------------------------------------------
// Multi-scalar multiplication

namespace {

unsigned window_bits(std::size_t n) {
  unsigned bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  return std::clamp(bits > 4 ? bits - 3 : 4u, 4u, 12u);
}

unsigned extract(const U256& k, unsigned pos, unsigned width) {
  unsigned v = 0;
  for (unsigned b = 0; b < width && pos + b < 256; ++b) v |= static_cast<unsigned>(k.bit(pos + b)) << b;
  return v;
}

}  // namespace

GroupPoint multi_scalar_mul(std::span<const GroupPoint> points, std::span<const FieldElement> scalars) {
  if (points.size() != scalars.size()) throw Error(ErrorCode::DimensionMismatch, "msm length mismatch");
  if (points.empty()) throw Error(ErrorCode::DimensionMismatch, "empty msm");
  const CurveProfile& c = points[0].curve();
  PointOps ops{c};
  // Scalars above p/2 are replaced by p - k on the negated point, so small
  // negative activations stay short.
  std::vector<U256> ks(scalars.size());
  std::vector<GroupPoint> negated;
  std::vector<const GroupPoint*> pts(points.size());
  negated.reserve(points.size());
  const U256& order = scalars[0].field().modulus();
  U256 half = shift_right(order, 1);
  unsigned max_bits = 0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    ks[i] = scalars[i].value();
    pts[i] = &points[i];
    if (ks[i] > half) {
      sub_with_borrow(ks[i], order, ks[i]);
      negated.push_back(points[i].negate());
      pts[i] = &negated.back();
    }
    max_bits = std::max(max_bits, ks[i].bit_length());
  }
  if (max_bits == 0) return GroupPoint::infinity(c);

  if (points.size() <= 32) {
    // Straus: shared doublings, per-point 4-bit tables.
    std::vector<std::array<Jacobian, 16>> tables(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      tables[i][0] = ops.infinity();
      tables[i][1] = ops.from_affine(*pts[i]);
      for (int j = 2; j < 16; ++j) tables[i][j] = ops.add_mixed(tables[i][j - 1], *pts[i]);
    }
    Jacobian acc = ops.infinity();
    int top = (static_cast<int>(max_bits) + 3) / 4;
    for (int w = top - 1; w >= 0; --w) {
      for (int d = 0; d < 4; ++d) acc = ops.dbl(acc);
      for (std::size_t i = 0; i < points.size(); ++i) {
        unsigned nib = static_cast<unsigned>((ks[i].limb[w / 16] >> (4 * (w % 16))) & 0xf);
        if (nib) acc = ops.add(acc, tables[i][nib]);
      }
    }
    return ops.to_affine(acc);
  }

  unsigned c_bits = window_bits(points.size());
  unsigned windows = (max_bits + c_bits - 1) / c_bits;
  std::vector<Jacobian> buckets(std::size_t{1} << c_bits);
  Jacobian total = ops.infinity();
  for (int w = static_cast<int>(windows) - 1; w >= 0; --w) {
    for (unsigned d = 0; d < c_bits; ++d) total = ops.dbl(total);
    std::fill(buckets.begin(), buckets.end(), ops.infinity());
    for (std::size_t i = 0; i < points.size(); ++i) {
      unsigned idx = extract(ks[i], static_cast<unsigned>(w) * c_bits, c_bits);
      if (idx) buckets[idx] = ops.add_mixed(buckets[idx], *pts[i]);
    }
    Jacobian running = ops.infinity();
    Jacobian sum = ops.infinity();
    for (std::size_t b = buckets.size() - 1; b >= 1; --b) {
      running = ops.add(running, buckets[b]);
      sum = ops.add(sum, running);
    }
    total = ops.add(total, sum);
  }
  return ops.to_affine(total);
}

FixedBaseTable::FixedBaseTable(const GroupPoint& base)
    : curve_(&base.curve()), windows_((curve_->order().bit_length() + 3) / 4) {
  table_.reserve(windows_ * 15);
  GroupPoint pw = base;
  for (unsigned w = 0; w < windows_; ++w) {
    GroupPoint acc = pw;
    for (unsigned j = 1; j <= 15; ++j) {
      table_.push_back(acc);
      acc = acc + pw;
    }
    pw = acc;  // 16 * pw
  }
}

GroupPoint FixedBaseTable::mul(const FieldElement& k) const {
  PointOps ops{*curve_};
  U256 v = k.value();
  Jacobian acc = ops.infinity();
  for (unsigned w = 0; w < windows_; ++w) {
    unsigned nib = static_cast<unsigned>((v.limb[w / 16] >> (4 * (w % 16))) & 0xf);
    if (nib) acc = ops.add_mixed(acc, table_[w * 15 + nib - 1]);
  }
  return ops.to_affine(acc);
}

}  // namespace vdi::algebra
