#include "vdi/commit/pedersen.hpp"

#include <array>
#include <map>
#include <mutex>

#include "vdi/algebra/generators.hpp"
#include "vdi/poly/multilinear.hpp"

namespace vdi::commit {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'P', 'D', 'O', 'P'};
constexpr std::uint8_t kVersion = 1;

std::vector<FieldElement> padded(std::span<const FieldElement> s, std::size_t n, const PrimeField& f) {
  std::vector<FieldElement> out(s.begin(), s.end());
  out.resize(n, FieldElement::zero(f));
  return out;
}

}  // namespace

struct CommitmentKey::FixedBase {
  algebra::FixedBaseTable table;
};

CommitmentKey::CommitmentKey(const CurveProfile& profile, std::size_t capacity, std::string_view tag)
    : profile_(&profile), capacity_(capacity), gens_(algebra::cached_generators(profile, capacity + 2, tag)) {
  static std::mutex mu;
  static std::map<std::pair<const CurveProfile*, std::string>,
                  std::pair<std::shared_ptr<const FixedBase>, std::shared_ptr<const FixedBase>>>
      tables;
  std::lock_guard lock(mu);
  auto& slot = tables[{&profile, std::string(tag)}];
  if (!slot.first) {
    slot.first = std::make_shared<const FixedBase>(FixedBase{algebra::FixedBaseTable(h())});
    slot.second = std::make_shared<const FixedBase>(FixedBase{algebra::FixedBaseTable(g())});
  }
  h_table_ = slot.first;
  g_table_ = slot.second;
}

std::span<const GroupPoint> CommitmentKey::basis(std::size_t d) const {
  if (d > capacity_) {
    throw Error(ErrorCode::DimensionMismatch,
                "dimension " + std::to_string(d) + " exceeds key capacity " + std::to_string(capacity_));
  }
  return std::span<const GroupPoint>(*gens_).subspan(2, d);
}

GroupPoint CommitmentKey::h_pow(const FieldElement& r) const { return h_table_->table.mul(r); }
GroupPoint CommitmentKey::g_pow(const FieldElement& t) const { return g_table_->table.mul(t); }

PedersenCommitment commit_vector(const CommitmentKey& key, std::span<const FieldElement> s, const FieldElement& r) {
  auto basis = key.basis(s.size());
  GroupPoint p = key.h_pow(r);
  if (!s.empty()) p = p + algebra::multi_scalar_mul(basis, s);
  return {p, s.size()};
}

GroupPoint commit_scalar(const CommitmentKey& key, const FieldElement& t, const FieldElement& r) {
  return key.h_pow(r) + key.g_pow(t);
}

// ---------------------------------------------------------------------------

void OpeningProof::write(util::ByteWriter& w) const {
  w.point(c_d);
  w.point(c_dy);
  w.field(e);
  w.fields(s_prime);
  w.field(r_s_prime);
  w.field(r_t_prime);
}

OpeningProof OpeningProof::read(util::ByteReader& r, const CurveProfile& profile) {
  const PrimeField& f = profile.scalar_field();
  OpeningProof p;
  p.c_d = r.point(profile);
  p.c_dy = r.point(profile);
  p.e = r.field(f);
  p.s_prime = r.fields(f);
  p.r_s_prime = r.field(f);
  p.r_t_prime = r.field(f);
  return p;
}

std::vector<std::uint8_t> OpeningProof::serialize(const CurveProfile& profile) const {
  util::ByteWriter w;
  w.bytes(kMagic);
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(profile.id()));
  write(w);
  return w.take();
}

OpeningProof OpeningProof::deserialize(std::span<const std::uint8_t> bytes, const CurveProfile& profile) {
  util::ByteReader r(bytes);
  auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw Error(ErrorCode::MalformedProof, "bad magic");
  if (r.u8() != kVersion) throw Error(ErrorCode::MalformedProof, "unsupported opening proof version");
  if (r.u8() != static_cast<std::uint8_t>(profile.id())) throw Error(ErrorCode::MalformedProof, "profile mismatch");
  OpeningProof p = read(r, profile);
  r.expect_done();
  return p;
}

OpeningMasks OpeningMasks::sample(const PrimeField& f, std::size_t dim, util::Csprng& rng) {
  OpeningMasks m;
  m.d.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) m.d.push_back(rng.field_element(f));
  m.r1 = rng.field_element(f);
  m.r2 = rng.field_element(f);
  return m;
}

// ---------------------------------------------------------------------------

namespace {

void absorb_statement(transcript::Transcript& tr, const GroupPoint& c_s, const GroupPoint& c_t,
                      std::span<const FieldElement> y) {
  tr.absorb_point("pedersen/c_s", c_s);
  tr.absorb_point("pedersen/c_t", c_t);
  tr.absorb_fields("pedersen/y", y);
}

}  // namespace

OpeningProof prove_opening_unchecked(const CommitmentKey& key, const GroupPoint& c_s, const GroupPoint& c_t,
                                     std::span<const FieldElement> s, const FieldElement& r_s, const FieldElement& t,
                                     const FieldElement& r_t, std::span<const FieldElement> y,
                                     transcript::Transcript& tr, const OpeningMasks& masks) {
  (void)t;
  if (s.size() != y.size() || masks.d.size() != s.size()) {
    throw Error(ErrorCode::DimensionMismatch, "opening vectors have different lengths");
  }
  absorb_statement(tr, c_s, c_t, y);
  OpeningProof p;
  p.c_d = commit_vector(key, masks.d, masks.r1).point;
  p.c_dy = commit_scalar(key, algebra::inner_product(masks.d, y), masks.r2);
  tr.absorb_point("pedersen/c_d", p.c_d);
  tr.absorb_point("pedersen/c_dy", p.c_dy);
  p.e = tr.challenge("pedersen/e");
  p.s_prime.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) p.s_prime.push_back(s[i] * p.e + masks.d[i]);
  p.r_s_prime = r_s * p.e + masks.r1;
  p.r_t_prime = r_t * p.e + masks.r2;
  return p;
}

OpeningProof prove_opening(const CommitmentKey& key, const GroupPoint& c_s, const GroupPoint& c_t,
                           std::span<const FieldElement> s, const FieldElement& r_s, const FieldElement& t,
                           const FieldElement& r_t, std::span<const FieldElement> y, transcript::Transcript& tr,
                           const OpeningMasks& masks) {
  if (s.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "opening vectors have different lengths");
  if (!(algebra::inner_product(s, y) == t)) throw Error(ErrorCode::WitnessInconsistent, "<S, y> != t");
  return prove_opening_unchecked(key, c_s, c_t, s, r_s, t, r_t, y, tr, masks);
}

OpeningProof prove_opening(const CommitmentKey& key, const GroupPoint& c_s, const GroupPoint& c_t,
                           std::span<const FieldElement> s, const FieldElement& r_s, const FieldElement& t,
                           const FieldElement& r_t, std::span<const FieldElement> y, transcript::Transcript& tr,
                           util::Csprng& rng) {
  return prove_opening(key, c_s, c_t, s, r_s, t, r_t, y, tr, OpeningMasks::sample(key.field(), s.size(), rng));
}

Verdict verify_opening(const CommitmentKey& key, const GroupPoint& c_s, const GroupPoint& c_t,
                       std::span<const FieldElement> y, const OpeningProof& proof, transcript::Transcript& tr) {
  if (proof.s_prime.size() != y.size()) return Verdict::reject("opening/dimension");
  if (y.empty() || y.size() > key.capacity()) return Verdict::reject("opening/dimension");
  absorb_statement(tr, c_s, c_t, y);
  tr.absorb_point("pedersen/c_d", proof.c_d);
  tr.absorb_point("pedersen/c_dy", proof.c_dy);
  FieldElement e = tr.challenge("pedersen/e");
  if (!(e == proof.e)) return Verdict::reject("opening/challenge");

  // c_S^e * c_D == h^{r_S'} g^{S'}
  std::vector<GroupPoint> pts(key.basis(y.size()).begin(), key.basis(y.size()).end());
  std::vector<FieldElement> ks = proof.s_prime;
  pts.push_back(c_s);
  ks.push_back(-e);
  GroupPoint lhs = algebra::multi_scalar_mul(pts, ks) + key.h_pow(proof.r_s_prime);
  if (!(lhs == proof.c_d)) return Verdict::reject("opening/vector");

  // c_t^e * c_{<D,y>} == h^{r_t'} g^{t'} with t' recomputed here
  FieldElement t_prime = algebra::inner_product(proof.s_prime, y);
  GroupPoint rhs = commit_scalar(key, t_prime, proof.r_t_prime);
  GroupPoint left = c_t * e + proof.c_dy;
  if (!(left == rhs)) return Verdict::reject("opening/inner-product");
  return Verdict::accept();
}

ExtractedWitness extract_witness(const OpeningProof& first, const OpeningProof& second,
                                 std::span<const FieldElement> y) {
  if (first.e == second.e) throw Error(ErrorCode::InvalidArgument, "transcripts share a challenge");
  if (first.s_prime.size() != second.s_prime.size()) {
    throw Error(ErrorCode::DimensionMismatch, "transcripts open vectors of different size");
  }
  FieldElement inv = (first.e - second.e).inverse();
  ExtractedWitness w;
  for (std::size_t i = 0; i < first.s_prime.size(); ++i) w.s.push_back((first.s_prime[i] - second.s_prime[i]) * inv);
  w.r_s = (first.r_s_prime - second.r_s_prime) * inv;
  w.r_t = (first.r_t_prime - second.r_t_prime) * inv;
  w.t = algebra::inner_product(w.s, y);
  return w;
}

// ---------------------------------------------------------------------------

OpeningProof prove_mle_opening(const CommitmentKey& key, const GroupPoint& c_s, std::span<const FieldElement> s,
                               const FieldElement& r_s, std::span<const FieldElement> point,
                               const FieldElement& value, transcript::Transcript& tr, util::Csprng& rng) {
  const PrimeField& f = key.field();
  std::size_t n = std::size_t{1} << point.size();
  if (s.size() > n) throw Error(ErrorCode::DimensionMismatch, "vector longer than the opening hypercube");
  auto y = poly::eq_table(f, point);
  auto full = padded(s, n, f);
  FieldElement zero = FieldElement::zero(f);
  return prove_opening(key, c_s, key.g_pow(value), full, r_s, value, zero, y, tr, rng);
}

Verdict verify_mle_opening(const CommitmentKey& key, const GroupPoint& c_s, std::span<const FieldElement> point,
                           const FieldElement& value, const OpeningProof& proof, transcript::Transcript& tr) {
  if (point.size() >= 63) return Verdict::reject("opening/dimension");
  std::size_t n = std::size_t{1} << point.size();
  if (n > key.capacity()) return Verdict::reject("opening/dimension");
  auto y = poly::eq_table(key.field(), point);
  return verify_opening(key, c_s, key.g_pow(value), y, proof, tr);
}

namespace {

// Powers of a batching challenge; a single claim needs no challenge.
std::vector<FieldElement> batch_weights(std::span<const MleClaim> claims, transcript::Transcript& tr,
                                        const PrimeField& f) {
  std::vector<FieldElement> w{FieldElement::one(f)};
  if (claims.size() == 1) return w;
  std::vector<FieldElement> values;
  for (const auto& c : claims) {
    tr.absorb_point("batch/commitment", c.commitment);
    values.push_back(c.value);
  }
  tr.absorb_fields("batch/values", values);
  FieldElement rho = tr.challenge("batch/rho");
  for (std::size_t i = 1; i < claims.size(); ++i) w.push_back(w.back() * rho);
  return w;
}

GroupPoint combined_commitment(std::span<const MleClaim> claims, std::span<const FieldElement> w) {
  if (claims.size() == 1) return claims[0].commitment;
  std::vector<GroupPoint> pts;
  for (const auto& c : claims) pts.push_back(c.commitment);
  return algebra::multi_scalar_mul(pts, w);
}

}  // namespace

OpeningProof prove_mle_batch(const CommitmentKey& key, std::span<const MleClaim> claims,
                             std::span<const FieldElement> point, transcript::Transcript& tr, util::Csprng& rng) {
  const PrimeField& f = key.field();
  if (claims.empty()) throw Error(ErrorCode::InvalidArgument, "empty opening batch");
  auto w = batch_weights(claims, tr, f);
  std::size_t n = std::size_t{1} << point.size();
  std::vector<FieldElement> s(n, FieldElement::zero(f));
  FieldElement r = FieldElement::zero(f);
  FieldElement v = FieldElement::zero(f);
  for (std::size_t k = 0; k < claims.size(); ++k) {
    const auto& c = claims[k];
    if (!c.witness) throw Error(ErrorCode::InvalidArgument, "batch claim without witness");
    if (c.witness->size() > n) throw Error(ErrorCode::DimensionMismatch, "vector longer than the opening hypercube");
    for (std::size_t i = 0; i < c.witness->size(); ++i) s[i] += (*c.witness)[i] * w[k];
    r += c.blinding * w[k];
    v += c.value * w[k];
  }
  return prove_mle_opening(key, combined_commitment(claims, w), s, r, point, v, tr, rng);
}

Verdict verify_mle_batch(const CommitmentKey& key, std::span<const MleClaim> claims,
                         std::span<const FieldElement> point, const OpeningProof& proof, transcript::Transcript& tr) {
  const PrimeField& f = key.field();
  if (claims.empty()) return Verdict::reject("opening/empty-batch");
  auto w = batch_weights(claims, tr, f);
  FieldElement v = FieldElement::zero(f);
  for (std::size_t k = 0; k < claims.size(); ++k) v += claims[k].value * w[k];
  return verify_mle_opening(key, combined_commitment(claims, w), point, v, proof, tr);
}

}  // namespace vdi::commit
