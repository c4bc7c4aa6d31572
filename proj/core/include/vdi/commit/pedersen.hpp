#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vdi/algebra/curve.hpp"
#include "vdi/transcript/transcript.hpp"
#include "vdi/util/bytes.hpp"
#include "vdi/util/csprng.hpp"
#include "vdi/verdict.hpp"

namespace vdi::commit {

using algebra::CurveProfile;
using algebra::FieldElement;
using algebra::GroupPoint;
using algebra::PrimeField;

/// Generators h, g, g_1..g_capacity for vector commitments of dimension up to
/// capacity. Keys with equal (profile, tag) share one generator list.
class CommitmentKey {
 public:
  static constexpr std::string_view kDefaultTag = "vdi/pedersen/v1";

  CommitmentKey(const CurveProfile& profile, std::size_t capacity, std::string_view tag = kDefaultTag);

  const CurveProfile& profile() const { return *profile_; }
  const PrimeField& field() const { return profile_->scalar_field(); }
  std::size_t capacity() const { return capacity_; }
  const GroupPoint& h() const { return (*gens_)[0]; }
  const GroupPoint& g() const { return (*gens_)[1]; }
  /// g_1..g_d. Throws DimensionMismatch if d exceeds the capacity.
  std::span<const GroupPoint> basis(std::size_t d) const;

  /// h^r, through a precomputed fixed-base table.
  GroupPoint h_pow(const FieldElement& r) const;
  GroupPoint g_pow(const FieldElement& t) const;

 private:
  const CurveProfile* profile_;
  std::size_t capacity_;
  std::shared_ptr<const std::vector<GroupPoint>> gens_;
  struct FixedBase;
  std::shared_ptr<const FixedBase> h_table_;
  std::shared_ptr<const FixedBase> g_table_;
};

struct PedersenCommitment {
  GroupPoint point;
  std::size_t dim = 0;
};

/// h^r * prod g_i^{S_i}.
PedersenCommitment commit_vector(const CommitmentKey& key, std::span<const FieldElement> s, const FieldElement& r);
/// h^r * g^t, the commitment to a scalar.
GroupPoint commit_scalar(const CommitmentKey& key, const FieldElement& t, const FieldElement& r);

/// Messages of the opening protocol in the order they are sent.
struct OpeningProof {
  GroupPoint c_d;
  GroupPoint c_dy;
  FieldElement e;
  std::vector<FieldElement> s_prime;
  FieldElement r_s_prime;
  FieldElement r_t_prime;

  void write(util::ByteWriter& w) const;
  static OpeningProof read(util::ByteReader& r, const CurveProfile& profile);
  /// Standalone encoding: magic "PDOP", version, profile id, then the fields.
  std::vector<std::uint8_t> serialize(const CurveProfile& profile) const;
  static OpeningProof deserialize(std::span<const std::uint8_t> bytes, const CurveProfile& profile);
};

/// Prover's one-time randomness D, r1, r2.
struct OpeningMasks {
  std::vector<FieldElement> d;
  FieldElement r1;
  FieldElement r2;

  static OpeningMasks sample(const PrimeField& f, std::size_t dim, util::Csprng& rng);
};

/// Proves knowledge of (S, r_S) opening c_s and (t, r_t) opening c_t with
/// <S, y> = t. Throws WitnessInconsistent when the relation is false.
OpeningProof prove_opening(const CommitmentKey& key, const GroupPoint& c_s, const GroupPoint& c_t,
                           std::span<const FieldElement> s, const FieldElement& r_s, const FieldElement& t,
                           const FieldElement& r_t, std::span<const FieldElement> y, transcript::Transcript& tr,
                           util::Csprng& rng);
/// Same with caller-chosen masks; reusing masks across proofs leaks S.
OpeningProof prove_opening(const CommitmentKey& key, const GroupPoint& c_s, const GroupPoint& c_t,
                           std::span<const FieldElement> s, const FieldElement& r_s, const FieldElement& t,
                           const FieldElement& r_t, std::span<const FieldElement> y, transcript::Transcript& tr,
                           const OpeningMasks& masks);
/// Skips the relation check so tests can feed inconsistent witnesses.
OpeningProof prove_opening_unchecked(const CommitmentKey& key, const GroupPoint& c_s, const GroupPoint& c_t,
                                     std::span<const FieldElement> s, const FieldElement& r_s, const FieldElement& t,
                                     const FieldElement& r_t, std::span<const FieldElement> y,
                                     transcript::Transcript& tr, const OpeningMasks& masks);

Verdict verify_opening(const CommitmentKey& key, const GroupPoint& c_s, const GroupPoint& c_t,
                       std::span<const FieldElement> y, const OpeningProof& proof, transcript::Transcript& tr);

struct ExtractedWitness {
  std::vector<FieldElement> s;
  FieldElement r_s;
  FieldElement t;
  FieldElement r_t;
};

/// Witness from two accepting transcripts that share (c_D, c_Dy) but have
/// different challenges. Throws InvalidArgument if e1 == e2.
ExtractedWitness extract_witness(const OpeningProof& first, const OpeningProof& second,
                                 std::span<const FieldElement> y);

/// Opens the multilinear extension of a committed vector at `point`, revealing
/// the value. Uses y = (beta(point, b))_b and a public t.
OpeningProof prove_mle_opening(const CommitmentKey& key, const GroupPoint& c_s, std::span<const FieldElement> s,
                               const FieldElement& r_s, std::span<const FieldElement> point,
                               const FieldElement& value, transcript::Transcript& tr, util::Csprng& rng);
Verdict verify_mle_opening(const CommitmentKey& key, const GroupPoint& c_s, std::span<const FieldElement> point,
                           const FieldElement& value, const OpeningProof& proof, transcript::Transcript& tr);

/// One committed vector to open inside a batch.
struct MleClaim {
  GroupPoint commitment;
  FieldElement value;
  const std::vector<FieldElement>* witness = nullptr;  // prover side only
  FieldElement blinding;                               // prover side only
};

/// Opens several commitments at one point with a single proof by opening a
/// random linear combination drawn after the values are absorbed.
OpeningProof prove_mle_batch(const CommitmentKey& key, std::span<const MleClaim> claims,
                             std::span<const FieldElement> point, transcript::Transcript& tr, util::Csprng& rng);
Verdict verify_mle_batch(const CommitmentKey& key, std::span<const MleClaim> claims,
                         std::span<const FieldElement> point, const OpeningProof& proof, transcript::Transcript& tr);

}  // namespace vdi::commit
