#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vdi/gadgets/table.hpp"
#include "vdi/gadgets/tensor.hpp"
#include "vdi/sumcheck/sumcheck.hpp"

namespace vdi::gadgets {

using poly::MultilinearPoly;
using sumcheck::ProverMode;
using transcript::Transcript;

// ---------------------------------------------------------------------------
// Lookup (logarithmic-derivative argument)

struct LookupProof {
  GroupPoint c_e;  // multiplicities
  GroupPoint c_a;  // 1 / (alpha + s_j)
  GroupPoint c_b;  // e_i / (alpha + t_i)
  FieldElement sum;
  std::uint32_t alpha_retries = 0;
  sumcheck::SumCheckProof witness_side;
  sumcheck::SumCheckProof table_side;

  void write(util::ByteWriter& w) const;
  static LookupProof read(util::ByteReader& r, const algebra::CurveProfile& profile);
};

/// e_i = |{j : S_j = T_i}| over padded table rows. Rows missing from the
/// table throw EntryNotInTable, or are skipped when skip_missing is set.
std::vector<std::uint64_t> multiplicities(const LookupTable& table,
                                          std::span<const std::vector<FieldElement>* const> columns,
                                          bool skip_missing = false);

/// Both sides of sum_j 1/(x + s_j) = sum_i e_i/(x + t_i).
std::pair<FieldElement, FieldElement> logup_sides(std::span<const FieldElement> s, std::span<const FieldElement> t,
                                                  std::span<const std::uint64_t> e, const FieldElement& x);

/// Proves every row (columns[0][j], columns[1][j], ...) is a table row.
LookupProof prove_lookup(const CommitmentKey& key, const LookupTable& table,
                         std::span<const CommittedTensor* const> columns, Transcript& tr, util::Csprng& rng,
                         ProverMode mode = ProverMode::Honest);
Verdict verify_lookup(const CommitmentKey& key, const LookupTable& table, std::span<const GroupPoint> columns,
                      unsigned witness_vars, const LookupProof& proof, Transcript& tr);

// ---------------------------------------------------------------------------
// ReLU via sign/magnitude bits

/// bits[0] is the sign bit (1 for z >= 0); bits[1..q] are magnitude bits,
/// most significant first.
struct ReluWitness {
  std::vector<std::vector<FieldElement>> bits;
};

/// Throws MagnitudeOverflow if some |z| >= 2^q.
ReluWitness relu_decompose(const PrimeField& f, std::span<const FieldElement> z, unsigned q);
std::vector<std::int64_t> relu_reference(std::span<const std::int64_t> z);

struct ReluProof {
  std::vector<GroupPoint> bit_commitments;
  sumcheck::SumCheckProof sumcheck;

  void write(util::ByteWriter& w) const;
  static ReluProof read(util::ByteReader& r, const algebra::CurveProfile& profile);
};

/// Requires 2^(q+1) < p so the sign/magnitude encoding is unique.
ReluProof prove_relu(const CommitmentKey& key, const CommittedTensor& z, const CommittedTensor& a, unsigned q,
                     Transcript& tr, util::Csprng& rng);
/// Proves with caller-supplied bits and skips every witness check.
ReluProof prove_relu_unchecked(const CommitmentKey& key, const CommittedTensor& z, const CommittedTensor& a,
                               const ReluWitness& witness, unsigned q, Transcript& tr, util::Csprng& rng);
Verdict verify_relu(const CommitmentKey& key, const GroupPoint& c_z, const GroupPoint& c_a, unsigned num_vars,
                    unsigned q, const ReluProof& proof, Transcript& tr);

/// Largest q the profile's scalar field supports.
unsigned max_relu_bits(const PrimeField& f);

// ---------------------------------------------------------------------------
// Matrix products

/// Logical shapes C (m x n) = A (m x k) * B (k x n). Storage is row-major
/// with each dimension padded to a power of two.
struct MatMulClaim {
  GroupPoint c_a;
  GroupPoint c_b;
  GroupPoint c_c;
  std::size_t m = 0, k = 0, n = 0;
};

struct MatMulProof {
  FieldElement c_value;
  commit::OpeningProof c_opening;
  sumcheck::SumCheckProof sumcheck;

  void write(util::ByteWriter& w) const;
  static MatMulProof read(util::ByteReader& r, const algebra::CurveProfile& profile);
};

/// Pads a logical row-major matrix into power-of-two storage.
std::vector<FieldElement> pad_matrix(const PrimeField& f, std::span<const std::int64_t> values, std::size_t rows,
                                     std::size_t cols);
std::vector<std::int64_t> matmul_reference(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                           std::size_t m, std::size_t k, std::size_t n);

/// Throws ShapeMismatch for inconsistent sizes and, when honest,
/// WitnessInconsistent if C != A * B.
MatMulProof prove_matmul(const CommitmentKey& key, const MatMulClaim& claim, const CommittedTensor& a,
                         const CommittedTensor& b, const CommittedTensor& c, Transcript& tr, util::Csprng& rng,
                         ProverMode mode = ProverMode::Honest);
Verdict verify_matmul(const CommitmentKey& key, const MatMulClaim& claim, const MatMulProof& proof, Transcript& tr);

// ---------------------------------------------------------------------------
// Quantized linear layer: y = round((W x + bias) / scale), half up.

struct LinearClaim {
  GroupPoint c_w;     // out x in, row-major
  GroupPoint c_bias;  // out, at accumulator scale
  GroupPoint c_x;
  GroupPoint c_y;
  std::size_t in = 0, out = 0;
  std::int64_t scale = 1;  // power of two
};

struct LinearProof {
  GroupPoint c_rem;
  FieldElement y_value;
  FieldElement rem_value;
  FieldElement bias_value;
  commit::OpeningProof point_opening;
  sumcheck::SumCheckProof sumcheck;
  LookupProof rem_range;

  void write(util::ByteWriter& w) const;
  static LinearProof read(util::ByteReader& r, const algebra::CurveProfile& profile);
};

/// Remainder interval [-scale/2, scale/2 - 1] (just {0} for scale 1).
LookupTable remainder_table(std::int64_t scale);

LinearProof prove_linear(const CommitmentKey& key, const LinearClaim& claim, const CommittedTensor& w,
                         const CommittedTensor& bias, const CommittedTensor& x, const CommittedTensor& y,
                         const CommittedTensor& rem, Transcript& tr, util::Csprng& rng,
                         ProverMode mode = ProverMode::Honest);
Verdict verify_linear(const CommitmentKey& key, const LinearClaim& claim, const LinearProof& proof, Transcript& tr);

}  // namespace vdi::gadgets
