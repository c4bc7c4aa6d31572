#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vdi/commit/pedersen.hpp"

namespace vdi::gadgets {

using algebra::FieldElement;
using algebra::GroupPoint;
using algebra::PrimeField;
using commit::CommitmentKey;

/// Prover-side view of a committed tensor: values (already padded to a power
/// of two), blinding and the published commitment.
struct CommittedTensor {
  std::vector<FieldElement> values;
  FieldElement blinding;
  GroupPoint commitment;

  static CommittedTensor commit(const CommitmentKey& key, std::vector<FieldElement> values, util::Csprng& rng);
  static CommittedTensor commit_with(const CommitmentKey& key, std::vector<FieldElement> values,
                                     const FieldElement& blinding);
  unsigned num_vars() const;
};

std::vector<FieldElement> to_field(const PrimeField& f, std::span<const std::int64_t> values);
/// Zero-pads to the next power of two.
std::vector<FieldElement> to_field_padded(const PrimeField& f, std::span<const std::int64_t> values);

}  // namespace vdi::gadgets
