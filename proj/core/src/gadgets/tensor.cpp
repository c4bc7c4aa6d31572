#include "vdi/gadgets/tensor.hpp"

#include "vdi/poly/multilinear.hpp"

namespace vdi::gadgets {

CommittedTensor CommittedTensor::commit(const CommitmentKey& key, std::vector<FieldElement> values,
                                        util::Csprng& rng) {
  return commit_with(key, std::move(values), rng.field_element(key.field()));
}

CommittedTensor CommittedTensor::commit_with(const CommitmentKey& key, std::vector<FieldElement> values,
                                             const FieldElement& blinding) {
  CommittedTensor t;
  t.commitment = commit::commit_vector(key, values, blinding).point;
  t.values = std::move(values);
  t.blinding = blinding;
  return t;
}

unsigned CommittedTensor::num_vars() const { return poly::log2_ceil(values.size()); }

std::vector<FieldElement> to_field(const PrimeField& f, std::span<const std::int64_t> values) {
  std::vector<FieldElement> out;
  out.reserve(values.size());
  for (auto v : values) out.push_back(FieldElement::from_int(f, v));
  return out;
}

std::vector<FieldElement> to_field_padded(const PrimeField& f, std::span<const std::int64_t> values) {
  auto out = to_field(f, values);
  out.resize(std::size_t{1} << poly::log2_ceil(values.size()), FieldElement::zero(f));
  return out;
}

}  // namespace vdi::gadgets
