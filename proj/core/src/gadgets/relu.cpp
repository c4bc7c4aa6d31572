#include "vdi/gadgets/gadgets.hpp"

namespace vdi::gadgets {

using sumcheck::FactorBinding;
using sumcheck::Shape;

namespace {

// Factor layout: Z, A, z_0..z_q, M.
Shape relu_shape(unsigned vars, unsigned q, const FieldElement& r, std::vector<FieldElement> u) {
  const PrimeField& f = r.field();
  const std::uint32_t z = 0, a = 1, sign = 2, m = 3 + q;
  Shape s;
  s.num_vars = vars;
  s.num_factors = 4 + q;
  s.degree_bound = 3;
  s.eq_point = std::move(u);
  FieldElement one = FieldElement::one(f);
  // (2 z0 - 1) M - Z + (z0 M - A) r
  s.terms.push_back({one + one + r, {sign, m}, true});
  s.terms.push_back({-one, {m}, true});
  s.terms.push_back({-one, {z}, true});
  s.terms.push_back({-r, {a}, true});
  // + sum_i z_i (z_i - 1) r^{i+2}
  FieldElement pw = r * r;
  for (std::uint32_t i = 0; i <= q; ++i) {
    s.terms.push_back({pw, {sign + i, sign + i}, true});
    s.terms.push_back({-pw, {sign + i}, true});
    pw *= r;
  }
  return s;
}

std::vector<std::pair<std::uint32_t, FieldElement>> magnitude_combination(const PrimeField& f, unsigned q) {
  std::vector<std::pair<std::uint32_t, FieldElement>> combo;
  for (unsigned k = 1; k <= q; ++k) combo.push_back({2 + k, FieldElement::from_u64(f, std::uint64_t{1} << (q - k))});
  return combo;
}

void absorb_statement(Transcript& tr, const GroupPoint& c_z, const GroupPoint& c_a, unsigned vars, unsigned q) {
  tr.absorb_u64("relu/q", q);
  tr.absorb_u64("relu/num-vars", vars);
  tr.absorb_point("relu/c_z", c_z);
  tr.absorb_point("relu/c_a", c_a);
}

void check_q(const PrimeField& f, unsigned q) {
  if (q == 0 || q > max_relu_bits(f)) {
    throw Error(ErrorCode::MagnitudeOverflow,
                "bit width " + std::to_string(q) + " unsupported (max " + std::to_string(max_relu_bits(f)) + ")");
  }
}

ReluProof prove_internal(const CommitmentKey& key, const CommittedTensor& z, const CommittedTensor& a,
                         const ReluWitness& witness, unsigned q, Transcript& tr, util::Csprng& rng,
                         sumcheck::ProverMode mode) {
  const PrimeField& f = key.field();
  check_q(f, q);
  std::size_t n = z.values.size();
  unsigned vars = poly::log2_ceil(n);
  if (n != (std::size_t{1} << vars) || a.values.size() != n || witness.bits.size() != q + 1) {
    throw Error(ErrorCode::ShapeMismatch, "relu tensors must share one padded size");
  }
  absorb_statement(tr, z.commitment, a.commitment, vars, q);

  ReluProof proof;
  std::vector<CommittedTensor> bits;
  for (const auto& b : witness.bits) {
    if (b.size() != n) throw Error(ErrorCode::ShapeMismatch, "bit tensor has wrong size");
    bits.push_back(CommittedTensor::commit(key, b, rng));
    proof.bit_commitments.push_back(bits.back().commitment);
    tr.absorb_point("relu/bit", bits.back().commitment);
  }
  FieldElement r = tr.challenge("relu/r");
  auto u = tr.challenges("relu/u", vars);

  std::vector<FieldElement> m(n, FieldElement::zero(f));
  for (unsigned k = 1; k <= q; ++k) {
    FieldElement w = FieldElement::from_u64(f, std::uint64_t{1} << (q - k));
    for (std::size_t j = 0; j < n; ++j) {
      if (!bits[k].values[j].is_zero()) m[j] += w * bits[k].values[j];
    }
  }
  std::vector<MultilinearPoly> tables;
  std::vector<FactorBinding> bindings;
  auto bind = [&](const CommittedTensor& t) {
    tables.push_back(MultilinearPoly::from_evals(f, t.values));
    bindings.push_back(FactorBinding::committed(t.commitment));
    bindings.back().witness = &t.values;
    bindings.back().blinding = t.blinding;
  };
  bind(z);
  bind(a);
  for (const auto& b : bits) bind(b);
  tables.push_back(MultilinearPoly::from_evals(f, m));
  bindings.push_back(FactorBinding::derived(magnitude_combination(f, q)));

  proof.sumcheck = sumcheck::prove(relu_shape(vars, q, r, u), std::move(tables), FieldElement::zero(f), bindings,
                                   &key, tr, rng, mode);
  return proof;
}

}  // namespace

unsigned max_relu_bits(const PrimeField& f) {
  unsigned bl = f.bit_length();
  return std::min(bl >= 2 ? bl - 2 : 0u, 62u);
}

ReluWitness relu_decompose(const PrimeField& f, std::span<const FieldElement> z, unsigned q) {
  check_q(f, q);
  ReluWitness w;
  w.bits.assign(q + 1, std::vector<FieldElement>(z.size(), FieldElement::zero(f)));
  FieldElement one = FieldElement::one(f);
  const std::uint64_t limit = std::uint64_t{1} << q;
  for (std::size_t j = 0; j < z.size(); ++j) {
    std::int64_t v = z[j].to_int();
    std::uint64_t mag = v < 0 ? static_cast<std::uint64_t>(-(v + 1)) + 1 : static_cast<std::uint64_t>(v);
    if (mag >= limit) {
      throw Error(ErrorCode::MagnitudeOverflow,
                  "|" + std::to_string(v) + "| does not fit in " + std::to_string(q) + " magnitude bits");
    }
    if (v >= 0) w.bits[0][j] = one;
    for (unsigned k = 1; k <= q; ++k) {
      if ((mag >> (q - k)) & 1u) w.bits[k][j] = one;
    }
  }
  return w;
}

std::vector<std::int64_t> relu_reference(std::span<const std::int64_t> z) {
  std::vector<std::int64_t> out;
  out.reserve(z.size());
  for (auto v : z) out.push_back(v > 0 ? v : 0);
  return out;
}

void ReluProof::write(util::ByteWriter& w) const {
  w.u32(static_cast<std::uint32_t>(bit_commitments.size()));
  for (const auto& c : bit_commitments) w.point(c);
  sumcheck.write(w);
}

ReluProof ReluProof::read(util::ByteReader& r, const algebra::CurveProfile& profile) {
  ReluProof p;
  std::uint32_t n = r.u32();
  if (n > 64) throw Error(ErrorCode::MalformedProof, "too many relu bit commitments");
  for (std::uint32_t i = 0; i < n; ++i) p.bit_commitments.push_back(r.point(profile));
  p.sumcheck = sumcheck::SumCheckProof::read(r, profile);
  return p;
}

ReluProof prove_relu(const CommitmentKey& key, const CommittedTensor& z, const CommittedTensor& a, unsigned q,
                     Transcript& tr, util::Csprng& rng) {
  auto witness = relu_decompose(key.field(), z.values, q);
  for (std::size_t j = 0; j < z.values.size(); ++j) {
    FieldElement expect = witness.bits[0][j].is_zero() ? FieldElement::zero(key.field()) : z.values[j];
    if (!(a.values[j] == expect)) {
      throw Error(ErrorCode::WitnessInconsistent, "relu output differs from max(0, z) at " + std::to_string(j));
    }
  }
  return prove_internal(key, z, a, witness, q, tr, rng, sumcheck::ProverMode::Honest);
}

ReluProof prove_relu_unchecked(const CommitmentKey& key, const CommittedTensor& z, const CommittedTensor& a,
                               const ReluWitness& witness, unsigned q, Transcript& tr, util::Csprng& rng) {
  return prove_internal(key, z, a, witness, q, tr, rng, sumcheck::ProverMode::Dishonest);
}

Verdict verify_relu(const CommitmentKey& key, const GroupPoint& c_z, const GroupPoint& c_a, unsigned num_vars,
                    unsigned q, const ReluProof& proof, Transcript& tr) {
  const PrimeField& f = key.field();
  if (q == 0 || q > max_relu_bits(f)) return Verdict::reject("relu/bit-width");
  if (proof.bit_commitments.size() != q + 1) return Verdict::reject("relu/bit-count");
  absorb_statement(tr, c_z, c_a, num_vars, q);
  for (const auto& c : proof.bit_commitments) tr.absorb_point("relu/bit", c);
  FieldElement r = tr.challenge("relu/r");
  auto u = tr.challenges("relu/u", num_vars);
  std::vector<FactorBinding> bindings;
  bindings.push_back(FactorBinding::committed(c_z));
  bindings.push_back(FactorBinding::committed(c_a));
  for (const auto& c : proof.bit_commitments) bindings.push_back(FactorBinding::committed(c));
  bindings.push_back(FactorBinding::derived(magnitude_combination(f, q)));
  auto out = sumcheck::verify(relu_shape(num_vars, q, r, u), FieldElement::zero(f), bindings, &key, proof.sumcheck, tr);
  if (!out.verdict) return Verdict::reject("relu/" + out.verdict.failed_check);
  return Verdict::accept();
}

}  // namespace vdi::gadgets
