#include "vdi/gadgets/gadgets.hpp"

namespace vdi::gadgets {

using sumcheck::FactorBinding;
using sumcheck::Shape;

namespace {

std::size_t pow2(std::size_t n) { return std::size_t{1} << poly::log2_ceil(n); }

Shape product_shape(unsigned vars) {
  Shape s;
  s.num_vars = vars;
  s.num_factors = 2;
  s.degree_bound = 2;
  return s;
}

Shape with_unit_term(Shape s, const PrimeField& f) {
  s.terms.push_back({FieldElement::one(f), {0, 1}, false});
  return s;
}

// sum_i eq[i] * M[i * cols + b] for every column b.
std::vector<FieldElement> fold_rows(const std::vector<FieldElement>& m, std::size_t rows, std::size_t cols,
                                    const std::vector<FieldElement>& eq) {
  std::vector<FieldElement> out(cols, FieldElement::zero(eq[0].field()));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t b = 0; b < cols; ++b) out[b] += eq[i] * m[i * cols + b];
  }
  return out;
}

// sum_j eq[j] * M[b * cols + j] for every row b.
std::vector<FieldElement> fold_cols(const std::vector<FieldElement>& m, std::size_t rows, std::size_t cols,
                                    const std::vector<FieldElement>& eq) {
  std::vector<FieldElement> out(rows, FieldElement::zero(eq[0].field()));
  for (std::size_t b = 0; b < rows; ++b) {
    for (std::size_t j = 0; j < cols; ++j) out[b] += eq[j] * m[b * cols + j];
  }
  return out;
}

std::vector<FieldElement> concat(const std::vector<FieldElement>& a, const std::vector<FieldElement>& b) {
  std::vector<FieldElement> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void absorb_matmul(Transcript& tr, const MatMulClaim& c) {
  tr.absorb_u64("matmul/m", c.m);
  tr.absorb_u64("matmul/k", c.k);
  tr.absorb_u64("matmul/n", c.n);
  tr.absorb_point("matmul/c_a", c.c_a);
  tr.absorb_point("matmul/c_b", c.c_b);
  tr.absorb_point("matmul/c_c", c.c_c);
}

void absorb_linear(Transcript& tr, const LinearClaim& c) {
  tr.absorb_u64("linear/in", c.in);
  tr.absorb_u64("linear/out", c.out);
  tr.absorb_u64("linear/scale", static_cast<std::uint64_t>(c.scale));
  tr.absorb_point("linear/c_w", c.c_w);
  tr.absorb_point("linear/c_bias", c.c_bias);
  tr.absorb_point("linear/c_x", c.c_x);
  tr.absorb_point("linear/c_y", c.c_y);
}

FactorBinding bind(const CommittedTensor& t, std::vector<FieldElement> before, std::vector<FieldElement> after) {
  auto b = FactorBinding::committed(t.commitment, std::move(before), std::move(after));
  b.witness = &t.values;
  b.blinding = t.blinding;
  return b;
}

}  // namespace

std::vector<FieldElement> pad_matrix(const PrimeField& f, std::span<const std::int64_t> values, std::size_t rows,
                                     std::size_t cols) {
  if (values.size() != rows * cols) throw Error(ErrorCode::ShapeMismatch, "matrix payload has wrong size");
  std::size_t rp = pow2(rows), cp = pow2(cols);
  std::vector<FieldElement> out(rp * cp, FieldElement::zero(f));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[i * cp + j] = FieldElement::from_int(f, values[i * cols + j]);
  }
  return out;
}

std::vector<std::int64_t> matmul_reference(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                           std::size_t m, std::size_t k, std::size_t n) {
  if (a.size() != m * k || b.size() != k * n) throw Error(ErrorCode::ShapeMismatch, "matmul operand sizes");
  std::vector<std::int64_t> c(m * n, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < k; ++t) {
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += a[i * k + t] * b[t * n + j];
    }
  }
  return c;
}

void MatMulProof::write(util::ByteWriter& w) const {
  w.field(c_value);
  c_opening.write(w);
  sumcheck.write(w);
}

MatMulProof MatMulProof::read(util::ByteReader& r, const algebra::CurveProfile& profile) {
  MatMulProof p;
  p.c_value = r.field(profile.scalar_field());
  p.c_opening = commit::OpeningProof::read(r, profile);
  p.sumcheck = sumcheck::SumCheckProof::read(r, profile);
  return p;
}

MatMulProof prove_matmul(const CommitmentKey& key, const MatMulClaim& claim, const CommittedTensor& a,
                         const CommittedTensor& b, const CommittedTensor& c, Transcript& tr, util::Csprng& rng,
                         ProverMode mode) {
  const PrimeField& f = key.field();
  std::size_t mp = pow2(claim.m), kp = pow2(claim.k), np = pow2(claim.n);
  if (claim.m == 0 || claim.k == 0 || claim.n == 0 || a.values.size() != mp * kp || b.values.size() != kp * np ||
      c.values.size() != mp * np) {
    throw Error(ErrorCode::ShapeMismatch, "matmul operands do not match the claimed shape");
  }
  absorb_matmul(tr, claim);
  auto rho_i = tr.challenges("matmul/rho-row", poly::log2_ceil(mp));
  auto rho_j = tr.challenges("matmul/rho-col", poly::log2_ceil(np));
  auto point_c = concat(rho_j, rho_i);

  MatMulProof proof;
  proof.c_value = MultilinearPoly::from_evals(f, c.values).evaluate(point_c);
  tr.absorb_field("matmul/c-value", proof.c_value);
  proof.c_opening = commit::prove_mle_opening(key, c.commitment, c.values, c.blinding, point_c, proof.c_value, tr, rng);

  auto eq_i = poly::eq_table(f, rho_i);
  auto eq_j = poly::eq_table(f, rho_j);
  std::vector<MultilinearPoly> tables;
  tables.push_back(MultilinearPoly::from_evals(f, fold_rows(a.values, mp, kp, eq_i)));
  tables.push_back(MultilinearPoly::from_evals(f, fold_cols(b.values, kp, np, eq_j)));
  std::vector<FactorBinding> bindings{bind(a, {}, rho_i), bind(b, rho_j, {})};
  proof.sumcheck = sumcheck::prove(with_unit_term(product_shape(poly::log2_ceil(kp)), f), std::move(tables),
                                   proof.c_value, bindings, &key, tr, rng, mode);
  return proof;
}

Verdict verify_matmul(const CommitmentKey& key, const MatMulClaim& claim, const MatMulProof& proof, Transcript& tr) {
  const PrimeField& f = key.field();
  if (claim.m == 0 || claim.k == 0 || claim.n == 0) return Verdict::reject("matmul/shape");
  absorb_matmul(tr, claim);
  auto rho_i = tr.challenges("matmul/rho-row", poly::log2_ceil(claim.m));
  auto rho_j = tr.challenges("matmul/rho-col", poly::log2_ceil(claim.n));
  auto point_c = concat(rho_j, rho_i);
  tr.absorb_field("matmul/c-value", proof.c_value);
  auto v = commit::verify_mle_opening(key, claim.c_c, point_c, proof.c_value, proof.c_opening, tr);
  if (!v) return Verdict::reject("matmul/c-opening/" + v.failed_check);
  std::vector<FactorBinding> bindings{FactorBinding::committed(claim.c_a, {}, rho_i),
                                      FactorBinding::committed(claim.c_b, rho_j, {})};
  auto out = sumcheck::verify(with_unit_term(product_shape(poly::log2_ceil(claim.k)), f), proof.c_value, bindings,
                              &key, proof.sumcheck, tr);
  if (!out.verdict) return Verdict::reject("matmul/" + out.verdict.failed_check);
  return Verdict::accept();
}

// ---------------------------------------------------------------------------

LookupTable remainder_table(std::int64_t scale) {
  if (scale < 1) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
  if (scale == 1) return range_table(0, 0);
  return range_table(-(scale / 2), scale - scale / 2 - 1);
}

void LinearProof::write(util::ByteWriter& w) const {
  w.point(c_rem);
  w.field(y_value);
  w.field(rem_value);
  w.field(bias_value);
  point_opening.write(w);
  sumcheck.write(w);
  rem_range.write(w);
}

LinearProof LinearProof::read(util::ByteReader& r, const algebra::CurveProfile& profile) {
  const PrimeField& f = profile.scalar_field();
  LinearProof p;
  p.c_rem = r.point(profile);
  p.y_value = r.field(f);
  p.rem_value = r.field(f);
  p.bias_value = r.field(f);
  p.point_opening = commit::OpeningProof::read(r, profile);
  p.sumcheck = sumcheck::SumCheckProof::read(r, profile);
  p.rem_range = LookupProof::read(r, profile);
  return p;
}

LinearProof prove_linear(const CommitmentKey& key, const LinearClaim& claim, const CommittedTensor& w,
                         const CommittedTensor& bias, const CommittedTensor& x, const CommittedTensor& y,
                         const CommittedTensor& rem, Transcript& tr, util::Csprng& rng, ProverMode mode) {
  const PrimeField& f = key.field();
  std::size_t ip = pow2(claim.in), op = pow2(claim.out);
  if (claim.in == 0 || claim.out == 0 || w.values.size() != ip * op || bias.values.size() != op ||
      x.values.size() != ip || y.values.size() != op || rem.values.size() != op) {
    throw Error(ErrorCode::ShapeMismatch, "linear layer tensors do not match the claimed shape");
  }
  absorb_linear(tr, claim);
  LinearProof proof;
  proof.c_rem = rem.commitment;
  tr.absorb_point("linear/c_rem", proof.c_rem);
  auto rho = tr.challenges("linear/rho", poly::log2_ceil(op));

  proof.y_value = MultilinearPoly::from_evals(f, y.values).evaluate(rho);
  proof.rem_value = MultilinearPoly::from_evals(f, rem.values).evaluate(rho);
  proof.bias_value = MultilinearPoly::from_evals(f, bias.values).evaluate(rho);
  tr.absorb_fields("linear/values", std::vector<FieldElement>{proof.y_value, proof.rem_value, proof.bias_value});
  std::vector<commit::MleClaim> claims{{y.commitment, proof.y_value, &y.values, y.blinding},
                                       {rem.commitment, proof.rem_value, &rem.values, rem.blinding},
                                       {bias.commitment, proof.bias_value, &bias.values, bias.blinding}};
  proof.point_opening = commit::prove_mle_batch(key, claims, rho, tr, rng);

  FieldElement h = FieldElement::from_int(f, claim.scale) * proof.y_value + proof.rem_value - proof.bias_value;
  auto eq = poly::eq_table(f, rho);
  std::vector<MultilinearPoly> tables;
  tables.push_back(MultilinearPoly::from_evals(f, fold_rows(w.values, op, ip, eq)));
  tables.push_back(MultilinearPoly::from_evals(f, x.values));
  std::vector<FactorBinding> bindings{bind(w, {}, rho), bind(x, {}, {})};
  proof.sumcheck = sumcheck::prove(with_unit_term(product_shape(poly::log2_ceil(ip)), f), std::move(tables), h,
                                   bindings, &key, tr, rng, mode);

  const CommittedTensor* cols[] = {&rem};
  proof.rem_range = prove_lookup(key, remainder_table(claim.scale), cols, tr, rng, mode);
  return proof;
}

Verdict verify_linear(const CommitmentKey& key, const LinearClaim& claim, const LinearProof& proof, Transcript& tr) {
  const PrimeField& f = key.field();
  if (claim.in == 0 || claim.out == 0 || claim.scale < 1) return Verdict::reject("linear/shape");
  absorb_linear(tr, claim);
  tr.absorb_point("linear/c_rem", proof.c_rem);
  auto rho = tr.challenges("linear/rho", poly::log2_ceil(claim.out));
  tr.absorb_fields("linear/values", std::vector<FieldElement>{proof.y_value, proof.rem_value, proof.bias_value});
  std::vector<commit::MleClaim> claims{{claim.c_y, proof.y_value, nullptr, {}},
                                       {proof.c_rem, proof.rem_value, nullptr, {}},
                                       {claim.c_bias, proof.bias_value, nullptr, {}}};
  auto v = commit::verify_mle_batch(key, claims, rho, proof.point_opening, tr);
  if (!v) return Verdict::reject("linear/output-opening/" + v.failed_check);

  FieldElement h = FieldElement::from_int(f, claim.scale) * proof.y_value + proof.rem_value - proof.bias_value;
  std::vector<FactorBinding> bindings{FactorBinding::committed(claim.c_w, {}, rho),
                                      FactorBinding::committed(claim.c_x)};
  auto out = sumcheck::verify(with_unit_term(product_shape(poly::log2_ceil(claim.in)), f), h, bindings, &key,
                              proof.sumcheck, tr);
  if (!out.verdict) return Verdict::reject("linear/" + out.verdict.failed_check);

  GroupPoint cols[] = {proof.c_rem};
  auto range = verify_lookup(key, remainder_table(claim.scale), cols, poly::log2_ceil(claim.out), proof.rem_range, tr);
  if (!range) return Verdict::reject("linear/remainder-range/" + range.failed_check);
  return Verdict::accept();
}

}  // namespace vdi::gadgets
