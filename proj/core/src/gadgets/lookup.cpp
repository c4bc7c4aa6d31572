#include <map>

#include "vdi/gadgets/gadgets.hpp"

namespace vdi::gadgets {

using sumcheck::FactorBinding;
using sumcheck::Shape;
using sumcheck::Term;

namespace {

constexpr std::uint32_t kMaxAlphaRetries = 4;

std::size_t padded_rows(const LookupTable& t) { return std::size_t{1} << poly::log2_ceil(t.rows()); }

// Table columns in the field, padded with copies of row 0.
std::vector<std::vector<FieldElement>> table_columns(const PrimeField& f, const LookupTable& t) {
  std::size_t n = padded_rows(t);
  std::vector<std::vector<FieldElement>> cols;
  for (const auto& c : t.columns) {
    auto col = to_field(f, c);
    col.resize(n, col[0]);
    cols.push_back(std::move(col));
  }
  return cols;
}

std::vector<FieldElement> fold(std::span<const std::vector<FieldElement>> cols, const FieldElement& r) {
  std::vector<FieldElement> out = cols[0];
  FieldElement pw = r;
  for (std::size_t c = 1; c < cols.size(); ++c) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += cols[c][i] * pw;
    pw *= r;
  }
  return out;
}

void absorb_statement(Transcript& tr, const LookupTable& table, std::span<const GroupPoint> cols,
                      unsigned witness_vars) {
  util::ByteWriter w;
  table.write_descriptor(w);
  tr.absorb("lookup/table", w.data());
  tr.absorb_u64("lookup/witness-vars", witness_vars);
  for (const auto& c : cols) tr.absorb_point("lookup/column", c);
}

bool any_zero(std::span<const FieldElement> base, const FieldElement& alpha) {
  for (const auto& v : base) {
    if ((v + alpha).is_zero()) return true;
  }
  return false;
}

Shape witness_shape(unsigned vars, std::size_t width, const FieldElement& lambda, const FieldElement& alpha,
                    const FieldElement& r, std::vector<FieldElement> u) {
  const PrimeField& f = r.field();
  Shape s;
  s.num_vars = vars;
  s.num_factors = 1 + width;
  s.degree_bound = 3;
  s.eq_point = std::move(u);
  s.terms.push_back({FieldElement::one(f), {0}, false});
  s.terms.push_back({lambda * alpha, {0}, true});
  FieldElement pw = FieldElement::one(f);
  for (std::uint32_t c = 0; c < width; ++c) {
    s.terms.push_back({lambda * pw, {0, 1 + c}, true});
    pw *= r;
  }
  s.terms.push_back({-lambda, {}, true});
  return s;
}

// Factors: b, folded table t, e.
Shape table_shape(unsigned vars, const FieldElement& lambda, const FieldElement& alpha, std::vector<FieldElement> u) {
  const PrimeField& f = alpha.field();
  Shape s;
  s.num_vars = vars;
  s.num_factors = 3;
  s.degree_bound = 3;
  s.eq_point = std::move(u);
  s.terms.push_back({FieldElement::one(f), {0}, false});
  s.terms.push_back({lambda * alpha, {0}, true});
  s.terms.push_back({lambda, {0, 1}, true});
  s.terms.push_back({-lambda, {2}, true});
  return s;
}

}  // namespace

void LookupProof::write(util::ByteWriter& w) const {
  w.point(c_e);
  w.point(c_a);
  w.point(c_b);
  w.field(sum);
  w.u32(alpha_retries);
  witness_side.write(w);
  table_side.write(w);
}

LookupProof LookupProof::read(util::ByteReader& r, const algebra::CurveProfile& profile) {
  LookupProof p;
  p.c_e = r.point(profile);
  p.c_a = r.point(profile);
  p.c_b = r.point(profile);
  p.sum = r.field(profile.scalar_field());
  p.alpha_retries = r.u32();
  p.witness_side = sumcheck::SumCheckProof::read(r, profile);
  p.table_side = sumcheck::SumCheckProof::read(r, profile);
  return p;
}

std::vector<std::uint64_t> multiplicities(const LookupTable& table,
                                          std::span<const std::vector<FieldElement>* const> columns,
                                          bool skip_missing) {
  if (columns.size() != table.width()) throw Error(ErrorCode::ShapeMismatch, "lookup column count mismatch");
  std::map<std::vector<std::int64_t>, std::size_t> index;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    std::vector<std::int64_t> row;
    for (const auto& c : table.columns) row.push_back(c[i]);
    index.emplace(std::move(row), i);
  }
  std::vector<std::uint64_t> e(padded_rows(table), 0);
  std::size_t n = columns[0]->size();
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::int64_t> row;
    bool representable = true;
    for (const auto* c : columns) {
      if (c->size() != n) throw Error(ErrorCode::ShapeMismatch, "lookup columns differ in length");
      try {
        row.push_back((*c)[j].to_int());
      } catch (const Error&) {
        representable = false;
      }
    }
    auto it = representable ? index.find(row) : index.end();
    if (it == index.end()) {
      if (skip_missing) continue;
      throw Error(ErrorCode::EntryNotInTable, "witness row " + std::to_string(j) + " is not in the " +
                                                  std::string(to_string(table.fn)) + " table");
    }
    ++e[it->second];
  }
  return e;
}

std::pair<FieldElement, FieldElement> logup_sides(std::span<const FieldElement> s, std::span<const FieldElement> t,
                                                  std::span<const std::uint64_t> e, const FieldElement& x) {
  const PrimeField& f = x.field();
  FieldElement lhs = FieldElement::zero(f), rhs = FieldElement::zero(f);
  for (const auto& v : s) lhs += (x + v).inverse();
  for (std::size_t i = 0; i < t.size(); ++i) rhs += FieldElement::from_u64(f, e[i]) * (x + t[i]).inverse();
  return {lhs, rhs};
}

LookupProof prove_lookup(const CommitmentKey& key, const LookupTable& table,
                         std::span<const CommittedTensor* const> columns, Transcript& tr, util::Csprng& rng,
                         ProverMode mode) {
  const PrimeField& f = key.field();
  if (columns.size() != table.width() || columns.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "lookup needs one committed tensor per table column");
  }
  std::size_t n1 = columns[0]->values.size();
  unsigned v1 = poly::log2_ceil(n1);
  if (n1 != (std::size_t{1} << v1)) throw Error(ErrorCode::ShapeMismatch, "lookup columns must be padded");
  std::vector<const std::vector<FieldElement>*> col_values;
  std::vector<GroupPoint> col_commitments;
  for (const auto* c : columns) {
    if (c->values.size() != n1) throw Error(ErrorCode::ShapeMismatch, "lookup columns differ in length");
    col_values.push_back(&c->values);
    col_commitments.push_back(c->commitment);
  }
  absorb_statement(tr, table, col_commitments, v1);

  auto e_counts = multiplicities(table, col_values, mode == ProverMode::Dishonest);
  std::vector<FieldElement> e;
  for (auto c : e_counts) e.push_back(FieldElement::from_u64(f, c));
  auto tcols = table_columns(f, table);
  unsigned v2 = poly::log2_ceil(tcols[0].size());

  LookupProof proof;
  auto e_t = CommittedTensor::commit(key, e, rng);
  proof.c_e = e_t.commitment;
  tr.absorb_point("lookup/c_e", proof.c_e);

  FieldElement r = tr.challenge("lookup/fold");
  std::vector<std::vector<FieldElement>> wcols;
  for (const auto* c : col_values) wcols.push_back(*c);
  auto s = fold(wcols, r);
  auto t = fold(tcols, r);
  FieldElement alpha = tr.challenge("lookup/alpha");
  while (any_zero(s, alpha) || any_zero(t, alpha)) {
    if (++proof.alpha_retries > kMaxAlphaRetries) throw Error(ErrorCode::WitnessInconsistent, "no usable alpha");
    tr.absorb_u64("lookup/retry", proof.alpha_retries);
    alpha = tr.challenge("lookup/alpha");
  }

  std::vector<FieldElement> a(n1), b(t.size());
  for (std::size_t j = 0; j < n1; ++j) a[j] = alpha + s[j];
  for (std::size_t i = 0; i < t.size(); ++i) b[i] = alpha + t[i];
  algebra::batch_invert(a);
  algebra::batch_invert(b);
  for (std::size_t i = 0; i < t.size(); ++i) b[i] *= e[i];

  auto a_t = CommittedTensor::commit(key, a, rng);
  auto b_t = CommittedTensor::commit(key, b, rng);
  proof.c_a = a_t.commitment;
  proof.c_b = b_t.commitment;
  tr.absorb_point("lookup/c_a", proof.c_a);
  tr.absorb_point("lookup/c_b", proof.c_b);

  FieldElement sum_a = FieldElement::zero(f), sum_b = FieldElement::zero(f);
  for (const auto& v : a) sum_a += v;
  for (const auto& v : b) sum_b += v;
  if (mode == ProverMode::Honest && !(sum_a == sum_b)) {
    throw Error(ErrorCode::WitnessInconsistent, "lookup sums disagree");
  }
  proof.sum = sum_b;
  tr.absorb_field("lookup/sum", proof.sum);

  // Witness side: sum a = H and a_j (alpha + s_j) = 1.
  FieldElement lambda_w = tr.challenge("lookup/lambda/witness");
  auto u1 = tr.challenges("lookup/u/witness", v1);
  Shape ws = witness_shape(v1, columns.size(), lambda_w, alpha, r, u1);
  std::vector<MultilinearPoly> wtables;
  wtables.push_back(MultilinearPoly::from_evals(f, a));
  for (const auto* c : col_values) wtables.push_back(MultilinearPoly::from_evals(f, *c));
  std::vector<FactorBinding> wb;
  wb.push_back(FactorBinding::committed(a_t.commitment));
  wb.back().witness = &a_t.values;
  wb.back().blinding = a_t.blinding;
  for (const auto* c : columns) {
    wb.push_back(FactorBinding::committed(c->commitment));
    wb.back().witness = &c->values;
    wb.back().blinding = c->blinding;
  }
  proof.witness_side = sumcheck::prove(ws, std::move(wtables), proof.sum, wb, &key, tr, rng, mode);

  // Table side: sum b = H and b_i (alpha + t_i) = e_i.
  FieldElement lambda_t = tr.challenge("lookup/lambda/table");
  auto u2 = tr.challenges("lookup/u/table", v2);
  Shape ts = table_shape(v2, lambda_t, alpha, u2);
  std::vector<MultilinearPoly> ttables;
  ttables.push_back(MultilinearPoly::from_evals(f, b));
  ttables.push_back(MultilinearPoly::from_evals(f, t));
  ttables.push_back(MultilinearPoly::from_evals(f, e));
  std::vector<FactorBinding> tb;
  tb.push_back(FactorBinding::committed(b_t.commitment));
  tb.back().witness = &b_t.values;
  tb.back().blinding = b_t.blinding;
  tb.push_back(FactorBinding::public_fn({}));
  tb.push_back(FactorBinding::committed(e_t.commitment));
  tb.back().witness = &e_t.values;
  tb.back().blinding = e_t.blinding;
  proof.table_side = sumcheck::prove(ts, std::move(ttables), proof.sum, tb, &key, tr, rng, mode);
  return proof;
}

Verdict verify_lookup(const CommitmentKey& key, const LookupTable& table, std::span<const GroupPoint> columns,
                      unsigned witness_vars, const LookupProof& proof, Transcript& tr) {
  const PrimeField& f = key.field();
  if (columns.size() != table.width()) return Verdict::reject("lookup/column-count");
  absorb_statement(tr, table, columns, witness_vars);
  auto tcols = table_columns(f, table);
  unsigned v2 = poly::log2_ceil(tcols[0].size());

  tr.absorb_point("lookup/c_e", proof.c_e);
  FieldElement r = tr.challenge("lookup/fold");
  FieldElement alpha = tr.challenge("lookup/alpha");
  if (proof.alpha_retries > kMaxAlphaRetries) return Verdict::reject("lookup/alpha-retries");
  for (std::uint32_t k = 1; k <= proof.alpha_retries; ++k) {
    tr.absorb_u64("lookup/retry", k);
    alpha = tr.challenge("lookup/alpha");
  }
  tr.absorb_point("lookup/c_a", proof.c_a);
  tr.absorb_point("lookup/c_b", proof.c_b);
  tr.absorb_field("lookup/sum", proof.sum);

  FieldElement lambda_w = tr.challenge("lookup/lambda/witness");
  auto u1 = tr.challenges("lookup/u/witness", witness_vars);
  Shape ws = witness_shape(witness_vars, columns.size(), lambda_w, alpha, r, u1);
  std::vector<FactorBinding> wb;
  wb.push_back(FactorBinding::committed(proof.c_a));
  for (const auto& c : columns) wb.push_back(FactorBinding::committed(c));
  auto wout = sumcheck::verify(ws, proof.sum, wb, &key, proof.witness_side, tr);
  if (!wout.verdict) return Verdict::reject("lookup/witness-side/" + wout.verdict.failed_check);

  FieldElement lambda_t = tr.challenge("lookup/lambda/table");
  auto u2 = tr.challenges("lookup/u/table", v2);
  Shape ts = table_shape(v2, lambda_t, alpha, u2);
  auto t = fold(tcols, r);
  std::vector<FactorBinding> tb;
  tb.push_back(FactorBinding::committed(proof.c_b));
  tb.push_back(FactorBinding::public_fn([&](std::span<const FieldElement> pt) {
    return MultilinearPoly::from_evals(f, t).evaluate(pt);
  }));
  tb.push_back(FactorBinding::committed(proof.c_e));
  auto tout = sumcheck::verify(ts, proof.sum, tb, &key, proof.table_side, tr);
  if (!tout.verdict) return Verdict::reject("lookup/table-side/" + tout.verdict.failed_check);
  return Verdict::accept();
}

}  // namespace vdi::gadgets
