#include "vdi/poly/multilinear.hpp"

namespace vdi::poly {

unsigned log2_ceil(std::size_t n) {
  unsigned v = 0;
  while ((std::size_t{1} << v) < n) ++v;
  return v;
}

MultilinearPoly::MultilinearPoly(const PrimeField& f, unsigned num_vars)
    : field_(&f), num_vars_(num_vars), evals_(std::size_t{1} << num_vars, FieldElement::zero(f)) {}

MultilinearPoly MultilinearPoly::from_evals(const PrimeField& f, std::vector<FieldElement> evals, unsigned min_vars) {
  MultilinearPoly p;
  p.field_ = &f;
  p.num_vars_ = std::max(log2_ceil(evals.size()), min_vars);
  evals.resize(std::size_t{1} << p.num_vars_, FieldElement::zero(f));
  p.evals_ = std::move(evals);
  return p;
}

MultilinearPoly MultilinearPoly::from_ints(const PrimeField& f, std::span<const std::int64_t> values,
                                           unsigned min_vars) {
  std::vector<FieldElement> e;
  e.reserve(values.size());
  for (auto v : values) e.push_back(FieldElement::from_int(f, v));
  return from_evals(f, std::move(e), min_vars);
}

FieldElement MultilinearPoly::evaluate(std::span<const FieldElement> u) const {
  if (u.size() != num_vars_) {
    throw Error(ErrorCode::DimensionMismatch,
                "point has " + std::to_string(u.size()) + " coordinates, polynomial has " +
                    std::to_string(num_vars_) + " variables");
  }
  if (num_vars_ == 0) return evals_[0];
  std::vector<FieldElement> cur(evals_.size() / 2);
  for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = evals_[2 * i] + u[0] * (evals_[2 * i + 1] - evals_[2 * i]);
  for (unsigned k = 1; k < num_vars_; ++k) {
    std::size_t half = cur.size() / 2;
    for (std::size_t i = 0; i < half; ++i) cur[i] = cur[2 * i] + u[k] * (cur[2 * i + 1] - cur[2 * i]);
    cur.resize(half);
  }
  return cur[0];
}

MultilinearPoly MultilinearPoly::restrict_first_var(const FieldElement& r) const {
  MultilinearPoly p = *this;
  p.fold_in_place(r);
  return p;
}

void MultilinearPoly::fold_in_place(const FieldElement& r) {
  if (num_vars_ == 0) throw Error(ErrorCode::NoVariables, "cannot restrict a constant polynomial");
  std::size_t half = evals_.size() / 2;
  for (std::size_t i = 0; i < half; ++i) evals_[i] = evals_[2 * i] + r * (evals_[2 * i + 1] - evals_[2 * i]);
  evals_.resize(half);
  --num_vars_;
}

std::vector<FieldElement> eq_table(const PrimeField& f, std::span<const FieldElement> u) {
  std::vector<FieldElement> t(std::size_t{1} << u.size());
  t[0] = FieldElement::one(f);
  std::size_t len = 1;
  for (std::size_t k = u.size(); k-- > 0;) {
    for (std::size_t j = len; j-- > 0;) {
      FieldElement hi = t[j] * u[k];
      t[2 * j] = t[j] - hi;
      t[2 * j + 1] = hi;
    }
    len *= 2;
  }
  return t;
}

FieldElement eq_eval(std::span<const FieldElement> u, std::span<const FieldElement> v) {
  if (u.size() != v.size()) throw Error(ErrorCode::DimensionMismatch, "eq points differ in length");
  if (u.empty()) throw Error(ErrorCode::DimensionMismatch, "eq of empty points");
  const PrimeField& f = u[0].field();
  FieldElement one = FieldElement::one(f);
  FieldElement acc = one;
  for (std::size_t i = 0; i < u.size(); ++i) {
    FieldElement uv = u[i] * v[i];
    acc *= uv + uv - u[i] - v[i] + one;
  }
  return acc;
}

FieldElement lagrange_basis(std::span<const FieldElement> u, std::span<const std::uint8_t> b) {
  if (u.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "basis point differs in length");
  if (u.empty()) throw Error(ErrorCode::DimensionMismatch, "basis of empty point");
  const PrimeField& f = u[0].field();
  FieldElement acc = FieldElement::one(f);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (b[i] > 1) throw Error(ErrorCode::InvalidArgument, "basis index must be Boolean");
    acc *= b[i] ? u[i] : FieldElement::one(f) - u[i];
  }
  return acc;
}

UnivariatePoly::UnivariatePoly(const PrimeField& f, std::vector<FieldElement> coeffs)
    : field_(&f), coeffs_(std::move(coeffs)) {
  while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
}

UnivariatePoly UnivariatePoly::interpolate(std::span<const FieldElement> evals) {
  if (evals.empty()) throw Error(ErrorCode::DimensionMismatch, "no evaluations to interpolate");
  const PrimeField& f = evals[0].field();
  std::size_t n = evals.size();
  std::vector<FieldElement> coeffs(n, FieldElement::zero(f));
  for (std::size_t k = 0; k < n; ++k) {
    // basis_k(X) = prod_{j != k} (X - j) / (k - j)
    std::vector<FieldElement> basis{FieldElement::one(f)};
    FieldElement denom = FieldElement::one(f);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k) continue;
      FieldElement neg_j = -FieldElement::from_u64(f, j);
      std::vector<FieldElement> next(basis.size() + 1, FieldElement::zero(f));
      for (std::size_t i = 0; i < basis.size(); ++i) {
        next[i] += basis[i] * neg_j;
        next[i + 1] += basis[i];
      }
      basis = std::move(next);
      denom *= FieldElement::from_int(f, static_cast<std::int64_t>(k) - static_cast<std::int64_t>(j));
    }
    FieldElement scale = evals[k] * denom.inverse();
    for (std::size_t i = 0; i < n; ++i) coeffs[i] += basis[i] * scale;
  }
  return UnivariatePoly(f, std::move(coeffs));
}

FieldElement UnivariatePoly::evaluate(const FieldElement& x) const {
  FieldElement acc = FieldElement::zero(x.field());
  for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * x + coeffs_[i];
  return acc;
}

FieldElement interpolate_at(std::span<const FieldElement> evals, const FieldElement& x) {
  if (evals.empty()) throw Error(ErrorCode::DimensionMismatch, "no evaluations to interpolate");
  const PrimeField& f = evals[0].field();
  std::size_t n = evals.size();
  // Lagrange form over nodes 0..n-1; falls back to the stored value when x is a node.
  std::vector<FieldElement> diffs(n);
  for (std::size_t j = 0; j < n; ++j) {
    diffs[j] = x - FieldElement::from_u64(f, j);
    if (diffs[j].is_zero()) return evals[j];
  }
  std::vector<FieldElement> den(n);
  for (std::size_t k = 0; k < n; ++k) {
    den[k] = FieldElement::one(f);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != k) den[k] *= FieldElement::from_int(f, static_cast<std::int64_t>(k) - static_cast<std::int64_t>(j));
    }
  }
  algebra::batch_invert(den);
  FieldElement acc = FieldElement::zero(f);
  for (std::size_t k = 0; k < n; ++k) {
    FieldElement num = den[k];
    for (std::size_t j = 0; j < n; ++j) {
      if (j != k) num *= diffs[j];
    }
    acc += evals[k] * num;
  }
  return acc;
}

}  // namespace vdi::poly
