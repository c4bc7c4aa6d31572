#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vdi/algebra/field.hpp"

namespace vdi::poly {

using algebra::FieldElement;
using algebra::PrimeField;

/// Multilinear extension of a tensor, stored by its values on {0,1}^v.
/// Variable 0 is the least significant bit of the tensor index.
class MultilinearPoly {
 public:
  MultilinearPoly() = default;
  /// All-zero polynomial on num_vars variables.
  MultilinearPoly(const PrimeField& f, unsigned num_vars);
  /// Zero-pads to the next power of two (at least 2^min_vars entries).
  static MultilinearPoly from_evals(const PrimeField& f, std::vector<FieldElement> evals, unsigned min_vars = 0);
  static MultilinearPoly from_ints(const PrimeField& f, std::span<const std::int64_t> values, unsigned min_vars = 0);

  unsigned num_vars() const { return num_vars_; }
  std::size_t size() const { return evals_.size(); }
  const std::vector<FieldElement>& evals() const { return evals_; }
  const FieldElement& operator[](std::size_t i) const { return evals_[i]; }
  const PrimeField& field() const { return *field_; }

  FieldElement evaluate(std::span<const FieldElement> u) const;
  /// Fixes variable 0 to r.
  MultilinearPoly restrict_first_var(const FieldElement& r) const;
  void fold_in_place(const FieldElement& r);

  friend bool operator==(const MultilinearPoly& a, const MultilinearPoly& b) { return a.evals_ == b.evals_; }

 private:
  const PrimeField* field_ = nullptr;
  unsigned num_vars_ = 0;
  std::vector<FieldElement> evals_;
};

/// Smallest v with 2^v >= n.
unsigned log2_ceil(std::size_t n);

/// Table of beta(u, b) over all Boolean b, indexed like MultilinearPoly.
std::vector<FieldElement> eq_table(const PrimeField& f, std::span<const FieldElement> u);
/// beta(u, v) = prod(u_i v_i + (1 - u_i)(1 - v_i)) for arbitrary points.
FieldElement eq_eval(std::span<const FieldElement> u, std::span<const FieldElement> v);
/// beta(u, b) for a Boolean point b given as 0/1 bytes.
FieldElement lagrange_basis(std::span<const FieldElement> u, std::span<const std::uint8_t> b);

/// Dense univariate polynomial with trimmed coefficients (lowest degree first).
class UnivariatePoly {
 public:
  UnivariatePoly() = default;
  UnivariatePoly(const PrimeField& f, std::vector<FieldElement> coeffs);
  /// Unique polynomial of degree <= evals.size()-1 through (k, evals[k]).
  static UnivariatePoly interpolate(std::span<const FieldElement> evals);

  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<FieldElement>& coeffs() const { return coeffs_; }
  FieldElement evaluate(const FieldElement& x) const;

 private:
  const PrimeField* field_ = nullptr;
  std::vector<FieldElement> coeffs_;
};

/// Value at x of the polynomial through (k, evals[k]) for k = 0..d.
FieldElement interpolate_at(std::span<const FieldElement> evals, const FieldElement& x);

}  // namespace vdi::poly
