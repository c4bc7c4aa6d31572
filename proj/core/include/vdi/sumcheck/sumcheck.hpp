#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vdi/commit/pedersen.hpp"
#include "vdi/poly/multilinear.hpp"
#include "vdi/transcript/transcript.hpp"
#include "vdi/verdict.hpp"

namespace vdi::sumcheck {

using algebra::FieldElement;
using algebra::GroupPoint;
using poly::MultilinearPoly;

/// coeff * [beta(eq_point, x)] * prod factors[k](x)
struct Term {
  FieldElement coeff;
  std::vector<std::uint32_t> factors;
  bool use_eq = false;
};

/// The polynomial g summed over {0,1}^num_vars, as a sum of terms over
/// multilinear factor tables.
struct Shape {
  unsigned num_vars = 0;
  std::size_t num_factors = 0;
  std::vector<Term> terms;
  std::vector<FieldElement> eq_point;
  /// Round polynomials are sent with degree_bound + 1 evaluations.
  unsigned degree_bound = 0;

  unsigned degree() const;
  /// g evaluated from per-factor values at a point.
  FieldElement evaluate(std::span<const FieldElement> factor_values, std::span<const FieldElement> point) const;
};

/// How the verifier learns a factor's value at the final point.
struct FactorBinding {
  enum class Kind : std::uint8_t { Committed, Public, Derived };
  Kind kind = Kind::Public;

  // Committed: the tensor is opened at before ++ point ++ after.
  GroupPoint commitment;
  std::vector<FieldElement> before;
  std::vector<FieldElement> after;
  const std::vector<FieldElement>* witness = nullptr;  // prover only
  FieldElement blinding;                               // prover only

  // Public: the verifier evaluates the factor itself.
  std::function<FieldElement(std::span<const FieldElement>)> evaluate;

  // Derived: linear combination of other factors' final values.
  std::vector<std::pair<std::uint32_t, FieldElement>> combination;

  static FactorBinding committed(const GroupPoint& c, std::vector<FieldElement> before = {},
                                 std::vector<FieldElement> after = {});
  static FactorBinding public_fn(std::function<FieldElement(std::span<const FieldElement>)> f);
  static FactorBinding derived(std::vector<std::pair<std::uint32_t, FieldElement>> combo);
};

struct SumCheckProof {
  std::vector<std::vector<FieldElement>> rounds;  // g_i at 0..degree_bound
  std::vector<FieldElement> challenges;
  std::vector<FieldElement> final_evals;          // one per factor
  FieldElement final_value;
  std::vector<commit::OpeningProof> openings;     // one per distinct opening point

  void write(util::ByteWriter& w) const;
  static SumCheckProof read(util::ByteReader& r, const algebra::CurveProfile& profile);
};

enum class ProverMode : std::uint8_t {
  Honest,
  /// Accepts any claimed sum and shifts each round polynomial by
  /// delta * X to hide the discrepancy; for soundness measurements.
  Dishonest,
};

/// Throws DegreeExceeded if a term is above the shape's bound, ShapeMismatch
/// for malformed tables, and WitnessInconsistent if an honest prover's claim
/// is wrong. Bindings may be empty when the caller discharges final values.
SumCheckProof prove(const Shape& shape, std::vector<MultilinearPoly> tables, const FieldElement& claimed_sum,
                    std::span<const FactorBinding> bindings, const commit::CommitmentKey* key,
                    transcript::Transcript& tr, util::Csprng& rng, ProverMode mode = ProverMode::Honest);

struct Outcome {
  Verdict verdict;
  std::vector<FieldElement> point;
};

Outcome verify(const Shape& shape, const FieldElement& claimed_sum, std::span<const FactorBinding> bindings,
               const commit::CommitmentKey* key, const SumCheckProof& proof, transcript::Transcript& tr);

/// Direct sum of g over the hypercube.
FieldElement brute_force_sum(const Shape& shape, std::span<const MultilinearPoly> tables);

}  // namespace vdi::sumcheck
