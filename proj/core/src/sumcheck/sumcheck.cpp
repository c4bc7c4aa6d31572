#include "vdi/sumcheck/sumcheck.hpp"

#include <algorithm>

namespace vdi::sumcheck {

using algebra::PrimeField;

namespace {

constexpr unsigned kMaxFactorsPerTerm = 3;

std::string round_label(std::size_t i) { return "sumcheck/round/" + std::to_string(i + 1); }

std::vector<FieldElement> full_point(const FactorBinding& b, std::span<const FieldElement> point) {
  std::vector<FieldElement> out = b.before;
  out.insert(out.end(), point.begin(), point.end());
  out.insert(out.end(), b.after.begin(), b.after.end());
  return out;
}

// Committed factors grouped by identical opening point, in order of first use.
std::vector<std::vector<std::uint32_t>> opening_groups(std::span<const FactorBinding> bindings,
                                                       std::span<const FieldElement> point) {
  std::vector<std::vector<std::uint32_t>> groups;
  std::vector<std::vector<FieldElement>> keys;
  for (std::uint32_t k = 0; k < bindings.size(); ++k) {
    if (bindings[k].kind != FactorBinding::Kind::Committed) continue;
    auto fp = full_point(bindings[k], point);
    auto it = std::find(keys.begin(), keys.end(), fp);
    if (it == keys.end()) {
      keys.push_back(std::move(fp));
      groups.push_back({k});
    } else {
      groups[static_cast<std::size_t>(it - keys.begin())].push_back(k);
    }
  }
  return groups;
}

void absorb_header(transcript::Transcript& tr, const Shape& shape, const FieldElement& claimed) {
  tr.absorb_u64("sumcheck/num-vars", shape.num_vars);
  tr.absorb_u64("sumcheck/degree", shape.degree_bound);
  tr.absorb_field("sumcheck/claim", claimed);
}

void validate(const Shape& shape) {
  if (shape.degree() > shape.degree_bound) {
    throw Error(ErrorCode::DegreeExceeded, "term degree " + std::to_string(shape.degree()) + " exceeds bound " +
                                               std::to_string(shape.degree_bound));
  }
  for (const auto& t : shape.terms) {
    if (t.factors.size() > kMaxFactorsPerTerm) {
      throw Error(ErrorCode::DegreeExceeded, "term has more than three multilinear factors");
    }
    for (auto k : t.factors) {
      if (k >= shape.num_factors) throw Error(ErrorCode::ShapeMismatch, "term references a missing factor");
    }
    if (t.use_eq && shape.eq_point.size() != shape.num_vars) {
      throw Error(ErrorCode::ShapeMismatch, "eq point has the wrong dimension");
    }
  }
}

}  // namespace

unsigned Shape::degree() const {
  unsigned d = 0;
  for (const auto& t : terms) d = std::max(d, static_cast<unsigned>(t.factors.size()) + (t.use_eq ? 1u : 0u));
  return d;
}

FieldElement Shape::evaluate(std::span<const FieldElement> factor_values, std::span<const FieldElement> point) const {
  const PrimeField& f = factor_values.empty() ? point[0].field() : factor_values[0].field();
  FieldElement eq = FieldElement::one(f);
  bool need_eq = std::any_of(terms.begin(), terms.end(), [](const Term& t) { return t.use_eq; });
  if (need_eq && num_vars > 0) eq = poly::eq_eval(eq_point, point);
  FieldElement acc = FieldElement::zero(f);
  for (const auto& t : terms) {
    FieldElement v = t.coeff;
    for (auto k : t.factors) v *= factor_values[k];
    if (t.use_eq) v *= eq;
    acc += v;
  }
  return acc;
}

FactorBinding FactorBinding::committed(const GroupPoint& c, std::vector<FieldElement> before,
                                       std::vector<FieldElement> after) {
  FactorBinding b;
  b.kind = Kind::Committed;
  b.commitment = c;
  b.before = std::move(before);
  b.after = std::move(after);
  return b;
}

FactorBinding FactorBinding::public_fn(std::function<FieldElement(std::span<const FieldElement>)> f) {
  FactorBinding b;
  b.kind = Kind::Public;
  b.evaluate = std::move(f);
  return b;
}

FactorBinding FactorBinding::derived(std::vector<std::pair<std::uint32_t, FieldElement>> combo) {
  FactorBinding b;
  b.kind = Kind::Derived;
  b.combination = std::move(combo);
  return b;
}

void SumCheckProof::write(util::ByteWriter& w) const {
  w.u32(static_cast<std::uint32_t>(rounds.size()));
  for (const auto& r : rounds) w.fields(r);
  w.fields(challenges);
  w.fields(final_evals);
  w.field(final_value);
  w.u32(static_cast<std::uint32_t>(openings.size()));
  for (const auto& o : openings) o.write(w);
}

SumCheckProof SumCheckProof::read(util::ByteReader& r, const algebra::CurveProfile& profile) {
  const PrimeField& f = profile.scalar_field();
  SumCheckProof p;
  std::uint32_t n = r.u32();
  if (n > 64) throw Error(ErrorCode::MalformedProof, "too many sum-check rounds");
  for (std::uint32_t i = 0; i < n; ++i) p.rounds.push_back(r.fields(f));
  p.challenges = r.fields(f);
  p.final_evals = r.fields(f);
  p.final_value = r.field(f);
  std::uint32_t m = r.u32();
  if (m > r.remaining()) throw Error(ErrorCode::MalformedProof, "opening count exceeds payload");
  for (std::uint32_t i = 0; i < m; ++i) p.openings.push_back(commit::OpeningProof::read(r, profile));
  return p;
}

FieldElement brute_force_sum(const Shape& shape, std::span<const MultilinearPoly> tables) {
  validate(shape);
  const PrimeField& f = tables.empty() ? shape.terms.at(0).coeff.field() : tables[0].field();
  std::size_t n = std::size_t{1} << shape.num_vars;
  std::vector<FieldElement> eq;
  if (std::any_of(shape.terms.begin(), shape.terms.end(), [](const Term& t) { return t.use_eq; })) eq = poly::eq_table(f, shape.eq_point);
  FieldElement acc = FieldElement::zero(f);
  for (std::size_t b = 0; b < n; ++b) {
    for (const auto& t : shape.terms) {
      FieldElement v = t.coeff;
      for (auto k : t.factors) v *= tables[k][b];
      if (t.use_eq) v *= eq[b];
      acc += v;
    }
  }
  return acc;
}

SumCheckProof prove(const Shape& shape, std::vector<MultilinearPoly> tables, const FieldElement& claimed_sum,
                    std::span<const FactorBinding> bindings, const commit::CommitmentKey* key,
                    transcript::Transcript& tr, util::Csprng& rng, ProverMode mode) {
  validate(shape);
  if (tables.size() != shape.num_factors) throw Error(ErrorCode::ShapeMismatch, "factor count mismatch");
  for (const auto& t : tables) {
    if (t.num_vars() != shape.num_vars) throw Error(ErrorCode::ShapeMismatch, "factor table has wrong size");
  }
  if (!bindings.empty() && bindings.size() != shape.num_factors) {
    throw Error(ErrorCode::ShapeMismatch, "binding count mismatch");
  }
  const PrimeField& f = claimed_sum.field();
  if (mode == ProverMode::Honest && !(brute_force_sum(shape, tables) == claimed_sum)) {
    throw Error(ErrorCode::WitnessInconsistent, "claimed sum differs from the hypercube sum");
  }

  absorb_header(tr, shape, claimed_sum);
  const unsigned deg = shape.degree_bound;
  bool need_eq = std::any_of(shape.terms.begin(), shape.terms.end(), [](const Term& t) { return t.use_eq; });
  MultilinearPoly eq;
  if (need_eq) eq = MultilinearPoly::from_evals(f, poly::eq_table(f, shape.eq_point), shape.num_vars);

  SumCheckProof proof;
  FieldElement claim = claimed_sum;
  const FieldElement zero = FieldElement::zero(f);
  std::vector<FieldElement> xs;
  for (unsigned x = 0; x <= deg; ++x) xs.push_back(FieldElement::from_u64(f, x));
  std::vector<FieldElement> vals(tables.size() * (deg + 1));
  std::vector<FieldElement> eq_vals(deg + 1);

  for (unsigned round = 0; round < shape.num_vars; ++round) {
    std::vector<FieldElement> evals(deg + 1, zero);
    std::size_t half = tables.empty() ? (std::size_t{1} << (shape.num_vars - round - 1)) : tables[0].size() / 2;
    for (std::size_t b = 0; b < half; ++b) {
      for (std::size_t k = 0; k < tables.size(); ++k) {
        const FieldElement& lo = tables[k][2 * b];
        FieldElement step = tables[k][2 * b + 1] - lo;
        FieldElement* v = &vals[k * (deg + 1)];
        v[0] = lo;
        for (unsigned x = 1; x <= deg; ++x) v[x] = v[x - 1] + step;
      }
      if (need_eq) {
        eq_vals[0] = eq[2 * b];
        FieldElement step = eq[2 * b + 1] - eq[2 * b];
        for (unsigned x = 1; x <= deg; ++x) eq_vals[x] = eq_vals[x - 1] + step;
      }
      for (const auto& t : shape.terms) {
        for (unsigned x = 0; x <= deg; ++x) {
          FieldElement v = t.coeff;
          for (auto k : t.factors) v *= vals[k * (deg + 1) + x];
          if (t.use_eq) v *= eq_vals[x];
          evals[x] += v;
        }
      }
    }
    if (mode == ProverMode::Dishonest) {
      FieldElement delta = claim - evals[0] - evals[1];
      for (unsigned x = 0; x <= deg; ++x) evals[x] += delta * xs[x];
    }
    tr.absorb_fields(round_label(round), evals);
    FieldElement r = tr.challenge(round_label(round));
    claim = poly::interpolate_at(evals, r);
    for (auto& t : tables) t.fold_in_place(r);
    if (need_eq) eq.fold_in_place(r);
    proof.rounds.push_back(std::move(evals));
    proof.challenges.push_back(r);
  }

  for (const auto& t : tables) proof.final_evals.push_back(t[0]);
  proof.final_value = claim;
  tr.absorb_fields("sumcheck/final", proof.final_evals);

  if (!bindings.empty()) {
    for (const auto& group : opening_groups(bindings, proof.challenges)) {
      if (!key) throw Error(ErrorCode::InvalidArgument, "committed factors need a commitment key");
      std::vector<commit::MleClaim> claims;
      for (auto k : group) {
        if (!bindings[k].witness) throw Error(ErrorCode::InvalidArgument, "committed factor without witness");
        claims.push_back({bindings[k].commitment, proof.final_evals[k], bindings[k].witness, bindings[k].blinding});
      }
      auto fp = full_point(bindings[group[0]], proof.challenges);
      proof.openings.push_back(commit::prove_mle_batch(*key, claims, fp, tr, rng));
    }
  }
  return proof;
}

Outcome verify(const Shape& shape, const FieldElement& claimed_sum, std::span<const FactorBinding> bindings,
               const commit::CommitmentKey* key, const SumCheckProof& proof, transcript::Transcript& tr) {
  Outcome out;
  auto reject = [&](std::string check) {
    out.verdict = Verdict::reject(std::move(check));
    return out;
  };
  try {
    validate(shape);
  } catch (const Error&) {
    return reject("sumcheck/shape");
  }
  const unsigned deg = shape.degree_bound;
  if (proof.rounds.size() != shape.num_vars || proof.challenges.size() != shape.num_vars) {
    return reject("sumcheck/round-count");
  }
  if (proof.final_evals.size() != shape.num_factors) return reject("sumcheck/final-count");
  if (!bindings.empty() && bindings.size() != shape.num_factors) return reject("sumcheck/binding-count");

  absorb_header(tr, shape, claimed_sum);
  FieldElement claim = claimed_sum;
  for (unsigned i = 0; i < shape.num_vars; ++i) {
    const auto& evals = proof.rounds[i];
    if (evals.size() != deg + 1) return reject(round_label(i) + "/degree");
    if (!(evals[0] + evals[1] == claim)) return reject(round_label(i));
    tr.absorb_fields(round_label(i), evals);
    FieldElement r = tr.challenge(round_label(i));
    if (!(r == proof.challenges[i])) return reject(round_label(i) + "/challenge");
    claim = poly::interpolate_at(evals, r);
    out.point.push_back(r);
  }
  if (!(proof.final_value == claim)) return reject("sumcheck/final-value");
  if (!(shape.evaluate(proof.final_evals, out.point) == claim)) return reject("sumcheck/final-evaluation");
  tr.absorb_fields("sumcheck/final", proof.final_evals);

  if (!bindings.empty()) {
    for (std::uint32_t k = 0; k < bindings.size(); ++k) {
      const auto& b = bindings[k];
      if (b.kind == FactorBinding::Kind::Public) {
        if (!(b.evaluate(out.point) == proof.final_evals[k])) {
          return reject("sumcheck/public-factor/" + std::to_string(k));
        }
      } else if (b.kind == FactorBinding::Kind::Derived) {
        FieldElement acc = FieldElement::zero(claimed_sum.field());
        for (const auto& [idx, c] : b.combination) {
          if (idx >= proof.final_evals.size()) return reject("sumcheck/derived-factor/" + std::to_string(k));
          acc += proof.final_evals[idx] * c;
        }
        if (!(acc == proof.final_evals[k])) return reject("sumcheck/derived-factor/" + std::to_string(k));
      }
    }
    auto groups = opening_groups(bindings, out.point);
    if (groups.size() != proof.openings.size()) return reject("sumcheck/opening-count");
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (!key) return reject("sumcheck/no-key");
      std::vector<commit::MleClaim> claims;
      for (auto k : groups[g]) claims.push_back({bindings[k].commitment, proof.final_evals[k], nullptr, {}});
      auto fp = full_point(bindings[groups[g][0]], out.point);
      auto v = commit::verify_mle_batch(*key, claims, fp, proof.openings[g], tr);
      if (!v) return reject("sumcheck/opening/" + std::to_string(g) + "/" + v.failed_check);
    }
  }
  out.verdict = Verdict::accept();
  return out;
}

}  // namespace vdi::sumcheck
