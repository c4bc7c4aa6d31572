// Acceptance run: one PASS/FAIL line per criterion. Oracles are written out
// here rather than borrowed from the library under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

#include "vdi/consensus/consensus.hpp"
#include "vdi/error.hpp"
#include "vdi/netsim/netsim.hpp"
#include "vdi/zkdps/zkdps.hpp"

using namespace vdi;
using algebra::CurveProfile;
using algebra::FieldElement;
using algebra::GroupPoint;
using algebra::PrimeField;
using commit::CommitmentKey;
using gadgets::CommittedTensor;
using gadgets::ProverMode;
using transcript::Transcript;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond && pass) {
      pass = false;
      detail << "[" << what << "] ";
    }
  }
};

std::vector<std::int64_t> random_ints(util::Csprng& rng, std::size_t n, std::int64_t lo, std::int64_t hi) {
  std::vector<std::int64_t> v(n);
  for (auto& x : v) x = lo + static_cast<std::int64_t>(rng.uniform(static_cast<std::uint64_t>(hi - lo + 1)));
  return v;
}

std::vector<FieldElement> random_field_vec(const PrimeField& f, std::size_t n, util::Csprng& rng) {
  std::vector<FieldElement> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(rng.field_element(f));
  return v;
}

FieldElement nonzero(const PrimeField& f, util::Csprng& rng) {
  for (;;) {
    auto x = rng.field_element(f);
    if (!x.is_zero()) return x;
  }
}

// ---------------------------------------------------------------------------
// 1. Commitment opening completeness and soundness

Outcome commitment_rounds() {
  Outcome o;
  auto t0 = Clock::now();
  util::Csprng rng(1001);
  CommitmentKey key(CurveProfile::main(), 16);
  const auto& f = key.field();
  const int rounds = 1000;
  int honest_ok = 0, mutated_ok = 0;
  for (int i = 0; i < rounds; ++i) {
    std::size_t d = 1 + rng.uniform(16);
    auto s = random_field_vec(f, d, rng), y = random_field_vec(f, d, rng);
    FieldElement t = FieldElement::zero(f);
    for (std::size_t j = 0; j < d; ++j) t += s[j] * y[j];
    auto r_s = rng.field_element(f), r_t = rng.field_element(f);
    auto c_s = commit::commit_vector(key, s, r_s).point;
    auto c_t = commit::commit_scalar(key, t, r_t);
    auto pt = Transcript::fiat_shamir(f, "accept/open");
    auto proof = commit::prove_opening(key, c_s, c_t, s, r_s, t, r_t, y, pt, rng);
    auto vt = Transcript::fiat_shamir(f, "accept/open");
    honest_ok += commit::verify_opening(key, c_s, c_t, y, proof, vt).ok ? 1 : 0;

    // One element of the transcript or statement changes.
    auto bad = proof;
    auto bad_cs = c_s, bad_ct = c_t;
    auto bad_y = y;
    auto delta = nonzero(f, rng);
    switch (i % 7) {
      case 0: bad.s_prime[rng.uniform(d)] += delta; break;
      case 1: bad.r_s_prime += delta; break;
      case 2: bad.r_t_prime += delta; break;
      case 3: bad.c_d = bad.c_d + key.g(); break;
      case 4: bad.c_dy = bad.c_dy + key.h(); break;
      case 5: bad_ct = bad_ct + key.g(); break;
      case 6: bad_y[rng.uniform(d)] += delta; break;
    }
    auto vt2 = Transcript::fiat_shamir(f, "accept/open");
    mutated_ok += commit::verify_opening(key, bad_cs, bad_ct, bad_y, bad, vt2).ok ? 1 : 0;
  }
  double secs = seconds_since(t0);
  o.require(honest_ok == rounds, "honest");
  o.require(mutated_ok == 0, "mutations");
  o.require(secs <= 60.0, "runtime");
  o.detail << honest_ok << "/" << rounds << " honest accepted, " << mutated_ok << "/" << rounds
           << " mutations accepted, " << secs << " s";
  return o;
}

// ---------------------------------------------------------------------------
// 2. Special-soundness extraction

Outcome extractor() {
  Outcome o;
  util::Csprng rng(1002);
  CommitmentKey key(CurveProfile::main(), 16);
  const auto& f = key.field();
  int exact = 0;
  for (int i = 0; i < 100; ++i) {
    std::size_t d = 1 + rng.uniform(16);
    auto s = random_field_vec(f, d, rng), y = random_field_vec(f, d, rng);
    FieldElement t = FieldElement::zero(f);
    for (std::size_t j = 0; j < d; ++j) t += s[j] * y[j];
    auto r_s = rng.field_element(f), r_t = rng.field_element(f);
    auto c_s = commit::commit_vector(key, s, r_s).point;
    auto c_t = commit::commit_scalar(key, t, r_t);
    // Rewinding: identical first message, two verifier coins.
    auto masks = commit::OpeningMasks::sample(f, d, rng);
    auto t1 = Transcript::interactive(f, "accept/rewind", 2 * i);
    auto t2 = Transcript::interactive(f, "accept/rewind", 2 * i + 1);
    auto p1 = commit::prove_opening(key, c_s, c_t, s, r_s, t, r_t, y, t1, masks);
    auto p2 = commit::prove_opening(key, c_s, c_t, s, r_s, t, r_t, y, t2, masks);
    auto v1 = Transcript::interactive(f, "accept/rewind", 2 * i);
    auto v2 = Transcript::interactive(f, "accept/rewind", 2 * i + 1);
    bool both = commit::verify_opening(key, c_s, c_t, y, p1, v1).ok && commit::verify_opening(key, c_s, c_t, y, p2, v2).ok;
    if (!both || p1.e == p2.e) continue;
    auto w = commit::extract_witness(p1, p2, y);
    if (w.s == s && w.r_s == r_s && w.t == t && w.r_t == r_t) ++exact;
  }
  o.require(exact == 100, "extraction");
  o.detail << exact << "/100 witnesses recovered exactly";
  return o;
}

// ---------------------------------------------------------------------------
// 3. Sum-check

struct RandomInstance {
  sumcheck::Shape shape;
  std::vector<poly::MultilinearPoly> tables;
};

RandomInstance random_instance(const PrimeField& f, unsigned v, util::Csprng& rng) {
  RandomInstance in;
  in.shape.num_vars = v;
  in.shape.num_factors = 3;
  std::size_t nterms = 1 + rng.uniform(3);
  unsigned deg = 0;
  for (std::size_t k = 0; k < nterms; ++k) {
    sumcheck::Term t;
    t.coeff = rng.field_element(f);
    std::size_t nf = 1 + rng.uniform(3);
    for (std::size_t j = 0; j < nf; ++j) t.factors.push_back(static_cast<std::uint32_t>(rng.uniform(3)));
    t.use_eq = nf < 3 && rng.uniform(2) == 1;
    deg = std::max<unsigned>(deg, static_cast<unsigned>(nf + (t.use_eq ? 1 : 0)));
    in.shape.terms.push_back(t);
  }
  in.shape.eq_point = random_field_vec(f, v, rng);
  in.shape.degree_bound = deg;
  for (int k = 0; k < 3; ++k) {
    in.tables.push_back(poly::MultilinearPoly::from_evals(f, random_field_vec(f, std::size_t{1} << v, rng)));
  }
  return in;
}

// Sum over every Boolean point, evaluating beta(u, b) as a product of
// per-coordinate selectors.
FieldElement hypercube_sum(const PrimeField& f, const RandomInstance& in) {
  const unsigned v = in.shape.num_vars;
  FieldElement total = FieldElement::zero(f);
  for (std::size_t b = 0; b < (std::size_t{1} << v); ++b) {
    FieldElement eq = FieldElement::one(f);
    for (unsigned i = 0; i < v; ++i) {
      const auto& u = in.shape.eq_point[i];
      eq *= ((b >> i) & 1) ? u : FieldElement::one(f) - u;
    }
    for (const auto& t : in.shape.terms) {
      FieldElement term = t.coeff;
      if (t.use_eq) term *= eq;
      for (auto k : t.factors) term *= in.tables[k][b];
      total += term;
    }
  }
  return total;
}

std::vector<sumcheck::FactorBinding> public_bindings(const std::vector<poly::MultilinearPoly>& tables) {
  std::vector<sumcheck::FactorBinding> out;
  for (const auto& t : tables) {
    out.push_back(sumcheck::FactorBinding::public_fn([t](std::span<const FieldElement> pt) { return t.evaluate(pt); }));
  }
  return out;
}

Outcome sumcheck_oracle() {
  Outcome o;
  util::Csprng rng(1003);
  const auto& fm = CurveProfile::main().scalar_field();
  int equal = 0, honest_ok = 0, dishonest_ok = 0;
  for (int i = 0; i < 200; ++i) {
    unsigned v = 1 + static_cast<unsigned>(rng.uniform(10));
    auto in = random_instance(fm, v, rng);
    auto h = hypercube_sum(fm, in);
    if (h == sumcheck::brute_force_sum(in.shape, in.tables)) ++equal;
    auto bindings = public_bindings(in.tables);
    auto pt = Transcript::fiat_shamir(fm, "accept/sc");
    auto proof = sumcheck::prove(in.shape, in.tables, h, bindings, nullptr, pt, rng);
    auto vt = Transcript::fiat_shamir(fm, "accept/sc");
    honest_ok += sumcheck::verify(in.shape, h, bindings, nullptr, proof, vt).verdict.ok ? 1 : 0;

    auto wrong = h + nonzero(fm, rng);
    auto pt2 = Transcript::fiat_shamir(fm, "accept/sc");
    auto forged = sumcheck::prove(in.shape, in.tables, wrong, bindings, nullptr, pt2, rng, ProverMode::Dishonest);
    auto vt2 = Transcript::fiat_shamir(fm, "accept/sc");
    dishonest_ok += sumcheck::verify(in.shape, wrong, bindings, nullptr, forged, vt2).verdict.ok ? 1 : 0;
  }
  o.require(equal == 200 && honest_ok == 200, "oracle");
  o.require(dishonest_ok == 0, "main soundness");

  // False-accept rate on the tiny field, fixed-degree instance.
  const auto& ft = CurveProfile::test().scalar_field();
  const unsigned v = 4;
  RandomInstance in;
  do {
    in = random_instance(ft, v, rng);
  } while (in.shape.degree_bound != 3);
  auto bindings = public_bindings(in.tables);
  auto wrong = hypercube_sum(ft, in) + FieldElement::one(ft);
  const int trials = 100000;
  int accepted = 0;
  for (int i = 0; i < trials; ++i) {
    auto pt = Transcript::interactive(ft, "accept/sc-test", static_cast<std::uint64_t>(i));
    auto proof = sumcheck::prove(in.shape, in.tables, wrong, bindings, nullptr, pt, rng, ProverMode::Dishonest);
    auto vt = Transcript::interactive(ft, "accept/sc-test", static_cast<std::uint64_t>(i));
    accepted += sumcheck::verify(in.shape, wrong, bindings, nullptr, proof, vt).verdict.ok ? 1 : 0;
  }
  const double order = 65287.0;
  const double p = 3.0 * v / order;
  const double bound = p + 3.0 * std::sqrt(p * (1 - p) / trials);
  const double rate = static_cast<double>(accepted) / trials;
  o.require(rate <= bound, "test false-accept rate");
  o.detail << equal << "/200 match brute force, " << honest_ok << "/200 honest accepted, " << dishonest_ok
           << "/200 dishonest accepted on main; test rate " << rate << " (" << accepted << "/" << trials
           << ") vs bound " << bound;
  return o;
}

// ---------------------------------------------------------------------------
// 4. Matrix product

std::vector<std::int64_t> naive_matmul(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b,
                                       std::size_t n) {
  std::vector<std::int64_t> c(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) c[i * n + j] += a[i * n + k] * b[k * n + j];
    }
  }
  return c;
}

bool matmul_accepts(const CommitmentKey& key, const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b,
                    const std::vector<std::int64_t>& c, std::size_t n, util::Csprng& rng) {
  const auto& f = key.field();
  auto ta = CommittedTensor::commit(key, gadgets::pad_matrix(f, a, n, n), rng);
  auto tb = CommittedTensor::commit(key, gadgets::pad_matrix(f, b, n, n), rng);
  auto tc = CommittedTensor::commit(key, gadgets::pad_matrix(f, c, n, n), rng);
  gadgets::MatMulClaim claim{ta.commitment, tb.commitment, tc.commitment, n, n, n};
  auto pt = Transcript::fiat_shamir(f, "accept/mm");
  auto proof = gadgets::prove_matmul(key, claim, ta, tb, tc, pt, rng, ProverMode::Dishonest);
  auto vt = Transcript::fiat_shamir(f, "accept/mm");
  return gadgets::verify_matmul(key, claim, proof, vt).ok;
}

Outcome matmul() {
  Outcome o;
  util::Csprng rng(1004);
  CommitmentKey key(CurveProfile::main(), 256);
  int agree = 0, total = 0, corrupted_ok = 0;
  for (std::size_t n : {2, 4, 8, 16}) {
    for (int i = 0; i < 100; ++i) {
      auto a = random_ints(rng, n * n, -1000, 1000), b = random_ints(rng, n * n, -1000, 1000);
      auto c = naive_matmul(a, b, n);
      // Half the candidates are the true product, half carry one wrong entry.
      bool truthful = i % 2 == 0;
      auto claimed = c;
      if (!truthful) claimed[rng.uniform(n * n)] += 1 + static_cast<std::int64_t>(rng.uniform(5));
      bool ok = matmul_accepts(key, a, b, claimed, n, rng);
      agree += ok == (claimed == naive_matmul(a, b, n)) ? 1 : 0;
      if (!truthful && ok) ++corrupted_ok;
      ++total;
    }
  }
  o.require(agree == total, "accept iff C = AB");
  o.require(corrupted_ok == 0, "corruption");
  o.detail << agree << "/" << total << " verdicts match the naive product, " << corrupted_ok
           << " corrupted products accepted";
  return o;
}

// ---------------------------------------------------------------------------
// 5. ReLU

bool relu_accepts(const CommitmentKey& key, const std::vector<std::int64_t>& z, const std::vector<std::int64_t>& a,
                  unsigned q, util::Csprng& rng, const gadgets::ReluWitness* bits = nullptr) {
  const auto& f = key.field();
  auto zt = CommittedTensor::commit(key, gadgets::to_field_padded(f, z), rng);
  auto at = CommittedTensor::commit(key, gadgets::to_field_padded(f, a), rng);
  auto pt = Transcript::fiat_shamir(f, "accept/relu");
  gadgets::ReluProof proof;
  if (bits) {
    proof = gadgets::prove_relu_unchecked(key, zt, at, *bits, q, pt, rng);
  } else {
    proof = gadgets::prove_relu(key, zt, at, q, pt, rng);
  }
  auto vt = Transcript::fiat_shamir(f, "accept/relu");
  return gadgets::verify_relu(key, zt.commitment, at.commitment, zt.num_vars(), q, proof, vt).ok;
}

std::vector<std::int64_t> max0(const std::vector<std::int64_t>& z) {
  std::vector<std::int64_t> a;
  for (auto v : z) a.push_back(v > 0 ? v : 0);
  return a;
}

Outcome relu() {
  Outcome o;
  util::Csprng rng(1005);
  CommitmentKey tkey(CurveProfile::test(), 32);
  std::vector<std::int64_t> all;
  for (std::int64_t z = -15; z <= 15; ++z) all.push_back(z);
  bool exhaustive = gadgets::relu_reference(all) == max0(all) && relu_accepts(tkey, all, max0(all), 4, rng);
  // Each wrong output in turn.
  int wrong_ok = 0;
  for (std::size_t j = 0; j < all.size(); ++j) {
    auto a = max0(all);
    a[j] += 1;
    auto bits = gadgets::relu_decompose(tkey.field(), gadgets::to_field_padded(tkey.field(), all), 4);
    wrong_ok += relu_accepts(tkey, all, a, 4, rng, &bits) ? 1 : 0;
  }
  o.require(exhaustive, "exhaustive q=4");
  o.require(wrong_ok == 0, "wrong outputs at q=4");

  CommitmentKey key(CurveProfile::main(), 8);
  const auto& f = key.field();
  const std::int64_t bound = (std::int64_t{1} << 32) - 1;
  int random_ok = 0, violations_ok = 0, violations = 0;
  for (int i = 0; i < 1000; ++i) {
    auto z = random_ints(rng, 8, -bound, bound);
    auto a = max0(z);
    random_ok += gadgets::relu_reference(z) == a && relu_accepts(key, z, a, 32, rng) ? 1 : 0;
    if (i % 20 == 0) {
      auto zf = gadgets::to_field(f, z);
      auto honest = gadgets::relu_decompose(f, zf, 32);
      std::size_t j = rng.uniform(8);
      // Booleanity: move weight from a set bit to the next lower digit as a 2.
      auto nb = honest;
      unsigned k = 1;
      while (k < 32 && !(nb.bits[k][j].is_one() && nb.bits[k + 1][j].is_zero())) ++k;
      if (k < 32) {
        nb.bits[k][j] = FieldElement::zero(f);
        nb.bits[k + 1][j] = FieldElement::from_u64(f, 2);
        violations_ok += relu_accepts(key, z, a, 32, rng, &nb) ? 1 : 0;
        ++violations;
      }
      // Recomposition: flip one magnitude bit.
      auto fb = honest;
      unsigned m = 1 + static_cast<unsigned>(rng.uniform(32));
      fb.bits[m][j] = FieldElement::one(f) - fb.bits[m][j];
      violations_ok += relu_accepts(key, z, a, 32, rng, &fb) ? 1 : 0;
      ++violations;
    }
  }
  o.require(random_ok == 1000, "random q=32");
  o.require(violations_ok == 0, "bit violations");
  o.detail << "31/31 exhaustive " << (exhaustive ? "ok" : "failed") << ", " << wrong_ok
           << " wrong outputs accepted, " << random_ok << "/1000 random q=32 tensors accepted, " << violations_ok
           << "/" << violations << " bit violations accepted";
  return o;
}

// ---------------------------------------------------------------------------
// 6. Lookup

Outcome lookup() {
  Outcome o;
  util::Csprng rng(1006);
  const auto& f = CurveProfile::main().scalar_field();
  int counts_ok = 0, identity_ok = 0;
  for (int i = 0; i < 100; ++i) {
    std::int64_t lo = -static_cast<std::int64_t>(rng.uniform(100));
    std::int64_t hi = lo + 1 + static_cast<std::int64_t>(rng.uniform(100));
    auto table = gadgets::range_table(lo, hi);
    auto sv = random_ints(rng, 1 + rng.uniform(64), lo, hi);
    auto s = gadgets::to_field(f, sv);
    const std::vector<FieldElement>* cols[] = {&s};
    auto e = gadgets::multiplicities(table, cols);
    std::map<std::int64_t, std::uint64_t> counting;
    for (auto x : sv) ++counting[x];
    bool same = true;
    for (std::int64_t x = lo; x <= hi; ++x) same = same && e[static_cast<std::size_t>(x - lo)] == counting[x];
    counts_ok += same ? 1 : 0;

    // sum_j 1/(X + s_j) = sum_i e_i/(X + t_i) at a random X.
    auto X = rng.field_element(f);
    FieldElement lhs = FieldElement::zero(f), rhs = FieldElement::zero(f);
    for (auto x : sv) lhs += (X + FieldElement::from_int(f, x)).inverse();
    for (std::int64_t x = lo; x <= hi; ++x) {
      rhs += FieldElement::from_u64(f, counting[x]) * (X + FieldElement::from_int(f, x)).inverse();
    }
    identity_ok += lhs == rhs ? 1 : 0;
  }

  CommitmentKey key(CurveProfile::main(), 64);
  auto table = gadgets::range_table(0, 15);
  int honest_ok = 0, outside_ok = 0;
  for (int i = 0; i < 20; ++i) {
    auto v = random_ints(rng, 16, 0, 15);
    auto t = CommittedTensor::commit(key, gadgets::to_field(f, v), rng);
    const CommittedTensor* cols[] = {&t};
    std::vector<GroupPoint> cc = {t.commitment};
    auto pt = Transcript::fiat_shamir(f, "accept/lookup");
    auto proof = gadgets::prove_lookup(key, table, cols, pt, rng);
    auto vt = Transcript::fiat_shamir(f, "accept/lookup");
    honest_ok += gadgets::verify_lookup(key, table, cc, 4, proof, vt).ok ? 1 : 0;

    v[rng.uniform(16)] = 16 + static_cast<std::int64_t>(rng.uniform(1000));
    auto bad = CommittedTensor::commit(key, gadgets::to_field(f, v), rng);
    const CommittedTensor* bad_cols[] = {&bad};
    std::vector<GroupPoint> bc = {bad.commitment};
    auto pt2 = Transcript::fiat_shamir(f, "accept/lookup");
    auto forged = gadgets::prove_lookup(key, table, bad_cols, pt2, rng, ProverMode::Dishonest);
    auto vt2 = Transcript::fiat_shamir(f, "accept/lookup");
    outside_ok += gadgets::verify_lookup(key, table, bc, 4, forged, vt2).ok ? 1 : 0;
  }
  o.require(counts_ok == 100, "multiplicities");
  o.require(identity_ok == 100, "rational identity");
  o.require(honest_ok == 20 && outside_ok == 0, "out-of-table");
  o.detail << counts_ok << "/100 multiplicity vectors match counting, " << identity_ok
           << "/100 rational identities hold, " << honest_ok << "/20 honest lookups accepted, " << outside_ok
           << "/20 out-of-table witnesses accepted";
  return o;
}

// ---------------------------------------------------------------------------
// 7. End-to-end proofs

struct Fixture {
  model::Model model;
  std::vector<std::int64_t> x;
};

Fixture make_fixture(std::uint64_t seed, const model::MlpConfig& cfg) {
  util::Csprng rng(seed);
  Fixture fx{model::random_mlp(cfg, rng), {}};
  fx.x = model::random_input(fx.model.arch, rng);
  return fx;
}

model::MlpConfig small_config() {
  model::MlpConfig cfg;
  cfg.widths = {2, 3, 2};
  cfg.input_scale = 16;
  cfg.weight_scale = 4;
  cfg.q_bits = 12;
  cfg.head_lo = -64;
  cfg.head_hi = 63;
  return cfg;
}

struct Proved {
  zkdps::CommittedShard weights;
  CommittedTensor input;
  zkdps::ShardOutput out;
};

Proved prove_fixture(const CommitmentKey& key, const Fixture& fx, std::uint64_t seed,
                     const zkdps::ProofOptions& opt = {}) {
  util::Csprng rng(seed);
  Proved p;
  const auto n = fx.model.arch.num_layers();
  p.weights = zkdps::commit_shard(key, fx.model, 0, n, rng);
  p.input = zkdps::commit_activation(key, fx.model.arch, 0, fx.x, rng);
  p.out = zkdps::prove_shard(key, fx.model, p.weights, p.input, model::forward(fx.model, fx.x).trace, rng, opt);
  return p;
}

Outcome end_to_end() {
  Outcome o;
  const auto& profile = CurveProfile::main();

  // Timing on the 4-8-8-2 fixture (linear, relu, linear, relu, linear, sigmoid lookup).
  auto big = make_fixture(7001, {});
  CommitmentKey bkey(profile, zkdps::required_capacity(big.model.arch));
  auto t0 = Clock::now();
  auto bp = prove_fixture(bkey, big, 1);
  double prove_s = seconds_since(t0);
  auto bytes = bp.out.proof.serialize(profile);
  auto rep = zkdps::verify_shard_bytes(bkey, big.model.arch, bp.weights.commitments, bp.input.commitment, bytes);
  double verify_s = rep.verify_ms / 1000.0;
  o.require(rep.accepted, "honest 4-8-8-2");
  o.require(prove_s <= 60.0 && verify_s <= 5.0, "timing");

  auto fx = make_fixture(7002, small_config());
  CommitmentKey key(profile, zkdps::required_capacity(fx.model.arch));
  auto p = prove_fixture(key, fx, 2);
  const auto n = fx.model.arch.num_layers();
  util::Csprng rng(7003);

  // Every weight and bias entry changed after commitment.
  int weight_trials = 0, weight_ok = 0;
  for (std::size_t l = 0; l < n; ++l) {
    for (int which = 0; which < 2; ++which) {
      std::size_t count = which == 0 ? fx.model.weights[l].w.size() : fx.model.weights[l].bias.size();
      for (std::size_t i = 0; i < count; ++i) {
        auto alt = fx.model;
        (which == 0 ? alt.weights[l].w[i] : alt.weights[l].bias[i]) += 1;
        Proved ap;
        try {
          auto w = zkdps::commit_shard(key, alt, 0, n, rng);
          auto trace = model::forward(alt, fx.x).trace;
          auto out = zkdps::prove_shard(key, alt, w, p.input, trace, rng);
          ++weight_trials;
          weight_ok += zkdps::verify_shard(key, fx.model.arch, p.weights.commitments, p.input.commitment, out.proof)
                               .accepted
                           ? 1
                           : 0;
        } catch (const Error&) {
          // The altered model overflows its own bounds; nothing to prove.
        }
      }
    }
  }

  // Every activation entry, proven by a prover that skips its own checks.
  int act_trials = 0, act_ok = 0;
  zkdps::ProofOptions cheat;
  cheat.prover = ProverMode::Dishonest;
  auto honest_trace = model::forward(fx.model, fx.x).trace;
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t i = 0; i < honest_trace.activations[k].size(); ++i) {
      auto bad = honest_trace;
      bad.activations[k][i] += 1;
      auto out = zkdps::prove_shard(key, fx.model, p.weights, p.input, bad, rng, cheat);
      ++act_trials;
      act_ok += zkdps::verify_shard(key, fx.model.arch, p.weights.commitments, p.input.commitment, out.proof).accepted
                    ? 1
                    : 0;
    }
  }

  // Random-output attacker: commits to noise for every activation.
  int attack_ok = 0;
  const int attacks = 1000;
  for (int i = 0; i < attacks; ++i) {
    auto trace = honest_trace;
    for (std::size_t k = 1; k < trace.activations.size(); ++k) {
      for (auto& v : trace.activations[k]) v = static_cast<std::int64_t>(rng.uniform(128)) - 64;
    }
    auto out = zkdps::prove_shard(key, fx.model, p.weights, p.input, trace, rng, cheat);
    attack_ok += zkdps::verify_shard(key, fx.model.arch, p.weights.commitments, p.input.commitment, out.proof).accepted
                     ? 1
                     : 0;
  }

  // Every byte of the small proof container.
  auto sbytes = p.out.proof.serialize(profile);
  std::size_t flips_ok = 0;
  auto ts = Clock::now();
  for (std::size_t i = 0; i < sbytes.size(); ++i) {
    auto bad = sbytes;
    bad[i] ^= 0x01;
    flips_ok += zkdps::verify_shard_bytes(key, fx.model.arch, p.weights.commitments, p.input.commitment, bad).accepted
                    ? 1
                    : 0;
  }
  double sweep_s = seconds_since(ts);
  o.require(weight_trials > 0 && weight_ok == 0, "weights");
  o.require(act_ok == 0, "activations");
  o.require(attack_ok == 0, "random-output attacker");
  o.require(flips_ok == 0, "byte flips");
  o.detail << "4-8-8-2 prove " << prove_s << " s, verify " << verify_s << " s, " << bytes.size() << " bytes; "
           << weight_ok << "/" << weight_trials << " weight edits, " << act_ok << "/" << act_trials
           << " activation edits, " << attack_ok << "/" << attacks << " noise attacks, " << flips_ok << "/"
           << sbytes.size() << " byte flips accepted (sweep " << sweep_s << " s)";
  return o;
}

// ---------------------------------------------------------------------------
// 8. Shards and consensus

Outcome shards_and_consensus() {
  Outcome o;
  util::Csprng rng(1008);
  auto m = model::random_mlp({}, rng);
  int plans_ok = 0;
  for (int i = 0; i < 20; ++i) {
    auto plan = model::ShardPlan::random(m.arch.num_layers(), 7, 3, rng);
    auto x = model::random_input(m.arch, rng);
    consensus::ConsensusConfig cfg;
    std::vector<consensus::Behavior> honest(7, consensus::Behavior::Honest);
    auto run = consensus::run_consensus_plan(m, plan, x, cfg, honest, rng);
    plans_ok += run.output && *run.output == model::forward(m, x).output ? 1 : 0;
  }

  // m = 5, every set of at most two faulty nodes, every mix of random and
  // colluding faults.
  auto x = model::random_input(m.arch, rng);
  auto truth = model::forward(m, x).output;
  model::Shard whole{0, m.arch.num_layers(), {}};
  int patterns = 0, patterns_ok = 0;
  for (unsigned mask = 0; mask < 32; ++mask) {
    if (__builtin_popcount(mask) > 2) continue;
    std::vector<unsigned> faulty;
    for (unsigned i = 0; i < 5; ++i) {
      if (mask >> i & 1) faulty.push_back(i);
    }
    for (unsigned kinds = 0; kinds < (1u << faulty.size()); ++kinds) {
      std::vector<consensus::Node> nodes;
      for (std::uint32_t i = 0; i < 5; ++i) nodes.push_back({i, consensus::Behavior::Honest});
      for (std::size_t k = 0; k < faulty.size(); ++k) {
        nodes[faulty[k]].behavior = (kinds >> k & 1) ? consensus::Behavior::Colluding : consensus::Behavior::Byzantine;
      }
      auto outs = consensus::run_redundant(m, whole, x, nodes, rng);
      consensus::ConsensusConfig cfg;
      cfg.redundancy = 5;
      auto res = consensus::decide(outs, cfg);
      ++patterns;
      patterns_ok += res.status == consensus::Status::Verified && res.tensor() == truth ? 1 : 0;
    }
  }

  std::vector<consensus::NodeOutput> tie;
  for (std::uint32_t i = 0; i < 4; ++i) tie.push_back(consensus::NodeOutput::of_tensor(i, std::vector<std::int64_t>{i < 2 ? 5 : 7}));
  consensus::ConsensusConfig tcfg;
  tcfg.redundancy = 4;
  bool tie_ambiguous = consensus::decide(tie, tcfg).status == consensus::Status::Ambiguous;

  o.require(plans_ok == 20, "reconstruction");
  o.require(patterns_ok == patterns, "fault patterns");
  o.require(tie_ambiguous, "tie");
  o.detail << plans_ok << "/20 plans reconstruct bit-exactly, " << patterns_ok << "/" << patterns
           << " fault patterns return the honest output, tie {5,5,7,7} -> "
           << (tie_ambiguous ? "ambiguous" : "not ambiguous");
  return o;
}

// ---------------------------------------------------------------------------
// 9. CDV

Outcome cdv() {
  Outcome o;
  consensus::DistributionStats ref{0.0, 1.0, 100, {}};
  // Observations of n = 100 with an exact mean.
  auto sample_with_mean = [](double mean) {
    std::vector<double> xs(100);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = mean + (i % 2 == 0 ? 1.0 : -1.0);
    return xs;
  };
  auto near = consensus::cdv_check(sample_with_mean(0.05), ref, 3.0);
  auto far = consensus::cdv_check(sample_with_mean(0.5), ref, 3.0);
  const double threshold = 3.0 * 1.0 / std::sqrt(100.0);
  o.require(near.accepted && std::abs(near.threshold - threshold) < 1e-12, "0.05 accepted");
  o.require(!far.accepted, "0.5 rejected");
  util::Csprng rng(1009);
  int identical_ok = 0;
  for (int i = 0; i < 100; ++i) {
    double mu = static_cast<double>(rng.uniform(2001)) / 100.0 - 10.0;
    double sd = 0.1 + static_cast<double>(rng.uniform(100)) / 10.0;
    consensus::DistributionStats r{mu, sd, 100, {}};
    std::vector<double> xs(2 + rng.uniform(200), mu);
    double c = 0.01 + static_cast<double>(rng.uniform(1000)) / 100.0;
    identical_ok += consensus::cdv_check(xs, r, c).accepted ? 1 : 0;
  }
  o.require(identical_ok == 100, "identical");
  o.detail << "mean 0.05: z=" << near.z << " accepted=" << near.accepted << ", mean 0.5: z=" << far.z
           << " accepted=" << far.accepted << ", threshold " << near.threshold << ", " << identical_ok
           << "/100 identical distributions accepted";
  return o;
}

// ---------------------------------------------------------------------------
// 10. Split inference

Outcome split_inference() {
  Outcome o;
  util::Csprng rng(1010);
  model::MlpConfig cfg;
  cfg.widths = {4, 8, 8, 8, 2};
  auto m = model::random_mlp(cfg, rng);
  o.require(m.arch.num_layers() == 8, "eight layers");
  int cuts_ok = 0, cuts = 0, identity_ok = 0;
  for (int trial = 0; trial < 10; ++trial) {
    auto x = model::random_input(m.arch, rng);
    auto full = model::forward(m, x).output;
    for (std::size_t k = 1; k < m.arch.num_layers(); ++k) {
      auto st = model::split_forward(m, x, k);
      cuts_ok += model::resume(m, st) == full ? 1 : 0;
      ++cuts;
      util::Csprng noise(trial);
      identity_ok += model::privatize_embedding(st.z, 1.0, 0.0, m.arch.input_scale, noise) == st.z ? 1 : 0;
    }
  }
  const double eps = 0.5, sens = 0.05;
  const std::int64_t scale = 256;
  std::vector<std::int64_t> zeros(100000, 0);
  auto noised = model::privatize_embedding(zeros, eps, sens, scale, rng);
  double sum = 0, sq = 0;
  for (auto v : noised) {
    sum += static_cast<double>(v);
    sq += static_cast<double>(v) * static_cast<double>(v);
  }
  const double nn = static_cast<double>(noised.size());
  const double mean = sum / nn, sd = std::sqrt(sq / nn - mean * mean);
  const double expect = std::sqrt(2.0) * sens / eps * static_cast<double>(scale);
  const double rel = std::abs(sd - expect) / expect;
  o.require(cuts_ok == cuts, "cuts");
  o.require(identity_ok == cuts, "zero noise");
  o.require(rel <= 0.05, "laplace std");
  o.detail << cuts_ok << "/" << cuts << " cuts match, " << identity_ok << "/" << cuts
           << " zero-scale noise identities, noise std " << sd << " vs " << expect << " (" << rel * 100 << "%)";
  return o;
}

// ---------------------------------------------------------------------------
// 11. Network simulation

std::uint64_t modexp(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1;
  b %= m;
  while (e) {
    if (e & 1) r = r * b % m;
    b = b * b % m;
    e >>= 1;
  }
  return r;
}

Outcome netsim_properties() {
  Outcome o;
  netsim::ModpGroup g(algebra::U256(23), 5);
  auto A = g.public_value(algebra::U256(6)), B = g.public_value(algebra::U256(15));
  auto s_ab = g.shared_secret(B, algebra::U256(6)).value().limb[0];
  auto s_ba = g.shared_secret(A, algebra::U256(15)).value().limb[0];
  const auto oracle = modexp(modexp(5, 15, 23), 6, 23);
  o.require(s_ab == 2 && s_ba == 2 && oracle == 2, "worked example");

  const auto& curve = CurveProfile::main();
  util::Csprng rng(1011);
  auto ida = netsim::Keypair::generate(curve, rng), idb = netsim::Keypair::generate(curve, rng);
  auto ea = netsim::Keypair::generate(curve, rng), eb = netsim::Keypair::generate(curve, rng);
  auto ha = netsim::make_handshake(ida, 1, ea), hb = netsim::make_handshake(idb, 2, eb);
  auto a = netsim::finish_handshake(1, ea, hb);
  auto b = netsim::finish_handshake(2, eb, ha);
  std::vector<std::uint8_t> msg(64);
  rng.fill(msg);
  std::size_t tamper_trials = 0, tamper_missed = 0;
  for (int round = 0; round < 4; ++round) {
    auto frame = a.seal(msg);
    for (std::size_t bit = 0; bit < frame.size() * 8; ++bit) {
      auto bad = frame;
      bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      ++tamper_trials;
      try {
        b.open(bad);
        ++tamper_missed;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AuthFailure && e.code() != ErrorCode::ReplayDetected) ++tamper_missed;
      }
    }
    bool roundtrip = b.open(frame) == msg;
    bool replay = false;
    try {
      b.open(frame);
    } catch (const Error& e) {
      replay = e.code() == ErrorCode::ReplayDetected;
    }
    o.require(roundtrip && replay, "replay");
  }
  o.require(tamper_missed == 0, "tamper");

  util::Csprng mrng(1012);
  auto m = model::random_mlp({}, mrng);
  auto x = model::random_input(m.arch, mrng);
  std::vector<netsim::NodeDescriptor> nodes;
  for (std::uint32_t i = 0; i < 4; ++i) nodes.push_back({i, netsim::TeeType::Cpu, 1.0 + i % 2, {}});
  nodes[3].behavior = consensus::Behavior::Byzantine;
  netsim::SessionConfig cfg;
  cfg.seed = 17;
  cfg.redundancy = 3;
  cfg.cuts = {2, 4};
  auto r1 = netsim::run_session(m, x, nodes, cfg);
  auto r2 = netsim::run_session(m, x, nodes, cfg);
  auto l1 = netsim::format_log(r1.log), l2 = netsim::format_log(r2.log);
  o.require(l1 == l2, "determinism");
  o.require(r1.verified && r1.output && *r1.output == model::forward(m, x).output, "session output");
  o.require(netsim::direct_channel_property(r1.log), "direct channels");
  bool intermediates_seen = std::any_of(r1.log.begin(), r1.log.end(), [](const netsim::LogEvent& e) {
    return e.kind == "send" && e.payload == "intermediate" && e.channel == "direct";
  });
  o.require(intermediates_seen, "intermediates present");
  o.detail << "shared secret " << s_ab << "/" << s_ba << " (oracle " << oracle << "), " << tamper_missed << "/"
           << tamper_trials << " tampered frames accepted, replays rejected, logs " << (l1 == l2 ? "identical" : "differ")
           << " (" << r1.log.size() << " events), direct-channel property "
           << (netsim::direct_channel_property(r1.log) ? "holds" : "violated");
  return o;
}

// ---------------------------------------------------------------------------
// 12. Determinism and transcript modes

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  Outcome o;
  bool identical = false;
  std::string how;
#ifdef VDI_CLI_PATH
  {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "vdi-acceptance";
    fs::create_directories(dir);
    const std::string cli = VDI_CLI_PATH;
    auto run = [&](const std::string& args) {
      return std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    };
    auto model_path = (dir / "model.json").string();
    int rc = run("--seed 5 model --widths 2,3,2 --input-scale 16 --weight-scale 4 --q-bits 12 --head-lo -64 "
                 "--head-hi 63 -o " + model_path);
    rc |= run("--seed 42 prove --model " + model_path + " --proof " + (dir / "a.zkdp").string());
    rc |= run("--seed 42 prove --model " + model_path + " --proof " + (dir / "b.zkdp").string());
    rc |= run("verify --model " + model_path + " --proof " + (dir / "a.zkdp").string());
    auto pa = slurp(dir / "a.zkdp"), pb = slurp(dir / "b.zkdp");
    identical = rc == 0 && !pa.empty() && pa == pb;
    how = "cli, " + std::to_string(pa.size()) + " bytes";
    fs::remove_all(dir);
  }
#else
  {
    auto fx = make_fixture(1201, small_config());
    CommitmentKey key(CurveProfile::main(), zkdps::required_capacity(fx.model.arch));
    auto pa = prove_fixture(key, fx, 42).out.proof.serialize(key.profile());
    auto pb = prove_fixture(key, fx, 42).out.proof.serialize(key.profile());
    identical = pa == pb;
    how = "library, " + std::to_string(pa.size()) + " bytes";
  }
#endif
  o.require(identical, "prove --seed");

  int statements = 0, both = 0;
  for (const auto* profile : {&CurveProfile::test(), &CurveProfile::main()}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      auto fx = make_fixture(1300 + s, small_config());
      CommitmentKey key(*profile, zkdps::required_capacity(fx.model.arch));
      auto fs_proof = prove_fixture(key, fx, s);
      zkdps::ProofOptions inter;
      inter.mode = transcript::Mode::Interactive;
      inter.challenge_seed = 1000 + s;
      auto it_proof = prove_fixture(key, fx, s, inter);
      bool a = zkdps::verify_shard(key, fx.model.arch, fs_proof.weights.commitments, fs_proof.input.commitment,
                                   fs_proof.out.proof)
                   .accepted;
      bool b = zkdps::verify_shard(key, fx.model.arch, it_proof.weights.commitments, it_proof.input.commitment,
                                   it_proof.out.proof, inter)
                   .accepted;
      ++statements;
      both += a && b ? 1 : 0;
    }
  }
  o.require(both == statements, "modes");
  o.detail << "repeated proofs " << (identical ? "byte-identical" : "differ") << " (" << how << "), " << both << "/"
           << statements << " statements accepted in both transcript modes";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "commitment completeness and soundness", commitment_rounds},
      {2, "special-soundness extractor", extractor},
      {3, "sum-check oracle equivalence", sumcheck_oracle},
      {4, "matmul gadget", matmul},
      {5, "relu gadget", relu},
      {6, "lookup gadget", lookup},
      {7, "end-to-end proofs", end_to_end},
      {8, "shard composition and consensus", shards_and_consensus},
      {9, "distribution verification", cdv},
      {10, "split inference", split_inference},
      {11, "network simulation", netsim_properties},
      {12, "non-interactive determinism", determinism},
  };
  const char* only = std::getenv("VDI_ACCEPTANCE_ONLY");
  int failed = 0;
  for (const auto& c : all) {
    if (only && std::to_string(c.id) != only) continue;
    auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "threw " << e.what();
    }
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
