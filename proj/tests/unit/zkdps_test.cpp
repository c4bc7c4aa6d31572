#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>

#include "vdi/zkdps/zkdps.hpp"

using namespace vdi;
using namespace vdi::zkdps;
using algebra::CurveProfile;

namespace {

struct Fixture {
  model::Model model;
  std::vector<std::int64_t> x;
};

Fixture mlp_fixture(std::uint64_t seed, model::MlpConfig cfg = {}) {
  util::Csprng rng(seed);
  Fixture fx{model::random_mlp(cfg, rng), {}};
  fx.x = model::random_input(fx.model.arch, rng);
  return fx;
}

struct Proved {
  CommittedShard weights;
  CommittedTensor input;
  ShardOutput out;
};

Proved prove_all(const CommitmentKey& key, const Fixture& fx, std::uint64_t seed, const ProofOptions& opt = {}) {
  util::Csprng rng(seed);
  Proved p;
  std::size_t n = fx.model.arch.num_layers();
  p.weights = commit_shard(key, fx.model, 0, n, rng);
  p.input = commit_activation(key, fx.model.arch, 0, fx.x, rng);
  auto trace = model::forward(fx.model, fx.x).trace;
  p.out = prove_shard(key, fx.model, p.weights, p.input, trace, rng, opt);
  return p;
}

}  // namespace

TEST(Zkdps, FixtureProvesAndVerifiesOnMain) {
  auto fx = mlp_fixture(61);
  const auto& profile = CurveProfile::main();
  CommitmentKey key(profile, required_capacity(fx.model.arch));
  auto t0 = std::chrono::steady_clock::now();
  auto p = prove_all(key, fx, 1);
  double prove_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  auto bytes = p.out.proof.serialize(profile);
  auto rep = verify_shard_bytes(key, fx.model.arch, p.weights.commitments, p.input.commitment, bytes);
  EXPECT_TRUE(rep.accepted) << rep.failed_check;
  std::cout << "prove " << prove_ms << " ms, verify " << rep.verify_ms << " ms, " << bytes.size() << " bytes\n";
  auto y = model::forward(fx.model, fx.x).output;
  EXPECT_TRUE(check_activation(key, fx.model.arch, fx.model.arch.num_layers(), y, p.out.output.blinding,
                               p.out.proof.output()));
}

namespace {

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

}  // namespace

// Every header byte plus a stride through the body.
TEST(Zkdps, ByteFlipSampleOnSmallFixture) {
  auto fx = mlp_fixture(62, small_config());
  const auto& profile = CurveProfile::main();
  CommitmentKey key(profile, required_capacity(fx.model.arch));
  auto p = prove_all(key, fx, 2);
  auto bytes = p.out.proof.serialize(profile);
  auto t0 = std::chrono::steady_clock::now();
  std::size_t accepted = 0, malformed = 0;
  for (std::size_t i = 0; i < bytes.size(); i += (i < 64 ? 1 : 37)) {
    auto bad = bytes;
    bad[i] ^= 0x01;
    auto rep = verify_shard_bytes(key, fx.model.arch, p.weights.commitments, p.input.commitment, bad);
    if (rep.accepted) {
      ++accepted;
      ADD_FAILURE() << "flip at byte " << i << " accepted";
    }
    if (rep.failed_check.rfind("container/malformed", 0) == 0) ++malformed;
  }
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  std::cout << bytes.size() << " bytes, " << malformed << " malformed, " << ms << " ms\n";
  EXPECT_EQ(accepted, 0u);
}

TEST(Zkdps, SameSeedGivesIdenticalProofBytes) {
  auto fx = mlp_fixture(63, small_config());
  const auto& profile = CurveProfile::test();
  CommitmentKey key(profile, required_capacity(fx.model.arch));
  auto a = prove_all(key, fx, 9);
  auto b = prove_all(key, fx, 9);
  auto c = prove_all(key, fx, 10);
  EXPECT_EQ(a.out.proof.serialize(profile), b.out.proof.serialize(profile));
  EXPECT_NE(a.out.proof.serialize(profile), c.out.proof.serialize(profile));
  EXPECT_EQ(a.weights.commitments.serialize(profile), b.weights.commitments.serialize(profile));
  auto rep = verify_shard(key, fx.model.arch, a.weights.commitments, a.input.commitment, a.out.proof);
  EXPECT_TRUE(rep.accepted) << rep.failed_check;
}

TEST(Zkdps, CommitShardSeparatesWeights) {
  auto fx = mlp_fixture(64, small_config());
  const auto& profile = CurveProfile::test();
  CommitmentKey key(profile, required_capacity(fx.model.arch));
  util::Csprng r1(5), r2(5);
  auto a = commit_shard(key, fx.model, 0, 3, r1);
  auto model2 = fx.model;
  model2.weights[0].w[1] += 1;
  auto b = commit_shard(key, model2, 0, 3, r2);
  EXPECT_NE(a.commitments.w[0], b.commitments.w[0]);
  EXPECT_EQ(a.commitments.bias[0], b.commitments.bias[0]);
  EXPECT_TRUE(a.commitments.w[1].is_infinity());
  auto back = WeightCommitments::deserialize(a.commitments.serialize(profile), profile);
  EXPECT_EQ(back, a.commitments);
}

TEST(Zkdps, SubstitutedWeightsRejected) {
  auto fx = mlp_fixture(65, small_config());
  const auto& profile = CurveProfile::main();
  CommitmentKey key(profile, required_capacity(fx.model.arch));
  auto p = prove_all(key, fx, 3);
  util::Csprng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    auto alt = model::random_mlp(small_config(), rng);
    std::size_t n = alt.arch.num_layers();
    auto weights = commit_shard(key, alt, 0, n, rng);
    auto input = commit_activation(key, alt.arch, 0, fx.x, rng);
    auto trace = model::forward(alt, fx.x).trace;
    auto out = prove_shard(key, alt, weights, input, trace, rng);
    // Published commitments belong to the original model.
    auto rep = verify_shard(key, fx.model.arch, p.weights.commitments, input.commitment, out.proof);
    EXPECT_FALSE(rep.accepted);
    EXPECT_TRUE(verify_shard(key, alt.arch, weights.commitments, input.commitment, out.proof).accepted);
  }
}

TEST(Zkdps, TamperedActivationsRejected) {
  auto fx = mlp_fixture(66, small_config());
  const auto& profile = CurveProfile::main();
  CommitmentKey key(profile, required_capacity(fx.model.arch));
  util::Csprng rng(8);
  std::size_t n = fx.model.arch.num_layers();
  auto weights = commit_shard(key, fx.model, 0, n, rng);
  auto input = commit_activation(key, fx.model.arch, 0, fx.x, rng);
  auto honest = model::forward(fx.model, fx.x).trace;
  EXPECT_THROW(
      {
        auto bad = honest;
        bad.activations[1][0] += 1;
        prove_shard(key, fx.model, weights, input, bad, rng);
      },
      Error);
  ProofOptions opt;
  opt.prover = gadgets::ProverMode::Dishonest;
  for (std::size_t k = 1; k <= n; ++k) {
    auto bad = honest;
    bad.activations[k][0] += 1;
    auto out = prove_shard(key, fx.model, weights, input, bad, rng, opt);
    auto rep = verify_shard(key, fx.model.arch, weights.commitments, input.commitment, out.proof);
    EXPECT_FALSE(rep.accepted) << "activation " << k;
    bool named = std::any_of(rep.layers.begin(), rep.layers.end(),
                             [](const LayerReport& l) { return l.checked && !l.ok && !l.failed_check.empty(); });
    EXPECT_TRUE(named) << rep.failed_check;
  }
}

namespace {

// Skips the computation: every activation after the input is noise.
model::InferenceTrace noise_trace(const model::Model& m, std::size_t first, std::size_t last,
                                  std::span<const std::int64_t> x, util::Csprng& rng) {
  auto trace = model::forward_range(m, first, last, x).trace;
  for (std::size_t k = 1; k < trace.activations.size(); ++k) {
    for (auto& v : trace.activations[k]) v = static_cast<std::int64_t>(rng.uniform(512)) - 256;
  }
  for (auto& r : trace.remainders) {
    for (auto& v : r) v = 0;
  }
  return trace;
}

}  // namespace

TEST(Zkdps, RandomOutputAttackerRejected) {
  auto fx = mlp_fixture(67, small_config());
  const auto& profile = CurveProfile::main();
  CommitmentKey key(profile, required_capacity(fx.model.arch));
  util::Csprng rng(9);
  auto weights = commit_shard(key, fx.model, 0, 2, rng);
  ProofOptions opt;
  opt.prover = gadgets::ProverMode::Dishonest;
  std::size_t accepted = 0;
  for (int trial = 0; trial < 25; ++trial) {
    auto x = model::random_input(fx.model.arch, rng);
    auto input = commit_activation(key, fx.model.arch, 0, x, rng);
    auto trace = noise_trace(fx.model, 0, 2, x, rng);
    if (trace.activations == model::forward_range(fx.model, 0, 2, x).trace.activations) continue;
    auto out = prove_shard(key, fx.model, weights, input, trace, rng, opt);
    if (verify_shard(key, fx.model.arch, weights.commitments, input.commitment, out.proof).accepted) ++accepted;
  }
  EXPECT_EQ(accepted, 0u);
}

TEST(Zkdps, TruncatedContainerIsMalformed) {
  auto fx = mlp_fixture(68, small_config());
  const auto& profile = CurveProfile::test();
  CommitmentKey key(profile, required_capacity(fx.model.arch));
  auto p = prove_all(key, fx, 4);
  auto bytes = p.out.proof.serialize(profile);
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    std::vector<std::uint8_t> t(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(ShardProof::deserialize(t, profile), Error);
    auto rep = verify_shard_bytes(key, fx.model.arch, p.weights.commitments, p.input.commitment, t);
    EXPECT_FALSE(rep.accepted);
    EXPECT_EQ(rep.failed_check.rfind("container/malformed", 0), 0u) << rep.failed_check;
  }
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_FALSE(verify_shard_bytes(key, fx.model.arch, p.weights.commitments, p.input.commitment, extra).accepted);
  auto last = p.out.proof;
  last.layers.pop_back();
  EXPECT_FALSE(verify_shard(key, fx.model.arch, p.weights.commitments, p.input.commitment, last).accepted);
}

TEST(Zkdps, InteractiveAndFiatShamirBothAccept) {
  auto fx = mlp_fixture(69, small_config());
  const auto& profile = CurveProfile::test();
  CommitmentKey key(profile, required_capacity(fx.model.arch));
  ProofOptions inter;
  inter.mode = transcript::Mode::Interactive;
  inter.challenge_seed = 1234;
  auto a = prove_all(key, fx, 5, inter);
  auto b = prove_all(key, fx, 5);
  EXPECT_TRUE(verify_shard(key, fx.model.arch, a.weights.commitments, a.input.commitment, a.out.proof, inter).accepted);
  EXPECT_TRUE(verify_shard(key, fx.model.arch, b.weights.commitments, b.input.commitment, b.out.proof).accepted);
  EXPECT_FALSE(verify_shard(key, fx.model.arch, a.weights.commitments, a.input.commitment, a.out.proof).accepted);
  auto other = inter;
  other.challenge_seed = 4321;
  EXPECT_FALSE(
      verify_shard(key, fx.model.arch, a.weights.commitments, a.input.commitment, a.out.proof, other).accepted);
}

TEST(Zkdps, ShardsChainThroughHandoff) {
  auto fx = mlp_fixture(70);
  const auto& profile = CurveProfile::main();
  const auto& arch = fx.model.arch;
  CommitmentKey key(profile, required_capacity(arch));
  util::Csprng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    auto plan = model::ShardPlan::random(arch.num_layers(), 3, 1, rng);
    auto cur = commit_activation(key, arch, 0, fx.x, rng);
    std::vector<std::int64_t> x = fx.x;
    GroupPoint expected = cur.commitment;
    for (const auto& s : plan.shards) {
      auto weights = commit_shard(key, fx.model, s.first, s.last, rng);
      auto fwd = model::forward_range(fx.model, s.first, s.last, x);
      auto out = prove_shard(key, fx.model, weights, cur, fwd.trace, rng);
      auto rep = verify_shard(key, arch, weights.commitments, expected, out.proof);
      ASSERT_TRUE(rep.accepted) << rep.failed_check << " at shard " << s.first;
      // A proof for this shard does not verify against a different boundary.
      auto wrong = expected + key.h_pow(FieldElement::one(key.field()));
      EXPECT_FALSE(verify_shard(key, arch, weights.commitments, wrong, out.proof).accepted);
      expected = out.proof.output();
      cur = std::move(out.output);
      x = fwd.output;
    }
    EXPECT_EQ(x, model::forward(fx.model, fx.x).output);
    EXPECT_TRUE(check_activation(key, arch, arch.num_layers(), x, cur.blinding, expected));
  }
}
