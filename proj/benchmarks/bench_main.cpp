#include <benchmark/benchmark.h>

#include "vdi/consensus/consensus.hpp"
#include "vdi/netsim/crypto.hpp"
#include "vdi/sumcheck/sumcheck.hpp"
#include "vdi/zkdps/zkdps.hpp"

using namespace vdi;
using algebra::CurveProfile;

namespace {

void BM_FieldMul(benchmark::State& state) {
  const auto& f = CurveProfile::main().scalar_field();
  util::Csprng rng(1);
  auto a = rng.field_element(f), b = rng.field_element(f);
  for (auto _ : state) {
    a = a * b;
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_FieldMul);

void BM_FieldInverse(benchmark::State& state) {
  const auto& f = CurveProfile::main().scalar_field();
  util::Csprng rng(2);
  auto a = rng.field_element(f);
  for (auto _ : state) benchmark::DoNotOptimize(a.inverse());
}
BENCHMARK(BM_FieldInverse);

void BM_Msm(benchmark::State& state) {
  const auto& c = CurveProfile::main();
  const auto n = static_cast<std::size_t>(state.range(0));
  commit::CommitmentKey key(c, n);
  util::Csprng rng(3);
  std::vector<algebra::FieldElement> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(rng.field_element(c.scalar_field()));
  auto r = rng.field_element(c.scalar_field());
  for (auto _ : state) benchmark::DoNotOptimize(commit::commit_vector(key, s, r));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Msm)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_SumcheckProve(benchmark::State& state) {
  const auto& f = CurveProfile::main().scalar_field();
  const auto v = static_cast<unsigned>(state.range(0));
  util::Csprng rng(4);
  std::vector<poly::MultilinearPoly> tables;
  for (int k = 0; k < 3; ++k) {
    std::vector<algebra::FieldElement> e;
    for (std::size_t i = 0; i < (std::size_t{1} << v); ++i) e.push_back(rng.field_element(f));
    tables.push_back(poly::MultilinearPoly::from_evals(f, std::move(e)));
  }
  sumcheck::Shape shape;
  shape.num_vars = v;
  shape.num_factors = 3;
  shape.degree_bound = 3;
  shape.terms.push_back({algebra::FieldElement::from_u64(f, 1), {0, 1, 2}, false});
  auto h = sumcheck::brute_force_sum(shape, tables);
  for (auto _ : state) {
    auto tr = transcript::Transcript::make(transcript::Mode::FiatShamir, f, "bench", 0);
    benchmark::DoNotOptimize(sumcheck::prove(shape, tables, h, {}, nullptr, tr, rng));
  }
}
BENCHMARK(BM_SumcheckProve)->DenseRange(4, 12, 4);

struct MlpFixture {
  model::Model model;
  std::vector<std::int64_t> x;
};

MlpFixture fixture() {
  util::Csprng rng(61);
  MlpFixture fx{model::random_mlp({}, rng), {}};
  fx.x = model::random_input(fx.model.arch, rng);
  return fx;
}

void BM_ZkdpsProve(benchmark::State& state) {
  const auto& profile = CurveProfile::main();
  auto fx = fixture();
  commit::CommitmentKey key(profile, zkdps::required_capacity(fx.model.arch));
  util::Csprng rng(5);
  auto weights = zkdps::commit_shard(key, fx.model, 0, fx.model.arch.num_layers(), rng);
  auto input = zkdps::commit_activation(key, fx.model.arch, 0, fx.x, rng);
  auto trace = model::forward(fx.model, fx.x).trace;
  for (auto _ : state) benchmark::DoNotOptimize(zkdps::prove_shard(key, fx.model, weights, input, trace, rng));
}
BENCHMARK(BM_ZkdpsProve)->Unit(benchmark::kMillisecond);

void BM_ZkdpsVerify(benchmark::State& state) {
  const auto& profile = CurveProfile::main();
  auto fx = fixture();
  commit::CommitmentKey key(profile, zkdps::required_capacity(fx.model.arch));
  util::Csprng rng(6);
  auto weights = zkdps::commit_shard(key, fx.model, 0, fx.model.arch.num_layers(), rng);
  auto input = zkdps::commit_activation(key, fx.model.arch, 0, fx.x, rng);
  auto trace = model::forward(fx.model, fx.x).trace;
  auto out = zkdps::prove_shard(key, fx.model, weights, input, trace, rng);
  for (auto _ : state) {
    auto rep = zkdps::verify_shard(key, fx.model.arch, weights.commitments, input.commitment, out.proof);
    if (!rep.accepted) state.SkipWithError("proof rejected");
  }
}
BENCHMARK(BM_ZkdpsVerify)->Unit(benchmark::kMillisecond);

void BM_Decide(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  std::vector<consensus::NodeOutput> outs;
  std::vector<std::int64_t> y(64, 7);
  for (std::size_t i = 0; i < m; ++i) outs.push_back(consensus::NodeOutput::of_tensor(static_cast<std::uint32_t>(i), y));
  consensus::ConsensusConfig cfg;
  cfg.redundancy = m;
  for (auto _ : state) benchmark::DoNotOptimize(consensus::decide(outs, cfg));
}
BENCHMARK(BM_Decide)->Arg(3)->Arg(7)->Arg(31);

void BM_ChannelSeal(benchmark::State& state) {
  const auto& c = CurveProfile::main();
  util::Csprng rng(7);
  auto id_b = netsim::Keypair::generate(c, rng);
  auto eph_a = netsim::Keypair::generate(c, rng), eph_b = netsim::Keypair::generate(c, rng);
  auto hs_b = netsim::make_handshake(id_b, 2, eph_b);
  auto end = netsim::finish_handshake(1, eph_a, hs_b);
  std::vector<std::uint8_t> payload(static_cast<std::size_t>(state.range(0)), 0x5a);
  for (auto _ : state) benchmark::DoNotOptimize(end.seal(payload));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_ChannelSeal)->Arg(1024)->Arg(65536);

}  // namespace

BENCHMARK_MAIN();
