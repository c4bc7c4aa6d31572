#include <gtest/gtest.h>

#include <cmath>

#include "vdi/algebra/curve.hpp"
#include "vdi/error.hpp"
#include "vdi/gadgets/tensor.hpp"
#include "vdi/model/model.hpp"

using namespace vdi;
using namespace vdi::model;

namespace {

Model identity_relu_model() {
  Model m;
  m.arch.input_scale = 1;
  m.arch.layers = {LayerSpec::linear(2, 2, 1), LayerSpec::relu(2), LayerSpec::linear(2, 1, 1)};
  m.weights = {{{1, 0, 0, 1}, {0, 0}}, {}, {{1, 1}, {0}}};
  m.validate();
  return m;
}

Model eight_layer_model(util::Csprng& rng) {
  MlpConfig cfg;
  cfg.widths = {4, 8, 8, 8, 2};
  return random_mlp(cfg, rng);
}

}  // namespace

TEST(Quantize, Examples) {
  EXPECT_EQ(quantize(0.0, 1024), 0);
  EXPECT_EQ(quantize(-1.25, 4), -5);
  const auto& f = algebra::CurveProfile::test().scalar_field();
  auto fe = gadgets::to_field(f, std::vector<std::int64_t>{-5});
  EXPECT_EQ(fe[0].value().limb[0], 65287u - 5);
  EXPECT_EQ(quantize(0.1, 8), 1);
  EXPECT_EQ(quantize(0.0625, 8), 0);  // 0.5 ties to even
  EXPECT_EQ(quantize(0.1875, 8), 2);  // 1.5 ties to even
  EXPECT_THROW(quantize(1.0, std::int64_t{1} << 20, 20), Error);
}

TEST(Quantize, RoundTripErrorBound) {
  util::Csprng rng(51);
  for (std::int64_t scale : {1, 2, 16, 256, 65536}) {
    for (int i = 0; i < 1000; ++i) {
      double v = (2 * rng.uniform_open01() - 1) * 1000;
      double back = dequantize(std::vector<std::int64_t>{quantize(v, scale)}, scale)[0];
      ASSERT_LE(std::fabs(back - v), 0.5 / static_cast<double>(scale) + 1e-12);
    }
  }
}

TEST(Forward, HandComputedExamples) {
  auto m = identity_relu_model();
  auto r1 = forward_range(m, 0, 2, std::vector<std::int64_t>{1, -1});
  EXPECT_EQ(r1.output, (std::vector<std::int64_t>{1, 0}));
  auto r = forward(m, std::vector<std::int64_t>{1, -1});
  EXPECT_EQ(r.output, (std::vector<std::int64_t>{1}));
  EXPECT_EQ(r.trace.num_layers(), 3u);
  for (std::size_t i = 0; i + 1 < r.trace.activations.size(); ++i) {
    EXPECT_EQ(r.trace.activations[i].size(), m.arch.layers[i].in);
  }
  EXPECT_THROW(forward(m, std::vector<std::int64_t>{1}), Error);
}

TEST(Forward, ZeroInputZeroBiasStaysZero) {
  util::Csprng rng(52);
  MlpConfig cfg;
  cfg.widths = {6, 16, 16, 16, 16, 3};
  cfg.head.reset();
  auto m = random_mlp(cfg, rng);
  for (auto& w : m.weights) std::fill(w.bias.begin(), w.bias.end(), 0);
  auto r = forward(m, std::vector<std::int64_t>(6, 0));
  EXPECT_EQ(r.output, std::vector<std::int64_t>(3, 0));
}

TEST(Forward, RescaleRoundsHalfUpWithBoundedRemainder) {
  Model m;
  m.arch.input_scale = 1;
  m.arch.layers = {LayerSpec::linear(1, 1, 4)};
  m.weights = {{{1}, {0}}};
  for (std::int64_t x = -20; x <= 20; ++x) {
    auto r = forward(m, std::vector<std::int64_t>{x});
    std::int64_t y = r.output[0], rem = r.trace.remainders[0][0];
    EXPECT_EQ(x, 4 * y + rem);
    EXPECT_GE(rem, -2);
    EXPECT_LE(rem, 1);
    EXPECT_EQ(y, static_cast<std::int64_t>(std::floor(x / 4.0 + 0.5)));
  }
}

TEST(Forward, OverflowAndTableDomain) {
  Model m;
  m.arch.input_scale = 1;
  m.arch.q_bits = 8;
  m.arch.layers = {LayerSpec::linear(1, 1, 1)};
  m.weights = {{{100}, {0}}};
  EXPECT_THROW(forward(m, std::vector<std::int64_t>{3}), Error);
  Model t;
  t.arch.input_scale = 16;
  t.arch.layers = {LayerSpec::lookup(2, gadgets::TableFn::Sigmoid, -64, 64, 16)};
  t.weights.resize(1);
  auto r = forward(t, std::vector<std::int64_t>{0, 64});
  EXPECT_EQ(r.output[0], 8);
  EXPECT_EQ(r.trace.multiplicities[0][64], 1u);
  EXPECT_THROW(forward(t, std::vector<std::int64_t>{0, 65}), Error);
}

TEST(Forward, DeterministicTraceBytes) {
  util::Csprng a(53), b(53);
  auto ma = random_mlp({}, a), mb = random_mlp({}, b);
  auto xa = random_input(ma.arch, a), xb = random_input(mb.arch, b);
  EXPECT_EQ(forward(ma, xa).trace.serialize(), forward(mb, xb).trace.serialize());
}

TEST(Architecture, ValidationRejectsBadShapes) {
  ModelArchitecture a;
  a.layers = {LayerSpec::linear(4, 8, 16), LayerSpec::relu(7)};
  EXPECT_THROW(a.validate(), Error);
  a.layers = {LayerSpec::linear(4, 8, 12)};
  EXPECT_THROW(a.validate(), Error);
  // width 3 has padding slots carrying 0, outside the rsqrt domain
  a.layers = {LayerSpec::linear(4, 3, 16), LayerSpec::lookup(3, gadgets::TableFn::RmsnormRsqrt, 1, 100, 16)};
  EXPECT_THROW(a.validate(), Error);
  a.layers = {LayerSpec::linear(4, 4, 16), LayerSpec::lookup(4, gadgets::TableFn::RmsnormRsqrt, 1, 100, 16)};
  EXPECT_NO_THROW(a.validate());
  a.layers = {LayerSpec::linear(4, 3, 16), LayerSpec::lookup(3, gadgets::TableFn::Sigmoid, -8, 8, 16),
              LayerSpec::relu(3)};
  EXPECT_EQ(a.pad_value(1), 0);
  EXPECT_EQ(a.pad_value(2), 8);
}

TEST(Split, EveryCutReproducesForward) {
  util::Csprng rng(54);
  auto m = eight_layer_model(rng);
  ASSERT_EQ(m.arch.num_layers(), 8u);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = random_input(m.arch, rng);
    auto full = forward(m, x).output;
    for (std::size_t k = 1; k < 8; ++k) {
      auto st = split_forward(m, x, k);
      EXPECT_EQ(resume(m, st), full) << "cut " << k;
      util::Csprng noise(1);
      EXPECT_EQ(privatize_embedding(st.z, INFINITY, 1.0, m.arch.input_scale, noise), st.z);
      EXPECT_EQ(privatize_embedding(st.z, 1.0, 0.0, m.arch.input_scale, noise), st.z);
    }
    auto last = split_forward(m, x, 7);
    EXPECT_EQ(last.z, forward_range(m, 0, 7, x).output);
  }
  auto x = random_input(m.arch, rng);
  EXPECT_THROW(split_forward(m, x, 0), Error);
  EXPECT_THROW(split_forward(m, x, 8), Error);
}

TEST(Privacy, LaplaceNoiseStatistics) {
  util::Csprng rng(55);
  const double eps = 0.5, sens = 0.05;
  const std::int64_t scale = 256;
  std::vector<std::int64_t> z(100000, 0);
  auto noised = privatize_embedding(z, eps, sens, scale, rng);
  double sum = 0, sq = 0;
  for (auto v : noised) {
    sum += static_cast<double>(v);
    sq += static_cast<double>(v) * static_cast<double>(v);
  }
  double n = static_cast<double>(noised.size());
  double mean = sum / n, sd = std::sqrt(sq / n - mean * mean);
  double expect = std::sqrt(2.0) * sens / eps * static_cast<double>(scale);
  EXPECT_NEAR(sd, expect, 0.05 * expect);
  EXPECT_NEAR(mean, 0.0, 0.5);
  util::Csprng a(9), b(9);
  EXPECT_EQ(privatize_embedding(std::vector<std::int64_t>(10, 3), 1, 1, 16, a),
            privatize_embedding(std::vector<std::int64_t>(10, 3), 1, 1, 16, b));
  EXPECT_THROW(privatize_embedding(z, 0.0, 1.0, 1, rng), Error);
  EXPECT_THROW(privatize_embedding(z, -1.0, 1.0, 1, rng), Error);
}

TEST(Shards, RandomPlansComposeBitExactly) {
  util::Csprng rng(56);
  auto m = random_mlp({}, rng);
  for (int trial = 0; trial < 20; ++trial) {
    auto plan = ShardPlan::random(m.arch.num_layers(), 7, 3, rng);
    EXPECT_NO_THROW(plan.validate(m.arch.num_layers()));
    for (const auto& sh : plan.shards) EXPECT_EQ(sh.nodes.size(), 3u);
    auto x = random_input(m.arch, rng);
    EXPECT_EQ(run_plan(m, plan, x), forward(m, x).output);
  }
  ShardPlan gap;
  gap.shards = {{0, 2, {0}}, {3, 6, {1}}};
  EXPECT_THROW(gap.validate(6), Error);
  ShardPlan orphan;
  orphan.shards = {{0, 6, {}}};
  EXPECT_THROW(orphan.validate(6), Error);
  auto even = ShardPlan::even(6, 3, 5, 2);
  EXPECT_NO_THROW(even.validate(6));
}

TEST(Files, JsonRoundTrip) {
  util::Csprng rng(57);
  auto m = random_mlp({}, rng);
  auto back = model_from_json(model_to_json(m));
  EXPECT_EQ(back.arch, m.arch);
  EXPECT_EQ(back.weights, m.weights);
  auto arch_text = architecture_to_json(m.arch);
  EXPECT_EQ(arch_text.find("weights"), std::string::npos);
  EXPECT_EQ(architecture_from_json(arch_text), m.arch);
  EXPECT_THROW(model_from_json(arch_text), Error);
  EXPECT_THROW(model_from_json("{not json"), Error);
  EXPECT_EQ(parse_tensor("1\n-2\n# c\n\n 3 \n"), (std::vector<std::int64_t>{1, -2, 3}));
  EXPECT_EQ(parse_tensor(format_tensor(std::vector<std::int64_t>{5, -7})), (std::vector<std::int64_t>{5, -7}));
  EXPECT_THROW(parse_tensor("1.5\n"), Error);
}
