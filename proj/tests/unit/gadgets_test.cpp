#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "vdi/gadgets/gadgets.hpp"

using namespace vdi;
using namespace vdi::gadgets;
using algebra::CurveProfile;

namespace {

std::vector<std::int64_t> random_ints(util::Csprng& rng, std::size_t n, std::int64_t lo, std::int64_t hi) {
  std::vector<std::int64_t> v(n);
  for (auto& x : v) x = lo + static_cast<std::int64_t>(rng.uniform(static_cast<std::uint64_t>(hi - lo + 1)));
  return v;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tables

TEST(Tables, SigmoidAndShape) {
  auto t = build_function_table(TableFn::Sigmoid, -512, 512, 256);
  EXPECT_EQ(t.rows(), 1025u);
  EXPECT_EQ(t.width(), 2u);
  EXPECT_EQ(t.apply(0), 128);
  for (std::size_t i = 1; i < t.rows(); ++i) EXPECT_LE(t.columns[1][i - 1], t.columns[1][i]);
  auto e = build_function_table(TableFn::SoftmaxExp, -256, 0, 256);
  for (std::size_t i = 1; i < e.rows(); ++i) EXPECT_LE(e.columns[1][i - 1], e.columns[1][i]);
  EXPECT_EQ(e.apply(0), 256);
  EXPECT_THROW(build_function_table(TableFn::Sigmoid, 0, 100, 16, 50), Error);
  EXPECT_THROW(build_function_table(TableFn::RmsnormRsqrt, 0, 10, 16), Error);
  EXPECT_THROW(t.apply(513), Error);
  EXPECT_EQ(round_half_even(2.5), 2);
  EXPECT_EQ(round_half_even(3.5), 4);
  EXPECT_EQ(round_half_even(-2.5), -2);
}

TEST(Tables, DescriptorRebuildsIdenticalTable) {
  auto t = build_function_table(TableFn::Gelu, -100, 100, 32);
  util::ByteWriter w;
  t.write_descriptor(w);
  util::ByteReader r(w.data());
  auto back = LookupTable::read_descriptor(r);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(table_fn_from_string(to_string(TableFn::Gelu)), TableFn::Gelu);
}

// ---------------------------------------------------------------------------
// Lookup

TEST(Lookup, MultiplicityExample) {
  const auto& f = CurveProfile::test().scalar_field();
  auto table = range_table(1, 3);
  auto s = to_field(f, std::vector<std::int64_t>{1, 2, 1});
  const std::vector<FieldElement>* cols[] = {&s};
  auto e = multiplicities(table, cols);
  ASSERT_GE(e.size(), 3u);
  EXPECT_EQ((std::vector<std::uint64_t>(e.begin(), e.begin() + 3)), (std::vector<std::uint64_t>{2, 1, 0}));

  auto tcol = to_field(f, table.columns[0]);
  auto [lhs, rhs] = logup_sides(s, tcol, std::vector<std::uint64_t>{2, 1, 0}, FieldElement::from_u64(f, 5));
  EXPECT_EQ(lhs, rhs);
  // 2/6 + 1/7 = 1/6 + 1/7 + 1/6 directly
  auto six = FieldElement::from_u64(f, 6), seven = FieldElement::from_u64(f, 7);
  EXPECT_EQ(lhs, six.inverse() + seven.inverse() + six.inverse());

  auto bad = to_field(f, std::vector<std::int64_t>{1, 4});
  const std::vector<FieldElement>* bad_cols[] = {&bad};
  EXPECT_THROW(multiplicities(table, bad_cols), Error);
}

TEST(Lookup, MultiplicitiesMatchCountingOracle) {
  util::Csprng rng(41);
  const auto& f = CurveProfile::main().scalar_field();
  for (int trial = 0; trial < 100; ++trial) {
    std::int64_t lo = -static_cast<std::int64_t>(rng.uniform(50)), hi = lo + 1 + rng.uniform(60);
    auto table = range_table(lo, hi);
    auto sv = random_ints(rng, 1 + rng.uniform(40), lo, hi);
    auto s = to_field(f, sv);
    const std::vector<FieldElement>* cols[] = {&s};
    auto e = multiplicities(table, cols);
    for (std::int64_t x = lo; x <= hi; ++x) {
      ASSERT_EQ(e[x - lo], static_cast<std::uint64_t>(std::count(sv.begin(), sv.end(), x)));
    }
    std::vector<std::uint64_t> ee(e.begin(), e.begin() + table.rows());
    auto tcol = to_field(f, table.columns[0]);
    auto x = rng.field_element(f);
    auto [lhs, rhs] = logup_sides(s, tcol, ee, x);
    ASSERT_EQ(lhs, rhs);
  }
}

TEST(Lookup, ProveAndVerifyTwoColumnTable) {
  util::Csprng rng(42);
  for (const auto* profile : {&CurveProfile::test(), &CurveProfile::main()}) {
    const auto& f = profile->scalar_field();
    CommitmentKey key(*profile, 256);
    auto table = build_function_table(TableFn::Sigmoid, -100, 100, 16);
    auto xs = random_ints(rng, 8, -100, 100);
    std::vector<std::int64_t> ys;
    for (auto x : xs) ys.push_back(table.apply(x));
    auto xt = CommittedTensor::commit(key, to_field(f, xs), rng);
    auto yt = CommittedTensor::commit(key, to_field(f, ys), rng);
    const CommittedTensor* cols[] = {&xt, &yt};
    auto pt = Transcript::fiat_shamir(f, "lookup");
    auto proof = prove_lookup(key, table, cols, pt, rng);
    std::vector<GroupPoint> cc = {xt.commitment, yt.commitment};
    auto vt = Transcript::fiat_shamir(f, "lookup");
    auto verdict = verify_lookup(key, table, cc, 3, proof, vt);
    EXPECT_TRUE(verdict) << verdict.failed_check;

    util::ByteWriter w;
    proof.write(w);
    util::ByteReader r(w.data());
    auto back = LookupProof::read(r, *profile);
    auto vt2 = Transcript::fiat_shamir(f, "lookup");
    EXPECT_TRUE(verify_lookup(key, table, cc, 3, back, vt2));

    // wrong output for a valid input
    ys[2] += 1;
    auto yb = CommittedTensor::commit(key, to_field(f, ys), rng);
    const CommittedTensor* bad_cols[] = {&xt, &yb};
    auto pt3 = Transcript::fiat_shamir(f, "lookup");
    EXPECT_THROW(prove_lookup(key, table, bad_cols, pt3, rng), Error);
    auto pt4 = Transcript::fiat_shamir(f, "lookup");
    auto forged = prove_lookup(key, table, bad_cols, pt4, rng, ProverMode::Dishonest);
    std::vector<GroupPoint> bc = {xt.commitment, yb.commitment};
    auto vt4 = Transcript::fiat_shamir(f, "lookup");
    EXPECT_FALSE(verify_lookup(key, table, bc, 3, forged, vt4));
  }
}

TEST(Lookup, OutOfTableWitnessRejected) {
  util::Csprng rng(43);
  const auto& f = CurveProfile::main().scalar_field();
  CommitmentKey key(CurveProfile::main(), 64);
  auto table = range_table(0, 15);
  for (int trial = 0; trial < 20; ++trial) {
    auto v = random_ints(rng, 16, 0, 15);
    v[rng.uniform(16)] = 16 + static_cast<std::int64_t>(rng.uniform(100));
    auto t = CommittedTensor::commit(key, to_field(f, v), rng);
    const CommittedTensor* cols[] = {&t};
    auto pt = Transcript::fiat_shamir(f, "oot");
    auto proof = prove_lookup(key, table, cols, pt, rng, ProverMode::Dishonest);
    std::vector<GroupPoint> cc = {t.commitment};
    auto vt = Transcript::fiat_shamir(f, "oot");
    ASSERT_FALSE(verify_lookup(key, table, cc, 4, proof, vt));
  }
}

// ---------------------------------------------------------------------------
// ReLU

TEST(Relu, DecompositionExamples) {
  const auto& f = CurveProfile::test().scalar_field();
  auto z = to_field(f, std::vector<std::int64_t>{-3, 5, 0});
  auto w = relu_decompose(f, z, 4);
  auto bits_of = [&](std::size_t j) {
    std::string s;
    for (unsigned k = 1; k <= 4; ++k) s.push_back(w.bits[k][j].is_one() ? '1' : '0');
    return s;
  };
  EXPECT_TRUE(w.bits[0][0].is_zero());
  EXPECT_EQ(bits_of(0), "0011");
  EXPECT_TRUE(w.bits[0][1].is_one());
  EXPECT_EQ(bits_of(1), "0101");
  EXPECT_TRUE(w.bits[0][2].is_one());
  EXPECT_EQ(bits_of(2), "0000");
  EXPECT_EQ(relu_reference(std::vector<std::int64_t>{-3, 5, 0}), (std::vector<std::int64_t>{0, 5, 0}));
  auto big = to_field(f, std::vector<std::int64_t>{16});
  try {
    relu_decompose(f, big, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MagnitudeOverflow);
  }
  EXPECT_EQ(max_relu_bits(f), 14u);
  EXPECT_EQ(max_relu_bits(CurveProfile::main().scalar_field()), 62u);
}

TEST(Relu, ExhaustiveAtFourBits) {
  util::Csprng rng(44);
  const auto& f = CurveProfile::test().scalar_field();
  CommitmentKey key(CurveProfile::test(), 32);
  std::vector<std::int64_t> all;
  for (std::int64_t z = -15; z <= 15; ++z) all.push_back(z);
  auto a_ref = relu_reference(all);
  auto zt = CommittedTensor::commit(key, to_field_padded(f, all), rng);
  auto at = CommittedTensor::commit(key, to_field_padded(f, a_ref), rng);
  auto pt = Transcript::fiat_shamir(f, "relu");
  auto proof = prove_relu(key, zt, at, 4, pt, rng);
  auto vt = Transcript::fiat_shamir(f, "relu");
  auto verdict = verify_relu(key, zt.commitment, at.commitment, 5, 4, proof, vt);
  EXPECT_TRUE(verdict) << verdict.failed_check;
  for (std::size_t j = 0; j < all.size(); ++j) EXPECT_EQ(a_ref[j], std::max<std::int64_t>(0, all[j]));
}

TEST(Relu, WrongOutputAndBadBitsRejected) {
  util::Csprng rng(45);
  const auto& f = CurveProfile::main().scalar_field();
  CommitmentKey key(CurveProfile::main(), 8);
  std::vector<std::int64_t> z = {-7, 3, 0, 12, -1, 9, -15, 4};
  auto a = relu_reference(z);
  auto zt = CommittedTensor::commit(key, to_field(f, z), rng);

  auto a_bad = a;
  a_bad[1] = 2;
  auto abt = CommittedTensor::commit(key, to_field(f, a_bad), rng);
  auto tr = Transcript::fiat_shamir(f, "relu");
  EXPECT_THROW(prove_relu(key, zt, abt, 4, tr, rng), Error);

  // The honest bits for z with a forged output.
  auto honest_bits = relu_decompose(f, zt.values, 4);
  auto pt = Transcript::fiat_shamir(f, "relu");
  auto p1 = prove_relu_unchecked(key, zt, abt, honest_bits, 4, pt, rng);
  auto vt = Transcript::fiat_shamir(f, "relu");
  EXPECT_FALSE(verify_relu(key, zt.commitment, abt.commitment, 3, 4, p1, vt));

  // A non-boolean "bit" that still recomposes: z = 3 as magnitude digits (0,0,0,3).
  auto at = CommittedTensor::commit(key, to_field(f, a), rng);
  auto bits = honest_bits;
  bits.bits[3][1] = FieldElement::zero(f);
  bits.bits[4][1] = FieldElement::from_u64(f, 3);
  auto pt2 = Transcript::fiat_shamir(f, "relu");
  auto p2 = prove_relu_unchecked(key, zt, at, bits, 4, pt2, rng);
  auto vt2 = Transcript::fiat_shamir(f, "relu");
  EXPECT_FALSE(verify_relu(key, zt.commitment, at.commitment, 3, 4, p2, vt2));

  // Flipping one magnitude bit breaks recomposition.
  auto bits3 = honest_bits;
  bits3.bits[4][3] = FieldElement::one(f) - bits3.bits[4][3];
  auto pt3 = Transcript::fiat_shamir(f, "relu");
  auto p3 = prove_relu_unchecked(key, zt, at, bits3, 4, pt3, rng);
  auto vt3 = Transcript::fiat_shamir(f, "relu");
  EXPECT_FALSE(verify_relu(key, zt.commitment, at.commitment, 3, 4, p3, vt3));
}

TEST(Relu, RandomTensorsAtThirtyTwoBits) {
  util::Csprng rng(46);
  const auto& f = CurveProfile::main().scalar_field();
  CommitmentKey key(CurveProfile::main(), 16);
  const std::int64_t bound = (std::int64_t{1} << 32) - 1;
  for (int trial = 0; trial < 10; ++trial) {
    auto z = random_ints(rng, 16, -bound, bound);
    auto a = relu_reference(z);
    auto zt = CommittedTensor::commit(key, to_field(f, z), rng);
    auto at = CommittedTensor::commit(key, to_field(f, a), rng);
    auto pt = Transcript::fiat_shamir(f, "relu32");
    auto proof = prove_relu(key, zt, at, 32, pt, rng);
    auto vt = Transcript::fiat_shamir(f, "relu32");
    ASSERT_TRUE(verify_relu(key, zt.commitment, at.commitment, 4, 32, proof, vt));
  }
}

// ---------------------------------------------------------------------------
// Matmul

namespace {

struct MatFixture {
  MatMulClaim claim;
  CommittedTensor a, b, c;
};

MatFixture make_matmul(const CommitmentKey& key, std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                       std::span<const std::int64_t> c, std::size_t m, std::size_t k, std::size_t n,
                       util::Csprng& rng) {
  const auto& f = key.field();
  MatFixture fx;
  fx.a = CommittedTensor::commit(key, pad_matrix(f, a, m, k), rng);
  fx.b = CommittedTensor::commit(key, pad_matrix(f, b, k, n), rng);
  fx.c = CommittedTensor::commit(key, pad_matrix(f, c, m, n), rng);
  fx.claim = {fx.a.commitment, fx.b.commitment, fx.c.commitment, m, k, n};
  return fx;
}

}  // namespace

TEST(MatMul, ReferenceExamples) {
  std::vector<std::int64_t> ones(4, 1);
  EXPECT_EQ(matmul_reference(ones, ones, 2, 2, 2), (std::vector<std::int64_t>(4, 2)));
  std::vector<std::int64_t> a = {1, 2, 3, 4, 5, 6}, id = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  EXPECT_EQ(matmul_reference(a, id, 2, 3, 3), a);
}

TEST(MatMul, IdentityAndOnes) {
  util::Csprng rng(47);
  const auto& f = CurveProfile::main().scalar_field();
  CommitmentKey key(CurveProfile::main(), 16);
  std::vector<std::int64_t> a = {3, -1, 4, 1, -5, 9, 2, 6, 5}, id = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  auto fx = make_matmul(key, a, id, a, 3, 3, 3, rng);
  auto pt = Transcript::fiat_shamir(f, "mm");
  auto proof = prove_matmul(key, fx.claim, fx.a, fx.b, fx.c, pt, rng);
  auto vt = Transcript::fiat_shamir(f, "mm");
  EXPECT_TRUE(verify_matmul(key, fx.claim, proof, vt));

  std::vector<std::int64_t> ones(4, 1), twos(4, 2);
  auto fo = make_matmul(key, ones, ones, twos, 2, 2, 2, rng);
  auto pt2 = Transcript::fiat_shamir(f, "mm");
  auto p2 = prove_matmul(key, fo.claim, fo.a, fo.b, fo.c, pt2, rng);
  auto vt2 = Transcript::fiat_shamir(f, "mm");
  EXPECT_TRUE(verify_matmul(key, fo.claim, p2, vt2));
}

TEST(MatMul, RectangularAndCorrupted) {
  util::Csprng rng(48);
  const auto& f = CurveProfile::main().scalar_field();
  CommitmentKey key(CurveProfile::main(), 64);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t m = 1 + rng.uniform(5), k = 1 + rng.uniform(7), n = 1 + rng.uniform(5);
    auto a = random_ints(rng, m * k, -100, 100), b = random_ints(rng, k * n, -100, 100);
    auto c = matmul_reference(a, b, m, k, n);
    auto fx = make_matmul(key, a, b, c, m, k, n, rng);
    auto pt = Transcript::fiat_shamir(f, "rect");
    auto proof = prove_matmul(key, fx.claim, fx.a, fx.b, fx.c, pt, rng);
    auto vt = Transcript::fiat_shamir(f, "rect");
    ASSERT_TRUE(verify_matmul(key, fx.claim, proof, vt));

    auto bad = c;
    bad[rng.uniform(bad.size())] += 1;
    auto fb = make_matmul(key, a, b, bad, m, k, n, rng);
    auto pt2 = Transcript::fiat_shamir(f, "rect");
    EXPECT_THROW(prove_matmul(key, fb.claim, fb.a, fb.b, fb.c, pt2, rng), Error);
    auto pt3 = Transcript::fiat_shamir(f, "rect");
    auto forged = prove_matmul(key, fb.claim, fb.a, fb.b, fb.c, pt3, rng, ProverMode::Dishonest);
    auto vt3 = Transcript::fiat_shamir(f, "rect");
    ASSERT_FALSE(verify_matmul(key, fb.claim, forged, vt3));
  }
  auto fx = make_matmul(key, std::vector<std::int64_t>(4, 1), std::vector<std::int64_t>(4, 1),
                        std::vector<std::int64_t>(4, 2), 2, 2, 2, rng);
  auto wrong_claim = fx.claim;
  wrong_claim.k = 3;
  auto tr = Transcript::fiat_shamir(f, "rect");
  EXPECT_THROW(prove_matmul(key, wrong_claim, fx.a, fx.b, fx.c, tr, rng), Error);
}

// ---------------------------------------------------------------------------
// Linear layer

namespace {

struct LinearFixture {
  LinearClaim claim;
  CommittedTensor w, bias, x, y, rem;
};

LinearFixture make_linear(const CommitmentKey& key, std::size_t in, std::size_t out, std::int64_t scale,
                          util::Csprng& rng, std::int64_t y_offset = 0) {
  const auto& f = key.field();
  auto w = random_ints(rng, in * out, -50, 50), x = random_ints(rng, in, -50, 50),
       bias = random_ints(rng, out, -200, 200);
  auto acc = matmul_reference(w, x, out, in, 1);
  std::vector<std::int64_t> y(out), rem(out);
  for (std::size_t i = 0; i < out; ++i) {
    std::int64_t total = acc[i] + bias[i];
    y[i] = floor_div(total + scale / 2, scale) + (i == 0 ? y_offset : 0);
    rem[i] = total - scale * y[i];
  }
  LinearFixture fx;
  fx.w = CommittedTensor::commit(key, pad_matrix(f, w, out, in), rng);
  fx.bias = CommittedTensor::commit(key, to_field_padded(f, bias), rng);
  fx.x = CommittedTensor::commit(key, to_field_padded(f, x), rng);
  fx.y = CommittedTensor::commit(key, to_field_padded(f, y), rng);
  fx.rem = CommittedTensor::commit(key, to_field_padded(f, rem), rng);
  fx.claim = {fx.w.commitment, fx.bias.commitment, fx.x.commitment, fx.y.commitment, in, out, scale};
  return fx;
}

}  // namespace

TEST(Linear, CompletenessAcrossScales) {
  util::Csprng rng(49);
  const auto& f = CurveProfile::main().scalar_field();
  CommitmentKey key(CurveProfile::main(), 256);
  for (std::int64_t scale : {1, 2, 16, 256}) {
    auto fx = make_linear(key, 5, 3, scale, rng);
    auto pt = Transcript::fiat_shamir(f, "lin");
    auto proof = prove_linear(key, fx.claim, fx.w, fx.bias, fx.x, fx.y, fx.rem, pt, rng);
    auto vt = Transcript::fiat_shamir(f, "lin");
    auto verdict = verify_linear(key, fx.claim, proof, vt);
    ASSERT_TRUE(verdict) << "scale " << scale << ": " << verdict.failed_check;

    util::ByteWriter bw;
    proof.write(bw);
    util::ByteReader br(bw.data());
    auto back = LinearProof::read(br, CurveProfile::main());
    auto vt2 = Transcript::fiat_shamir(f, "lin");
    EXPECT_TRUE(verify_linear(key, fx.claim, back, vt2));
  }
}

TEST(Linear, OffByOneOutputRejected) {
  // y shifted by one keeps W x = s y + rem - bias exact, but rem leaves its range.
  util::Csprng rng(50);
  const auto& f = CurveProfile::main().scalar_field();
  CommitmentKey key(CurveProfile::main(), 64);
  auto fx = make_linear(key, 4, 4, 16, rng, 1);
  auto pt = Transcript::fiat_shamir(f, "lin");
  EXPECT_THROW(prove_linear(key, fx.claim, fx.w, fx.bias, fx.x, fx.y, fx.rem, pt, rng), Error);
  auto pt2 = Transcript::fiat_shamir(f, "lin");
  auto forged = prove_linear(key, fx.claim, fx.w, fx.bias, fx.x, fx.y, fx.rem, pt2, rng, ProverMode::Dishonest);
  auto vt = Transcript::fiat_shamir(f, "lin");
  EXPECT_FALSE(verify_linear(key, fx.claim, forged, vt));
}
