#include <gtest/gtest.h>

#include <random>

#include "lattheta/errors.hpp"
#include "lattheta/matrix_kit.hpp"

namespace lattheta {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kInvalidArgument;
}

IntMatrix int_matrix(std::size_t r, std::size_t c, std::initializer_list<long> v) {
  std::vector<BigInt> data;
  for (long x : v) data.emplace_back(x);
  return IntMatrix(r, c, std::move(data));
}

TEST(HnfZeroBlock, RowTwoOne) {
  const IntMatrix m = int_matrix(1, 2, {2, 1});
  const auto res = hnf_zero_block(m);
  EXPECT_EQ(m * res.U, int_matrix(1, 2, {0, 1}));
  EXPECT_EQ(res.B, int_matrix(1, 1, {1}));
  EXPECT_EQ(abs(determinant(res.U)), 1);
  EXPECT_EQ(res.U * res.U_inv, IntMatrix::identity(2));
}

TEST(HnfZeroBlock, SquareInputRejected) {
  EXPECT_EQ(code_of([] { hnf_zero_block(IntMatrix::identity(3)); }), ErrorCode::kRankDeficient);
}

TEST(HnfZeroBlock, ScaledIdentityBlocks) {
  // [2·I₂ | 3·I₂]
  const IntMatrix m = int_matrix(2, 4, {2, 0, 3, 0, 0, 2, 0, 3});
  const auto res = hnf_zero_block(m);
  EXPECT_TRUE(is_zero_block_form(m * res.U, res.B));
  EXPECT_EQ(abs(determinant(res.U)), 1);
  EXPECT_EQ(abs(determinant(res.B)), 1);
}

TEST(HnfZeroBlock, RankDeficient) {
  const IntMatrix m = int_matrix(2, 3, {1, 2, 3, 2, 4, 6});
  EXPECT_EQ(code_of([&] { hnf_zero_block(m); }), ErrorCode::kRankDeficient);
}

TEST(HnfZeroBlock, RandomMatricesExact) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<long> d(-9, 9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 3, m = n + 1 + trial % 4;
    IntMatrix a(n, m);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < m; ++c) a(r, c) = d(rng);
    HnfResult res;
    try {
      res = hnf_zero_block(a);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kRankDeficient);
      continue;
    }
    EXPECT_TRUE(is_zero_block_form(a * res.U, res.B));
    EXPECT_EQ(abs(determinant(res.U)), 1);
    EXPECT_EQ(res.U_inv * res.U, IntMatrix::identity(m));
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_GT(res.B(i, i), 0);
      for (std::size_t j = 0; j < i; ++j) {
        EXPECT_GE(res.B(i, j), 0);
        EXPECT_LT(res.B(i, j), res.B(i, i));
      }
    }
  }
}

TEST(HnfZeroBlock, LargeEntriesStayExact) {
  const IntMatrix m = int_matrix(1, 3, {1000000007L, 998244353L, 1000000009L});
  const auto res = hnf_zero_block(m);
  EXPECT_TRUE(is_zero_block_form(m * res.U, res.B));
  EXPECT_EQ(res.B(0, 0), 1);
}

TEST(OrthogonalZeroBlock, Permutation) {
  RealMatrix m(1, 2);
  m << 1, 0;
  const auto res = orthogonal_zero_block(m);
  RealMatrix prod = m * res.U;
  EXPECT_NEAR(prod(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(res.B(0, 0)), 1.0, 1e-12);
}

TEST(OrthogonalZeroBlock, RandomGaussian) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    RealMatrix m(2, 4);
    for (int i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    const auto res = orthogonal_zero_block(m);
    RealMatrix expect = RealMatrix::Zero(2, 4);
    expect.rightCols(2) = res.B;
    EXPECT_LT((m * res.U - expect).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((res.U.transpose() * res.U - RealMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(res.B(0, 1), 0.0, 1e-12);
  }
}

TEST(OrthogonalZeroBlock, IdenticalRows) {
  RealMatrix m(2, 3);
  m << 1, 2, 3, 1, 2, 3;
  EXPECT_EQ(code_of([&] { orthogonal_zero_block(m); }), ErrorCode::kNumericallyRankDeficient);
}

TEST(DetAndInverse, Identity) {
  const auto r = det_and_inverse(RealMatrix::Identity(3, 3));
  EXPECT_DOUBLE_EQ(r.det, 1.0);
  EXPECT_TRUE(r.inverse.isApprox(RealMatrix::Identity(3, 3)));
}

TEST(DetAndInverse, ThreeDimensionalGenerator) {
  RealMatrix m(3, 3);
  m << 2, 0, 0, 1, -2, 1, 0, -1, -2;
  const auto r = det_and_inverse(m);
  EXPECT_NEAR(std::abs(r.det), 10.0, 1e-9);
  EXPECT_LT((m * r.inverse - RealMatrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(DetAndInverse, Singular) {
  RealMatrix m(2, 2);
  m << 1, 1, 1, 1;
  EXPECT_EQ(code_of([&] { det_and_inverse(m); }), ErrorCode::kSingular);
}

TEST(DetAndInverse, RoundTripProperty) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 5;
    RealMatrix a(n, n);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    const auto r = det_and_inverse(a);
    const auto back = det_and_inverse(r.inverse);
    EXPECT_NEAR(r.det * back.det, 1.0, 1e-6);
  }
}

TEST(IntMatrix, FromReal) {
  RealMatrix m(1, 2);
  m << 2.0, -3.0;
  EXPECT_TRUE(IntMatrix::from_real(m).has_value());
  m(0, 0) = 2.5;
  EXPECT_FALSE(IntMatrix::from_real(m).has_value());
}

TEST(IntMatrix, Determinant) {
  EXPECT_EQ(determinant(int_matrix(2, 2, {3, 1, 5, 2})), 1);
  EXPECT_EQ(gcd_of(std::vector<long long>{12, -18, 8}), 2);
}

}  // namespace
}  // namespace lattheta
