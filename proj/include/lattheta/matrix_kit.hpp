#pragma once

// Exact integer and floating-point matrix algebra: Hermite normal form with
// unimodular transform, orthogonal zero-block decomposition, determinants.

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

namespace lattheta {

using BigInt = boost::multiprecision::cpp_int;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Dense matrix of arbitrary-precision integers, row-major.
class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(std::size_t rows, std::size_t cols);
  IntMatrix(std::size_t rows, std::size_t cols, std::vector<BigInt> row_major);

  static IntMatrix identity(std::size_t n);

  // Rounds every entry; nullopt if any entry is farther than `tol` from an
  // integer (relative to max(1, |entry|)).
  static std::optional<IntMatrix> from_real(const RealMatrix& m,
                                            double tol = 1e-9);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  BigInt& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  const BigInt& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  RealMatrix to_real() const;
  IntMatrix block(std::size_t r0, std::size_t c0, std::size_t nr,
                  std::size_t nc) const;

  friend IntMatrix operator*(const IntMatrix& a, const IntMatrix& b);
  friend bool operator==(const IntMatrix& a, const IntMatrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<BigInt> data_;
};

// Exact determinant by fraction-free (Bareiss) elimination.
BigInt determinant(const IntMatrix& a);

// True when `product` is exactly [0 | b] (zero block in the leading columns).
bool is_zero_block_form(const IntMatrix& product, const IntMatrix& b);

struct HnfResult {
  IntMatrix U;      // m×m unimodular
  IntMatrix U_inv;  // exact inverse of U
  IntMatrix B;      // n×n lower triangular, positive diagonal,
                    // 0 <= b_ij < b_ii for j < i
};

// Column-style Hermite normal form of an n×m matrix with m >= n and full row
// rank: M·U = [0_{n×(m-n)} | B] with the zero block in the leading columns.
// Throws kRankDeficient if rank(M) < n.
HnfResult column_hnf(const IntMatrix& m);

// As column_hnf but enforces the strict m > n shape of a zero-block split.
HnfResult hnf_zero_block(const IntMatrix& m);

struct OrthogonalBlockResult {
  RealMatrix U;  // m×m orthogonal
  RealMatrix B;  // n×n lower triangular
};

// M·U = [0 | B] with U orthogonal, via a QR factorization of Mᵀ followed by a
// block rotation of the columns of Q. Throws kNumericallyRankDeficient when
// the smallest singular value is below 1e-10 times the largest.
OrthogonalBlockResult orthogonal_zero_block(const RealMatrix& m);

struct DetInverse {
  double det;
  RealMatrix inverse;
};

// Throws kSingular if |det| < 1e-12 times the product of row norms.
DetInverse det_and_inverse(const RealMatrix& a);

// Non-negative gcd of all entries; 0 for an empty or all-zero input.
long long gcd_of(const std::vector<long long>& values);

}  // namespace lattheta
