#include "lattheta/matrix_kit.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "lattheta/errors.hpp"

namespace lattheta {
namespace {

BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// g = s*a + t*b with g = gcd(a, b) >= 0.
void extended_gcd(const BigInt& a, const BigInt& b, BigInt& g, BigInt& s,
                  BigInt& t) {
  BigInt old_r = a, r = b;
  BigInt old_s = 1, cur_s = 0;
  BigInt old_t = 0, cur_t = 1;
  while (r != 0) {
    BigInt q = old_r / r;
    BigInt tmp = old_r - q * r;
    old_r = std::move(r);
    r = std::move(tmp);
    tmp = old_s - q * cur_s;
    old_s = std::move(cur_s);
    cur_s = std::move(tmp);
    tmp = old_t - q * cur_t;
    old_t = std::move(cur_t);
    cur_t = std::move(tmp);
  }
  if (old_r < 0) {
    old_r = -old_r;
    old_s = -old_s;
    old_t = -old_t;
  }
  g = old_r;
  s = old_s;
  t = old_t;
}

// Working state for column operations: A·U tracked alongside U and U⁻¹.
struct ColumnOps {
  IntMatrix A, U, U_inv;

  // Replaces columns (p, c) by (s·p + t·c, -(b/g)·p + (a/g)·c) where
  // a = A(row,p), b = A(row,c); afterwards A(row,c) == 0.
  void eliminate(std::size_t row, std::size_t p, std::size_t c) {
    const BigInt a = A(row, p);
    const BigInt b = A(row, c);
    if (b == 0) return;
    BigInt g, s, t;
    extended_gcd(a, b, g, s, t);
    const BigInt ag = a / g;
    const BigInt bg = b / g;
    auto apply_cols = [&](IntMatrix& X) {
      for (std::size_t r = 0; r < X.rows(); ++r) {
        const BigInt xp = X(r, p);
        const BigInt xc = X(r, c);
        X(r, p) = s * xp + t * xc;
        X(r, c) = ag * xc - bg * xp;
      }
    };
    apply_cols(A);
    apply_cols(U);
    // Inverse of [[s, -bg], [t, ag]] is [[ag, bg], [-t, s]], applied to rows.
    for (std::size_t k = 0; k < U_inv.cols(); ++k) {
      const BigInt rp = U_inv(p, k);
      const BigInt rc = U_inv(c, k);
      U_inv(p, k) = ag * rp + bg * rc;
      U_inv(c, k) = s * rc - t * rp;
    }
  }

  void negate(std::size_t p) {
    for (std::size_t r = 0; r < A.rows(); ++r) A(r, p) = -A(r, p);
    for (std::size_t r = 0; r < U.rows(); ++r) U(r, p) = -U(r, p);
    for (std::size_t k = 0; k < U_inv.cols(); ++k) U_inv(p, k) = -U_inv(p, k);
  }

  // col q -= k * col p
  void subtract_multiple(std::size_t q, std::size_t p, const BigInt& k) {
    if (k == 0) return;
    for (std::size_t r = 0; r < A.rows(); ++r) A(r, q) -= k * A(r, p);
    for (std::size_t r = 0; r < U.rows(); ++r) U(r, q) -= k * U(r, p);
    for (std::size_t j = 0; j < U_inv.cols(); ++j) {
      U_inv(p, j) += k * U_inv(q, j);
    }
  }
};

}  // namespace

IntMatrix::IntMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, BigInt(0)) {}

IntMatrix::IntMatrix(std::size_t rows, std::size_t cols,
                     std::vector<BigInt> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  if (data_.size() != rows * cols) {
    fail(ErrorCode::kDimensionMismatch, "IntMatrix: entry count mismatch");
  }
}

IntMatrix IntMatrix::identity(std::size_t n) {
  IntMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

std::optional<IntMatrix> IntMatrix::from_real(const RealMatrix& m, double tol) {
  IntMatrix out(static_cast<std::size_t>(m.rows()),
                static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double x = m(r, c);
      if (!std::isfinite(x)) return std::nullopt;
      const double rounded = std::round(x);
      if (std::abs(x - rounded) > tol * std::max(1.0, std::abs(x))) {
        return std::nullopt;
      }
      out(r, c) = BigInt(static_cast<long long>(rounded));
    }
  }
  return out;
}

RealMatrix IntMatrix::to_real() const {
  RealMatrix m(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) {
      m(r, c) = (*this)(r, c).convert_to<double>();
    }
  }
  return m;
}

IntMatrix IntMatrix::block(std::size_t r0, std::size_t c0, std::size_t nr,
                           std::size_t nc) const {
  IntMatrix out(nr, nc);
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t c = 0; c < nc; ++c) out(r, c) = (*this)(r0 + r, c0 + c);
  }
  return out;
}

IntMatrix operator*(const IntMatrix& a, const IntMatrix& b) {
  if (a.cols_ != b.rows_) {
    fail(ErrorCode::kDimensionMismatch, "IntMatrix product: inner dims differ");
  }
  IntMatrix out(a.rows_, b.cols_);
  for (std::size_t i = 0; i < a.rows_; ++i) {
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const BigInt& aik = a(i, k);
      if (aik == 0) continue;
      for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

BigInt determinant(const IntMatrix& a) {
  if (a.rows() != a.cols()) {
    fail(ErrorCode::kDimensionMismatch, "determinant: matrix is not square");
  }
  const std::size_t n = a.rows();
  if (n == 0) return 1;
  IntMatrix m = a;
  BigInt sign = 1;
  BigInt prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m(k, k) == 0) {
      std::size_t swap_row = k + 1;
      while (swap_row < n && m(swap_row, k) == 0) ++swap_row;
      if (swap_row == n) return 0;
      for (std::size_t c = 0; c < n; ++c) std::swap(m(k, c), m(swap_row, c));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
      }
    }
    prev = m(k, k);
  }
  return sign * m(n - 1, n - 1);
}

bool is_zero_block_form(const IntMatrix& product, const IntMatrix& b) {
  if (product.rows() != b.rows() || product.cols() < b.cols()) return false;
  const std::size_t offset = product.cols() - b.cols();
  for (std::size_t r = 0; r < product.rows(); ++r) {
    for (std::size_t c = 0; c < product.cols(); ++c) {
      const BigInt expected = c < offset ? BigInt(0) : b(r, c - offset);
      if (product(r, c) != expected) return false;
    }
  }
  return true;
}

HnfResult column_hnf(const IntMatrix& m) {
  const std::size_t n = m.rows();
  const std::size_t cols = m.cols();
  if (n == 0 || cols < n) {
    fail(ErrorCode::kRankDeficient,
         "column_hnf: need at least as many columns as rows");
  }
  const std::size_t lead = cols - n;
  ColumnOps ops{m, IntMatrix::identity(cols), IntMatrix::identity(cols)};

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pivot = lead + i;
    // Active columns: the zero block plus the not-yet-fixed pivot columns.
    for (std::size_t c = 0; c < cols; ++c) {
      if (c == pivot || (c >= lead && c < pivot)) continue;
      ops.eliminate(i, pivot, c);
    }
    if (ops.A(i, pivot) == 0) {
      fail(ErrorCode::kRankDeficient,
           "column_hnf: matrix does not have full row rank (row " +
               std::to_string(i) + ")");
    }
    if (ops.A(i, pivot) < 0) ops.negate(pivot);
    const BigInt diag = ops.A(i, pivot);
    for (std::size_t j = lead; j < pivot; ++j) {
      ops.subtract_multiple(j, pivot, floor_div(ops.A(i, j), diag));
    }
  }

  return HnfResult{std::move(ops.U), std::move(ops.U_inv),
                   ops.A.block(0, lead, n, n)};
}

HnfResult hnf_zero_block(const IntMatrix& m) {
  if (m.cols() <= m.rows()) {
    fail(ErrorCode::kRankDeficient,
         "hnf_zero_block: requires more columns than rows (m > n)");
  }
  return column_hnf(m);
}

OrthogonalBlockResult orthogonal_zero_block(const RealMatrix& m) {
  const Eigen::Index n = m.rows();
  const Eigen::Index cols = m.cols();
  if (n == 0 || cols < n) {
    fail(ErrorCode::kNumericallyRankDeficient,
         "orthogonal_zero_block: need at least as many columns as rows");
  }
  Eigen::JacobiSVD<RealMatrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(n - 1) <= 1e-10 * sv(0)) {
    fail(ErrorCode::kNumericallyRankDeficient,
         "orthogonal_zero_block: matrix is numerically rank deficient");
  }

  // Mᵀ = Q·R  =>  M·Q = Rᵀ = [R₁ᵀ | 0]; rotate Q's columns to move the
  // triangular block to the end.
  Eigen::HouseholderQR<RealMatrix> qr(m.transpose());
  const RealMatrix q = qr.householderQ() * RealMatrix::Identity(cols, cols);
  OrthogonalBlockResult out;
  out.U.resize(cols, cols);
  out.U.leftCols(cols - n) = q.rightCols(cols - n);
  out.U.rightCols(n) = q.leftCols(n);
  const RealMatrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  out.B = r.transpose();
  return out;
}

DetInverse det_and_inverse(const RealMatrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    fail(ErrorCode::kDimensionMismatch,
         "det_and_inverse: matrix must be square and non-empty");
  }
  Eigen::PartialPivLU<RealMatrix> lu(a);
  const double det = lu.determinant();
  double scale = 1.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) scale *= a.row(r).norm();
  if (!std::isfinite(det) || std::abs(det) < 1e-12 * scale || scale == 0.0) {
    fail(ErrorCode::kSingular, "det_and_inverse: matrix is singular");
  }
  return DetInverse{det, lu.inverse()};
}

long long gcd_of(const std::vector<long long>& values) {
  long long g = 0;
  for (long long v : values) g = std::gcd(g, v);
  return g;
}

}  // namespace lattheta
