#include "lattheta/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <utility>

#include "lattheta/errors.hpp"

namespace lattheta {
namespace {

constexpr double kNormSlack = 1e-9;
constexpr std::size_t kMaxCodeIndex = 1'000'000;

double ball_volume(int n, double radius) {
  const double half = 0.5 * n;
  return std::pow(std::numbers::pi, half) * std::pow(radius, n) /
         std::tgamma(half + 1.0);
}

// Fincke-Pohst enumeration of {z : (z - c)ᵀ G (z - c) <= r}.
class SphereEnumerator {
 public:
  SphereEnumerator(const Lattice& lattice, const RealVector& center_coords,
                   double r, std::size_t budget)
      : lattice_(lattice),
        n_(lattice.dim()),
        center_coords_(center_coords),
        r_(r),
        budget_(budget),
        z_(n_, 0) {
    Eigen::LLT<RealMatrix> llt(lattice.gram());
    if (llt.info() != Eigen::Success) {
      fail(ErrorCode::kSingular, "enumeration: Gram matrix not positive definite");
    }
    upper_ = llt.matrixU();
    center_ = lattice.inverse() * center_coords;
    bound_ = r + 1e-9 * (1.0 + r);
  }

  std::vector<LatticePoint> run() {
    recurse(n_ - 1, 0.0);
    return std::move(points_);
  }

 private:
  void recurse(int level, double used) {
    if (++nodes_ > node_limit()) {
      fail(ErrorCode::kEnumerationBudgetExceeded,
           "enumeration: search tree exceeds node budget");
    }
    double shift = 0.0;
    for (int j = level + 1; j < n_; ++j) {
      shift += upper_(level, j) * (static_cast<double>(z_[j]) - center_(j));
    }
    const double rii = upper_(level, level);
    const double mid = center_(level) - shift / rii;
    const double remaining = bound_ - used;
    if (remaining < 0.0) return;
    const double width = std::sqrt(remaining) / rii;
    const auto lo = static_cast<std::int64_t>(std::ceil(mid - width - 1e-9));
    const auto hi = static_cast<std::int64_t>(std::floor(mid + width + 1e-9));
    for (std::int64_t zi = lo; zi <= hi; ++zi) {
      const double t = rii * (static_cast<double>(zi) - mid);
      const double next = used + t * t;
      if (next > bound_) continue;
      z_[level] = zi;
      if (level == 0) {
        accept();
      } else {
        recurse(level - 1, next);
      }
    }
    z_[level] = 0;
  }

  void accept() {
    RealVector coords = lattice_.point(z_);
    if ((coords - center_coords_).squaredNorm() > r_ + kNormSlack) return;
    if (points_.size() >= budget_) {
      fail(ErrorCode::kEnumerationBudgetExceeded,
           "enumeration: point count exceeds budget " + std::to_string(budget_));
    }
    points_.push_back(LatticePoint{std::move(coords), z_});
  }

  std::size_t node_limit() const { return 64 * budget_ + 1'000'000; }

  const Lattice& lattice_;
  int n_;
  RealVector center_coords_;
  double r_;
  std::size_t budget_;
  RealMatrix upper_;
  RealVector center_;
  double bound_ = 0.0;
  Coeffs z_;
  std::vector<LatticePoint> points_;
  std::size_t nodes_ = 0;
};

void check_enumerable(const Lattice& lattice, double r, std::size_t budget) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    fail(ErrorCode::kInvalidArgument, "enumeration radius must be finite and >= 0");
  }
  if (lattice.dim() > kMaxEnumerationDim) {
    fail(ErrorCode::kInvalidArgument,
         "enumeration limited to dimension <= " +
             std::to_string(kMaxEnumerationDim));
  }
  const double predicted =
      ball_volume(lattice.dim(), std::sqrt(r)) / lattice.volume();
  if (predicted > static_cast<double>(budget)) {
    fail(ErrorCode::kEnumerationBudgetExceeded,
         "enumeration: predicted " + std::to_string(predicted) +
             " points exceeds budget " + std::to_string(budget));
  }
}

void sort_by_distance(std::vector<LatticePoint>& points,
                      const RealVector& center) {
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    keys.emplace_back((points[i].coords - center).squaredNorm(), i);
  }
  std::sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return coeffs_less(points[a.second].coeffs, points[b.second].coeffs);
  });
  std::vector<LatticePoint> sorted;
  sorted.reserve(points.size());
  for (const auto& key : keys) sorted.push_back(std::move(points[key.second]));
  points = std::move(sorted);
}

}  // namespace

std::size_t default_enumeration_budget() {
  if (const char* env = std::getenv("LATTICE_THETA_BUDGET")) {
    char* end = nullptr;
    const unsigned long long value = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) {
      return static_cast<std::size_t>(value);
    }
  }
  return kDefaultEnumerationBudget;
}

Lattice::Lattice(RealMatrix generator, std::string name)
    : name_(std::move(name)), generator_(std::move(generator)) {
  if (generator_.rows() == 0 || generator_.rows() != generator_.cols()) {
    fail(ErrorCode::kDimensionMismatch,
         "Lattice: generator must be a non-empty square matrix");
  }
  if (!generator_.allFinite()) {
    fail(ErrorCode::kInvalidArgument, "Lattice: generator has non-finite entries");
  }
  auto [det, inv] = det_and_inverse(generator_);
  volume_ = std::abs(det);
  inverse_ = std::move(inv);
  gram_ = generator_.transpose() * generator_;
  is_integer_ = true;
  for (Eigen::Index i = 0; i < generator_.size(); ++i) {
    const double x = generator_.data()[i];
    if (std::abs(x - std::round(x)) > 1e-12) {
      is_integer_ = false;
      break;
    }
  }
}

RealVector Lattice::point(const Coeffs& coeffs) const {
  if (static_cast<int>(coeffs.size()) != dim()) {
    fail(ErrorCode::kDimensionMismatch, "Lattice::point: coefficient length");
  }
  RealVector z(dim());
  for (int i = 0; i < dim(); ++i) z(i) = static_cast<double>(coeffs[i]);
  return generator_ * z;
}

Lattice Lattice::scaled(double factor, std::string name) const {
  return Lattice(factor * generator_, name.empty() ? name_ : std::move(name));
}

bool coeffs_less(const Coeffs& a, const Coeffs& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::vector<LatticePoint> enumerate_within(const Lattice& lattice, double r,
                                           std::size_t budget) {
  return enumerate_near(lattice, RealVector::Zero(lattice.dim()), r, budget);
}

std::vector<LatticePoint> enumerate_near(const Lattice& lattice,
                                         const RealVector& center, double r,
                                         std::size_t budget) {
  if (center.size() != lattice.dim()) {
    fail(ErrorCode::kDimensionMismatch, "enumerate_near: center dimension");
  }
  check_enumerable(lattice, r, budget);
  auto points = SphereEnumerator(lattice, center, r, budget).run();
  sort_by_distance(points, center);
  return points;
}

MinimalNorm minimal_norm(const Lattice& lattice) {
  const double radius = lattice.gram().diagonal().minCoeff();
  const auto points = enumerate_within(lattice, radius);
  double lambda1 = radius;
  for (const auto& p : points) {
    const double nrm = p.norm();
    if (nrm > kNormSlack) lambda1 = std::min(lambda1, nrm);
  }
  const double tol = kNormSlack * std::max(1.0, lambda1);
  std::size_t kissing = 0;
  for (const auto& p : points) {
    if (std::abs(p.norm() - lambda1) <= tol) ++kissing;
  }
  return MinimalNorm{lambda1, kissing};
}

SuccessiveMinima successive_minima(const Lattice& lattice) {
  if (lattice.dim() > 8) {
    fail(ErrorCode::kInvalidArgument, "successive_minima: dimension must be <= 8");
  }
  const int n = lattice.dim();
  const double radius = lattice.gram().diagonal().maxCoeff();
  const auto points = enumerate_within(lattice, radius);

  SuccessiveMinima out;
  std::vector<RealVector> basis;  // orthonormal span of chosen vectors
  for (const auto& p : points) {
    if (static_cast<int>(out.vectors.size()) == n) break;
    const double nrm = p.norm();
    if (nrm <= kNormSlack) continue;
    RealVector residual = p.coords;
    for (const auto& e : basis) residual -= e.dot(residual) * e;
    if (residual.squaredNorm() <= 1e-9 * nrm) continue;
    basis.push_back(residual.normalized());
    out.vectors.push_back(p);
    out.minima.push_back(nrm);
  }
  if (static_cast<int>(out.minima.size()) != n) {
    fail(ErrorCode::kRankDeficient,
         "successive_minima: enumeration did not reach full rank");
  }
  out.well_rounded =
      std::abs(out.minima.front() - out.minima.back()) <= kNormSlack;
  return out;
}

LatticePoint closest_point(const Lattice& lattice, const RealVector& y) {
  if (y.size() != lattice.dim()) {
    fail(ErrorCode::kDimensionMismatch, "closest_point: dimension mismatch");
  }
  const RealVector c = lattice.inverse() * y;
  Coeffs babai(lattice.dim());
  for (int i = 0; i < lattice.dim(); ++i) {
    babai[i] = static_cast<std::int64_t>(std::llround(c(i)));
  }
  const double d0 = (y - lattice.point(babai)).squaredNorm();
  auto candidates = enumerate_near(lattice, y, d0);
  if (candidates.empty()) {
    return LatticePoint{lattice.point(babai), babai};
  }
  // enumerate_near sorts by distance then coefficients; scan the tie set.
  std::size_t best = 0;
  const double best_dist = (candidates[0].coords - y).squaredNorm();
  const double tol = kNormSlack * (1.0 + best_dist);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double d = (candidates[i].coords - y).squaredNorm();
    if (d > best_dist + tol) break;
    if (coeffs_less(candidates[i].coeffs, candidates[best].coeffs)) best = i;
  }
  return std::move(candidates[best]);
}

RealVector mod_lattice(const RealVector& y, const Lattice& lattice) {
  return y - closest_point(lattice, y).coords;
}

double NestedCode::max_norm() const {
  double best = 0.0;
  for (const auto& p : representatives) best = std::max(best, p.coords.norm());
  return best;
}

IntMatrix sublattice_transform(const Lattice& coarse, const Lattice& fine) {
  if (coarse.dim() != fine.dim()) {
    fail(ErrorCode::kDimensionMismatch, "nested lattices must share a dimension");
  }
  const RealMatrix t = fine.inverse() * coarse.generator();
  auto exact = IntMatrix::from_real(t, 1e-9);
  if (!exact) {
    fail(ErrorCode::kNotNested,
         "coarse generator is not an integer combination of fine generators");
  }
  return *exact;
}

NestedCode build_nested_code(const Lattice& coarse, const Lattice& fine) {
  const IntMatrix t = sublattice_transform(coarse, fine);
  const int n = fine.dim();
  const IntMatrix h = column_hnf(t).B;

  std::vector<std::int64_t> radix(n);
  BigInt index = 1;
  for (int i = 0; i < n; ++i) {
    index *= h(i, i);
    if (index > kMaxCodeIndex) {
      fail(ErrorCode::kEnumerationBudgetExceeded,
           "build_nested_code: index exceeds 10^6");
    }
    radix[i] = h(i, i).convert_to<std::int64_t>();
  }
  const auto count = index.convert_to<std::size_t>();
  const RealMatrix t_real = t.to_real();

  NestedCode code{coarse, fine, {}, 0.0};
  code.representatives.reserve(count);
  Coeffs w(n, 0);
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t rest = k;
    for (int i = 0; i < n; ++i) {
      w[i] = static_cast<std::int64_t>(rest % radix[i]);
      rest /= radix[i];
    }
    const RealVector x = fine.point(w);
    const LatticePoint q = closest_point(coarse, x);
    RealVector qz(n);
    for (int i = 0; i < n; ++i) qz(i) = static_cast<double>(q.coeffs[i]);
    const RealVector shift = t_real * qz;
    Coeffs rep(n);
    for (int i = 0; i < n; ++i) {
      rep[i] = w[i] - static_cast<std::int64_t>(std::llround(shift(i)));
    }
    code.representatives.push_back(LatticePoint{fine.point(rep), rep});
  }
  sort_by_distance(code.representatives, RealVector::Zero(n));

  const double expected = coarse.volume() / fine.volume();
  if (std::llround(expected) != static_cast<long long>(count)) {
    fail(ErrorCode::kNotNested, "build_nested_code: coset count mismatch");
  }
  code.rate = std::log2(static_cast<double>(count)) / n;
  return code;
}

}  // namespace lattheta
