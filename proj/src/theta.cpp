#include "lattheta/theta.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lattheta/catalog.hpp"
#include "lattheta/errors.hpp"

namespace lattheta {
namespace {

constexpr double kBucketTol = 1e-9;
constexpr double kPi = std::numbers::pi;

void check_nome(double q) {
  if (!(q >= 0.0 && q < 1.0)) {
    fail(ErrorCode::kDomainError, "nome q must lie in [0, 1)");
  }
}

// Truncated power series in x = q^{1/4}; index = exponent of x.
class QuarterSeries {
 public:
  explicit QuarterSeries(std::size_t length) : c_(length, BigInt(0)) {}

  static QuarterSeries one(std::size_t length) {
    QuarterSeries s(length);
    s.c_[0] = 1;
    return s;
  }

  // θ₂ (exponents (2k+1)²), θ₃ (4k²) or θ₄ (4k², signed), optionally at q^m.
  static QuarterSeries jacobi(int kind, std::size_t length, int m = 1) {
    QuarterSeries s(length);
    for (long long k = -static_cast<long long>(length);
         k <= static_cast<long long>(length); ++k) {
      const long long base = kind == 2 ? (2 * k + 1) * (2 * k + 1) : 4 * k * k;
      const long long e = base * m;
      if (e >= static_cast<long long>(length)) continue;
      const int sign = (kind == 4 && (k % 2 != 0)) ? -1 : 1;
      s.c_[static_cast<std::size_t>(e)] += sign;
    }
    return s;
  }

  friend QuarterSeries operator*(const QuarterSeries& a, const QuarterSeries& b) {
    const std::size_t len = a.c_.size();
    QuarterSeries out(len);
    for (std::size_t i = 0; i < len; ++i) {
      if (a.c_[i] == 0) continue;
      for (std::size_t j = 0; i + j < len; ++j) {
        if (b.c_[j] != 0) out.c_[i + j] += a.c_[i] * b.c_[j];
      }
    }
    return out;
  }

  friend QuarterSeries operator+(QuarterSeries a, const QuarterSeries& b) {
    for (std::size_t i = 0; i < a.c_.size(); ++i) a.c_[i] += b.c_[i];
    return a;
  }

  QuarterSeries scaled(long long k) const {
    QuarterSeries out = *this;
    for (auto& x : out.c_) x *= k;
    return out;
  }

  QuarterSeries pow(int e) const {
    QuarterSeries out = one(c_.size());
    for (int i = 0; i < e; ++i) out = out * *this;
    return out;
  }

  // Integer coefficients of q^k after an exact division by `denominator`.
  std::vector<BigInt> to_q_coefficients(long long denominator) const {
    std::vector<BigInt> out;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (c_[i] % denominator != 0 || (i % 4 != 0 && c_[i] != 0)) {
        fail(ErrorCode::kUnknownForm,
             "closed form expansion produced a non-integral coefficient");
      }
      if (i % 4 == 0) out.push_back(c_[i] / denominator);
    }
    return out;
  }

 private:
  std::vector<BigInt> c_;
};

// Regularized upper tail Γ(s, x)/Γ(s) for s = twice_s/2.
double regularized_upper_gamma(int twice_s, double x) {
  return upper_incomplete_gamma_half(twice_s, x) / std::tgamma(0.5 * twice_s);
}

// Smallest doubling radius r with (π/s)^{n/2}/vol · Q(n/2, s·r) < target,
// i.e. the continuum estimate of Σ_{‖x‖² > r} e^{-s‖x‖²}.
double tail_radius(int n, double volume, double s, double start, double target) {
  const double prefactor = std::pow(kPi / s, 0.5 * n) / volume;
  double r = std::max(start, 1.0 / s);
  for (int iter = 0; iter < 200; ++iter) {
    if (prefactor * regularized_upper_gamma(n, s * r) < target) return r;
    r *= 2.0;
  }
  fail(ErrorCode::kEnumerationBudgetExceeded, "theta truncation radius diverged");
}

double ball_count(int n, double r, double density) {
  return std::pow(kPi * r, 0.5 * n) / std::tgamma(0.5 * n + 1.0) * density;
}

// Σ_{x∈Λ} e^{-s‖x+y‖²} with y already reduced. Summed directly, or through
// the Poisson dual (π/s)^{n/2}/vol · Σ_{w∈Λ*} e^{-π²‖w‖²/s} cos(2π⟨w,y⟩)
// when that needs fewer points.
double periodic_gaussian_sum(const Lattice& lattice, const RealVector& y,
                             double s, double rel_tol) {
  const int n = lattice.dim();
  const double d = y.squaredNorm();
  const double primal_start = std::max(lattice.gram().diagonal().minCoeff(), d);
  const double r_primal =
      1.25 * std::max(tail_radius(n, lattice.volume(), s, primal_start,
                                  rel_tol * std::exp(-s * d)),
                      d);
  const double primal_cost = ball_count(n, r_primal, 1.0 / lattice.volume());

  const Lattice dual(lattice.inverse().transpose());
  const double s_dual = kPi * kPi / s;
  const double r_dual =
      1.25 * tail_radius(n, dual.volume(), s_dual,
                         dual.gram().diagonal().minCoeff(), rel_tol);
  const double dual_cost = ball_count(n, r_dual, 1.0 / dual.volume());

  double sum = 0.0;
  if (primal_cost <= dual_cost) {
    const auto points = enumerate_near(lattice, -y, r_primal);
    for (auto it = points.rbegin(); it != points.rend(); ++it) {
      sum += std::exp(-s * (it->coords + y).squaredNorm());
    }
    return sum;
  }
  const auto points = enumerate_within(dual, r_dual);
  for (auto it = points.rbegin(); it != points.rend(); ++it) {
    sum += std::exp(-s_dual * it->norm()) * std::cos(2.0 * kPi * it->coords.dot(y));
  }
  return std::pow(kPi / s, 0.5 * n) / lattice.volume() * sum;
}

}  // namespace

std::string_view to_string(ThetaForm form) {
  switch (form) {
    case ThetaForm::kInteger: return "integer";
    case ThetaForm::kCheckerboard: return "checkerboard";
    case ThetaForm::kCheckerboardDual: return "checkerboard_dual";
    case ThetaForm::kHexagonal: return "hexagonal";
    case ThetaForm::kGosset: return "gosset";
    case ThetaForm::kCoxeterTodd: return "coxeter_todd";
    case ThetaForm::kLeech: return "leech";
  }
  return "unknown";
}

ThetaForm theta_form_from_string(std::string_view name) {
  for (auto form : {ThetaForm::kInteger, ThetaForm::kCheckerboard,
                    ThetaForm::kCheckerboardDual, ThetaForm::kHexagonal,
                    ThetaForm::kGosset, ThetaForm::kCoxeterTodd,
                    ThetaForm::kLeech}) {
    if (to_string(form) == name) return form;
  }
  fail(ErrorCode::kUnknownForm, "unknown theta form '" + std::string(name) + "'");
}

double ThetaSeries::evaluate(double q) const {
  check_nome(q);
  double sum = 0.0;
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
    sum += static_cast<double>(it->count) * std::pow(q, it->norm);
  }
  return (includes_origin ? 1.0 : 0.0) + sum;
}

std::optional<double> ThetaSeries::lambda1() const {
  if (terms.empty()) return std::nullopt;
  return terms.front().norm;
}

std::uint64_t ThetaSeries::kissing() const {
  return terms.empty() ? 0 : terms.front().count;
}

std::uint64_t ThetaSeries::count_at(double norm) const {
  for (const auto& t : terms) {
    if (std::abs(t.norm - norm) <= kBucketTol * std::max(1.0, norm)) {
      return t.count;
    }
  }
  return 0;
}

ThetaSeries theta_exact(const Lattice& lattice, double r_max,
                        std::size_t budget) {
  const auto points = enumerate_within(lattice, r_max, budget);
  ThetaSeries series;
  series.r_max = r_max;
  series.includes_origin = true;
  for (const auto& p : points) {
    const double nrm = p.norm();
    if (std::all_of(p.coeffs.begin(), p.coeffs.end(),
                    [](std::int64_t z) { return z == 0; })) {
      continue;
    }
    if (!series.terms.empty() &&
        std::abs(nrm - series.terms.back().norm) <=
            kBucketTol * std::max(1.0, nrm)) {
      ++series.terms.back().count;
    } else {
      series.terms.push_back(ThetaTerm{nrm, 1});
    }
  }
  return series;
}

double theta_exact_value(const Lattice& lattice, double q) {
  check_nome(q);
  if (q == 0.0) return 1.0;
  return periodic_gaussian_sum(lattice, RealVector::Zero(lattice.dim()),
                               -std::log(q), 1e-13);
}

double jacobi_theta(int kind, double q, double tol) {
  check_nome(q);
  if (kind != 2 && kind != 3 && kind != 4) {
    fail(ErrorCode::kDomainError, "jacobi_theta: kind must be 2, 3 or 4");
  }
  if (q == 0.0) return kind == 2 ? 0.0 : 1.0;
  const double log_q = std::log(q);
  double sum = kind == 2 ? 0.0 : 1.0;
  double scale = sum;
  for (long long k = kind == 2 ? 0 : 1; k < 100'000'000; ++k) {
    const double kk = static_cast<double>(k);
    const double exponent = kind == 2 ? (kk + 0.5) * (kk + 0.5) : kk * kk;
    double term = 2.0 * std::exp(exponent * log_q);
    if (kind == 4 && (k % 2 != 0)) term = -term;
    sum += term;
    scale += std::abs(term);
    if (std::abs(term) < tol * scale) break;
  }
  return sum;
}

double theta_closed_form(ThetaForm form, int n, double q) {
  check_nome(q);
  auto t2 = [](double x) { return jacobi_theta(2, x); };
  auto t3 = [](double x) { return jacobi_theta(3, x); };
  auto t4 = [](double x) { return jacobi_theta(4, x); };
  switch (form) {
    case ThetaForm::kInteger:
      return std::pow(t3(q), n);
    case ThetaForm::kCheckerboard:
      return 0.5 * (std::pow(t3(q), n) + std::pow(t4(q), n));
    case ThetaForm::kCheckerboardDual: {
      const double q4 = std::pow(q, 4);
      return std::pow(t2(q4), n) + std::pow(t3(q4), n);
    }
    case ThetaForm::kHexagonal: {
      const double q3 = std::pow(q, 3);
      return t2(q) * t2(q3) + t3(q) * t3(q3);
    }
    case ThetaForm::kGosset:
      return 0.5 * (std::pow(t2(q), 8) + std::pow(t3(q), 8) + std::pow(t4(q), 8));
    case ThetaForm::kCoxeterTodd: {
      const double tq = t2(q) * t2(std::pow(q, 3));
      const double phi = t2(std::pow(q, 4)) * t2(std::pow(q, 12)) +
                         t3(std::pow(q, 4)) * t3(std::pow(q, 12));
      return 9.0 / 32.0 * std::pow(tq, 6) + std::pow(phi, 6) +
             45.0 / 16.0 * std::pow(tq, 4) * std::pow(phi, 2);
    }
    case ThetaForm::kLeech: {
      const double a = t2(q), b = t3(q), c = t4(q);
      const double e8 = std::pow(a, 8) + std::pow(b, 8) + std::pow(c, 8);
      return std::pow(e8, 3) / 8.0 - 45.0 / 16.0 * std::pow(a * b * c, 8);
    }
  }
  fail(ErrorCode::kUnknownForm, "unknown theta form");
}

double theta_closed_form(const CatalogEntry& entry, double q) {
  if (!entry.theta_form) {
    fail(ErrorCode::kUnknownForm,
         "catalog entry '" + entry.name + "' has no closed-form theta series");
  }
  return theta_closed_form(*entry.theta_form, entry.dim, q);
}

std::vector<BigInt> closed_form_coefficients(ThetaForm form, int n,
                                             int max_norm) {
  if (max_norm < 0) fail(ErrorCode::kInvalidArgument, "max_norm must be >= 0");
  const std::size_t len = 4 * static_cast<std::size_t>(max_norm) + 1;
  using S = QuarterSeries;
  const S th2 = S::jacobi(2, len), th3 = S::jacobi(3, len), th4 = S::jacobi(4, len);
  switch (form) {
    case ThetaForm::kInteger:
      return th3.pow(n).to_q_coefficients(1);
    case ThetaForm::kCheckerboard:
      return (th3.pow(n) + th4.pow(n)).to_q_coefficients(2);
    case ThetaForm::kCheckerboardDual:
      return (S::jacobi(2, len, 4).pow(n) + S::jacobi(3, len, 4).pow(n))
          .to_q_coefficients(1);
    case ThetaForm::kHexagonal:
      return (th2 * S::jacobi(2, len, 3) + th3 * S::jacobi(3, len, 3))
          .to_q_coefficients(1);
    case ThetaForm::kGosset:
      return (th2.pow(8) + th3.pow(8) + th4.pow(8)).to_q_coefficients(2);
    case ThetaForm::kCoxeterTodd: {
      const S t = th2 * S::jacobi(2, len, 3);
      const S phi = S::jacobi(2, len, 4) * S::jacobi(2, len, 12) +
                    S::jacobi(3, len, 4) * S::jacobi(3, len, 12);
      return (t.pow(6).scaled(9) + phi.pow(6).scaled(32) +
              (t.pow(4) * phi.pow(2)).scaled(90))
          .to_q_coefficients(32);
    }
    case ThetaForm::kLeech: {
      const S e8 = th2.pow(8) + th3.pow(8) + th4.pow(8);
      return (e8.pow(3).scaled(2) + (th2 * th3 * th4).pow(8).scaled(-45))
          .to_q_coefficients(16);
    }
  }
  fail(ErrorCode::kUnknownForm, "unknown theta form");
}

double upper_incomplete_gamma_half(int twice_s, double x) {
  if (twice_s <= 0) fail(ErrorCode::kDomainError, "incomplete gamma: s must be > 0");
  if (!(x >= 0.0)) fail(ErrorCode::kDomainError, "incomplete gamma: x must be >= 0");
  double s = (twice_s % 2 == 1) ? 0.5 : 1.0;
  double g = (twice_s % 2 == 1) ? std::sqrt(kPi) * std::erfc(std::sqrt(x))
                                : std::exp(-x);
  const double target = 0.5 * twice_s;
  while (s < target - 0.25) {
    const double power_term = x > 0.0 ? std::exp(s * std::log(x) - x) : 0.0;
    g = s * g + power_term;
    s += 1.0;
  }
  return g;
}

ThetaApproxResult theta_approx(int n, double lambda1, double volume, double q) {
  if (!(q > 0.0 && q < 1.0)) {
    fail(ErrorCode::kDomainError, "theta_approx: q must lie in (0, 1)");
  }
  if (n < 1 || !(lambda1 > 0.0) || !(volume > 0.0)) {
    fail(ErrorCode::kDomainError, "theta_approx: need n >= 1, lambda1 > 0, vol > 0");
  }
  const double log_q = std::log(q);
  const double half = 0.5 * n;
  const double beta = -lambda1 * log_q;
  const double integral = upper_incomplete_gamma_half(n + 2, beta) /
                          std::pow(beta, half + 1.0);
  const double coefficient = std::pow(lambda1, half + 1.0) * std::pow(kPi, half) /
                             (std::tgamma(half + 1.0) * volume);
  const double value = (1.0 - std::pow(q, lambda1)) - log_q * coefficient * integral;
  return ThetaApproxResult{value, q, std::nullopt, n, lambda1, volume};
}

ThetaApproxResult theta_approx(const Lattice& lattice, double q) {
  return theta_approx(lattice.dim(), minimal_norm(lattice).lambda1,
                      lattice.volume(), q);
}

ThetaApproxResult theta_approx_sigma2(int n, double lambda1, double volume,
                                      double sigma2) {
  if (!(sigma2 > 0.0)) fail(ErrorCode::kDomainError, "sigma2 must be > 0");
  auto result = theta_approx(n, lambda1, volume, nome_from_sigma2(sigma2));
  result.sigma2 = sigma2;
  return result;
}

double lattice_gaussian(const Lattice& lattice, const RealVector& y,
                        double sigma2, std::optional<double> r_max) {
  if (!(sigma2 > 0.0)) fail(ErrorCode::kDomainError, "sigma2 must be > 0");
  if (y.size() != lattice.dim()) {
    fail(ErrorCode::kDimensionMismatch, "lattice_gaussian: offset dimension");
  }
  const int n = lattice.dim();
  const double norm = std::pow(2.0 * kPi * sigma2, -0.5 * n);
  const double s = 1.0 / (2.0 * sigma2);
  if (!r_max) {
    return norm * periodic_gaussian_sum(lattice, mod_lattice(y, lattice), s, 1e-12);
  }
  const auto points = enumerate_near(lattice, -y, *r_max);
  double sum = 0.0;
  for (auto it = points.rbegin(); it != points.rend(); ++it) {
    sum += std::exp(-s * (it->coords + y).squaredNorm());
  }
  return norm * sum;
}

std::string_view to_string(FlatnessMode mode) {
  return mode == FlatnessMode::kExact ? "exact" : "approx";
}

double volume_to_noise_ratio(int n, double volume, double sigma2) {
  if (!(sigma2 > 0.0)) fail(ErrorCode::kDomainError, "sigma2 must be > 0");
  return std::pow(volume, 2.0 / n) / (2.0 * kPi * sigma2);
}

FlatnessPoint flatness_from_theta(int n, double volume, double sigma2,
                                  double theta, FlatnessMode mode) {
  const double vnr = volume_to_noise_ratio(n, volume, sigma2);
  return FlatnessPoint{sigma2, std::pow(vnr, 0.5 * n) * theta - 1.0, vnr, theta,
                       mode};
}

FlatnessPoint flatness_factor(const Lattice& lattice, double sigma2,
                              FlatnessMode mode) {
  if (!(sigma2 > 0.0)) fail(ErrorCode::kDomainError, "sigma2 must be > 0");
  const double q = nome_from_sigma2(sigma2);
  const double theta = mode == FlatnessMode::kExact
                           ? theta_exact_value(lattice, q)
                           : theta_approx(lattice, q).value;
  return flatness_from_theta(lattice.dim(), lattice.volume(), sigma2, theta, mode);
}

double truncated_sum_baseline(double lambda1, std::uint64_t kissing, double q) {
  check_nome(q);
  return 1.0 + static_cast<double>(kissing) * std::pow(q, lambda1);
}

double truncated_sum_baseline(const Lattice& lattice, double q) {
  const auto m = minimal_norm(lattice);
  return truncated_sum_baseline(m.lambda1, m.kissing, q);
}

double truncated_sum_baseline(const CatalogEntry& entry, double q) {
  if (entry.theta_form) {
    const int lambda1 = static_cast<int>(std::llround(entry.lambda1));
    const auto coeffs = closed_form_coefficients(*entry.theta_form, entry.dim, lambda1);
    return truncated_sum_baseline(entry.lambda1,
                                  coeffs[lambda1].convert_to<std::uint64_t>(), q);
  }
  return truncated_sum_baseline(entry.lattice(), q);
}

}  // namespace lattheta
