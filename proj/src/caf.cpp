#include "lattheta/caf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

#include "lattheta/errors.hpp"
#include "lattheta/theta.hpp"

namespace lattheta {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double dot(const std::vector<double>& h, const Coeffs& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * static_cast<double>(a[i]);
  return s;
}

double squared(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double squared(const Coeffs& a) {
  double s = 0.0;
  for (auto x : a) s += static_cast<double>(x) * static_cast<double>(x);
  return s;
}

bool all_zero(const Coeffs& a) {
  return std::all_of(a.begin(), a.end(), [](std::int64_t x) { return x == 0; });
}

int first_nonzero(const Coeffs& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != 0) return static_cast<int>(i);
  }
  return -1;
}

double log_sum_exp(const std::vector<double>& exponents) {
  if (exponents.empty()) return kNegInf;
  const double m = *std::max_element(exponents.begin(), exponents.end());
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double e : exponents) s += std::exp(e - m);
  return m + std::log(s);
}

// g = s·a + t·b, g >= 0.
void extended_gcd(std::int64_t a, std::int64_t b, std::int64_t& g,
                  std::int64_t& s, std::int64_t& t) {
  std::int64_t old_r = a, r = b, old_s = 1, cur_s = 0, old_t = 0, cur_t = 1;
  while (r != 0) {
    const std::int64_t q = old_r / r;
    std::tie(old_r, r) = std::make_pair(r, old_r - q * r);
    std::tie(old_s, cur_s) = std::make_pair(cur_s, old_s - q * cur_s);
    std::tie(old_t, cur_t) = std::make_pair(cur_t, old_t - q * cur_t);
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

// Calls visit(z) for every z ∈ ∏[-bound_i, bound_i], last index fastest.
template <typename Visit>
void for_each_in_box(const std::vector<std::int64_t>& bound, Visit&& visit) {
  const std::size_t d = bound.size();
  Coeffs z(d);
  for (std::size_t i = 0; i < d; ++i) z[i] = -bound[i];
  while (true) {
    visit(z);
    std::size_t i = d;
    while (i > 0) {
      --i;
      if (z[i] < bound[i]) {
        ++z[i];
        break;
      }
      z[i] = -bound[i];
      if (i == 0) return;
    }
    if (d == 0) return;
  }
}

double box_size(const std::vector<std::int64_t>& bound) {
  double count = 1.0;
  for (auto b : bound) count *= static_cast<double>(2 * b + 1);
  return count;
}

void check_inputs(const Coeffs& a, const std::vector<Lattice>& lattices,
                  const std::vector<double>& h) {
  if (lattices.empty()) fail(ErrorCode::kInvalidArgument, "need at least one lattice");
  if (a.size() != lattices.size() || h.size() != lattices.size()) {
    fail(ErrorCode::kDimensionMismatch,
         "coefficient, channel and lattice counts must agree");
  }
  if (all_zero(a)) fail(ErrorCode::kInvalidArgument, "coefficient vector a is zero");
  const int n = lattices.front().dim();
  for (const auto& l : lattices) {
    if (l.dim() != n) fail(ErrorCode::kDimensionMismatch, "lattice dimensions differ");
  }
}

RealMatrix combined_generator(const Coeffs& a, const std::vector<Lattice>& lattices) {
  const int n = lattices.front().dim();
  const int K = static_cast<int>(lattices.size());
  RealMatrix M(n, n * K);
  for (int k = 0; k < K; ++k) {
    M.middleCols(k * n, n) = static_cast<double>(a[k]) * lattices[k].generator();
  }
  return M;
}

// Fills every real-valued field of the bundle from U.
DecompositionBundle assemble(const Coeffs& a, const std::vector<Lattice>& lattices,
                             const std::vector<double>& h, const RealMatrix& U,
                             DecompositionMode mode,
                             const RealMatrix* U_inv_exact = nullptr) {
  DecompositionBundle b;
  b.mode = mode;
  b.n = lattices.front().dim();
  b.K = static_cast<int>(lattices.size());
  b.a = a;
  b.h = h;
  for (const auto& l : lattices) b.generators.push_back(l.generator());
  b.M = combined_generator(a, lattices);
  const int n = b.n;
  const int nK = n * b.K;
  const int kd = b.kernel_dim();
  if (U.rows() != nK || U.cols() != nK) {
    fail(ErrorCode::kInconsistentBundle, "transform U has the wrong shape");
  }
  b.U = U;
  const RealMatrix MU = b.M * U;
  b.B = MU.rightCols(n);
  const double scale =
      std::max(1.0, b.M.cwiseAbs().maxCoeff() * U.cwiseAbs().maxCoeff() * nK);
  if (kd > 0 && MU.leftCols(kd).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    fail(ErrorCode::kInconsistentBundle, "M·U does not have a leading zero block");
  }
  try {
    b.B_inv = det_and_inverse(b.B).inverse;
    b.U_inv = U_inv_exact ? *U_inv_exact : det_and_inverse(U).inverse;
  } catch (const Error&) {
    fail(ErrorCode::kInconsistentBundle, "decomposition blocks are not invertible");
  }
  b.U_hat = b.U_inv.topRows(kd);
  b.M_L = RealMatrix::Zero(n, kd);
  for (int k = 0; k < b.K; ++k) {
    b.U_blocks.push_back(U.block(k * n, 0, n, kd));
    b.V_blocks.push_back(U.block(k * n, kd, n, n));
    b.M_L += h[k] * lattices[k].generator() * b.U_blocks.back();
  }
  return b;
}

const std::vector<TupleIndex::Tuple>& empty_tuples() {
  static const std::vector<TupleIndex::Tuple> empty;
  return empty;
}

}  // namespace

// ---------------------------------------------------------------- channel

ChannelInstance sample_channel(int K, double P, double sigma2, std::uint64_t seed) {
  if (K < 1) fail(ErrorCode::kInvalidArgument, "K must be >= 1");
  if (!(sigma2 > 0.0) || !(P > 0.0)) {
    fail(ErrorCode::kDomainError, "power and noise variance must be > 0");
  }
  std::mt19937_64 rng(seed);
  ChannelInstance c;
  c.K = K;
  c.h = sample_gaussian_vector(static_cast<std::size_t>(K), 1.0, rng);
  c.sigma2 = sigma2;
  c.P = P;
  c.rho = P / sigma2;
  c.seed = seed;
  return c;
}

std::mt19937_64 trial_rng(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::vector<double> sample_gaussian_vector(std::size_t size, double variance,
                                           std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(variance));
  std::vector<double> out(size);
  for (auto& x : out) x = dist(rng);
  return out;
}

RealVector received_signal(const std::vector<RealVector>& codewords,
                           const std::vector<double>& h, const RealVector& noise) {
  if (codewords.size() != h.size()) {
    fail(ErrorCode::kDimensionMismatch, "codeword and channel counts differ");
  }
  RealVector y = noise;
  for (std::size_t k = 0; k < codewords.size(); ++k) {
    if (codewords[k].size() != noise.size()) {
      fail(ErrorCode::kDimensionMismatch, "codeword dimension differs from noise");
    }
    y += h[k] * codewords[k];
  }
  return y;
}

// ---------------------------------------------------------------- equations

double mmse_alpha(double rho, const std::vector<double>& h, const Coeffs& a) {
  if (h.size() != a.size()) fail(ErrorCode::kDimensionMismatch, "h and a differ in length");
  return rho * dot(h, a) / (1.0 + rho * squared(h));
}

double equation_quadratic_form(double rho, const std::vector<double>& h,
                               const Coeffs& a) {
  if (h.size() != a.size()) fail(ErrorCode::kDimensionMismatch, "h and a differ in length");
  const double ha = dot(h, a);
  return squared(a) - rho * ha * ha / (1.0 + rho * squared(h));
}

double computation_rate(double rho, const std::vector<double>& h, const Coeffs& a) {
  if (all_zero(a)) fail(ErrorCode::kInvalidArgument, "coefficient vector a is zero");
  const double inner = equation_quadratic_form(rho, h, a);
  if (!(inner > 0.0)) return 0.0;
  return std::max(0.0, 0.5 * std::log2(1.0 / inner));
}

EquationCoeffs optimal_coeffs(double rho, const std::vector<double>& h, int box_bound) {
  if (h.empty()) fail(ErrorCode::kInvalidArgument, "channel vector is empty");
  if (box_bound < 1) fail(ErrorCode::kInvalidArgument, "box bound must be >= 1");
  const std::vector<std::int64_t> bound(h.size(), box_bound);
  if (box_size(bound) > 5e7) {
    fail(ErrorCode::kInvalidArgument, "coefficient search box too large");
  }
  Coeffs best;
  double best_value = std::numeric_limits<double>::infinity();
  for_each_in_box(bound, [&](const Coeffs& a) {
    const int lead = first_nonzero(a);
    if (lead < 0 || a[lead] < 0) return;
    const double v = equation_quadratic_form(rho, h, a);
    const double tol = 1e-12 * std::max(1.0, std::abs(best_value));
    if (best.empty() || v < best_value - tol ||
        (std::abs(v - best_value) <= tol && coeffs_less(a, best))) {
      if (best.empty() || v < best_value) best_value = v;
      best = a;
    }
  });
  return EquationCoeffs{best, gcd_of(best) == 1};
}

// ---------------------------------------------------------------- decomposition

std::string_view to_string(DecompositionMode mode) {
  return mode == DecompositionMode::kHnf ? "hnf" : "orthogonal";
}

DecompositionMode decomposition_mode_from_string(std::string_view name) {
  if (name == "hnf" || name == "HNF") return DecompositionMode::kHnf;
  if (name == "orthogonal" || name == "Orthogonal") return DecompositionMode::kOrthogonal;
  fail(ErrorCode::kConfigError, "unknown decomposition mode '" + std::string(name) + "'");
}

RealVector DecompositionBundle::mu(int k, const RealVector& lambda) const {
  return generators.at(k) * (V_blocks.at(k) * (B_inv * lambda));
}

RealVector DecompositionBundle::omega(const RealVector& y, const RealVector& lambda) const {
  RealVector w = y;
  const RealVector r_n = B_inv * lambda;
  for (int k = 0; k < K; ++k) w -= h[k] * (generators[k] * (V_blocks[k] * r_n));
  return w;
}

double DecompositionBundle::residual() const {
  RealMatrix target = RealMatrix::Zero(n, n * K);
  target.rightCols(n) = B;
  return (M * U - target).cwiseAbs().maxCoeff();
}

DecompositionBundle build_decomposition(const Coeffs& a,
                                        const std::vector<Lattice>& lattices,
                                        const std::vector<double>& h,
                                        DecompositionMode mode) {
  check_inputs(a, lattices, h);
  if (mode == DecompositionMode::kOrthogonal) {
    const auto block = orthogonal_zero_block(combined_generator(a, lattices));
    RealMatrix U_inv = block.U.transpose();
    return assemble(a, lattices, h, block.U, mode, &U_inv);
  }
  const int n = lattices.front().dim();
  const int K = static_cast<int>(lattices.size());
  IntMatrix M(n, n * K);
  for (int k = 0; k < K; ++k) {
    const auto g = IntMatrix::from_real(lattices[k].generator());
    if (!g) {
      fail(ErrorCode::kNonIntegerLattice,
           "HNF decomposition needs integer generators ('" + lattices[k].name() + "')");
    }
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) M(r, k * n + c) = (*g)(r, c) * a[k];
    }
  }
  const HnfResult hnf = K >= 2 ? hnf_zero_block(M) : column_hnf(M);
  const RealMatrix U_inv = hnf.U_inv.to_real();
  auto bundle = assemble(a, lattices, h, hnf.U.to_real(), mode, &U_inv);
  bundle.U_int = hnf.U;
  bundle.U_inv_int = hnf.U_inv;
  bundle.B_int = hnf.B;
  return bundle;
}

DecompositionBundle build_decomposition_with_transform(
    const Coeffs& a, const std::vector<Lattice>& lattices,
    const std::vector<double>& h, const RealMatrix& U) {
  check_inputs(a, lattices, h);
  const auto U_int = IntMatrix::from_real(U);
  const bool unimodular =
      U_int && U.rows() == U.cols() && abs(determinant(*U_int)) == 1;
  if (!unimodular) return assemble(a, lattices, h, U, DecompositionMode::kOrthogonal);
  auto bundle = assemble(a, lattices, h, U, DecompositionMode::kHnf);
  bundle.U_int = U_int;
  bundle.U_inv_int = IntMatrix::from_real(bundle.U_inv, 1e-6);
  if (bundle.U_inv_int) bundle.U_inv = bundle.U_inv_int->to_real();
  bundle.U_hat = bundle.U_inv.topRows(bundle.kernel_dim());
  bundle.B_int = IntMatrix::from_real(bundle.B);
  return bundle;
}

// ---------------------------------------------------------------- metric

TupleIndex::TupleIndex(Coeffs a, std::vector<NestedCode> codes)
    : a_(std::move(a)), codes_(std::move(codes)) {
  if (codes_.empty() || codes_.size() != a_.size()) {
    fail(ErrorCode::kDimensionMismatch, "need one codebook per coefficient");
  }
  k_min_ = first_nonzero(a_);
  if (k_min_ < 0) fail(ErrorCode::kInvalidArgument, "coefficient vector a is zero");
  const int n = codes_.front().fine.dim();
  double total = 1.0;
  for (std::size_t k = 0; k < codes_.size(); ++k) {
    if (codes_[k].fine.dim() != n) {
      fail(ErrorCode::kDimensionMismatch, "codebook dimensions differ");
    }
    if (static_cast<int>(k) > k_min_ && a_[k] != 0) {
      sublattice_transform(codes_[k].fine, codes_[k_min_].fine);
    }
    total *= static_cast<double>(codes_[k].size());
    std::map<Coeffs, std::size_t> lookup;
    for (std::size_t i = 0; i < codes_[k].size(); ++i) {
      lookup.emplace(codes_[k].representatives[i].coeffs, i);
    }
    word_lookup_.push_back(std::move(lookup));
  }
  if (total > 1e7) {
    fail(ErrorCode::kEnumerationBudgetExceeded, "too many codeword tuples");
  }
  Tuple t(codes_.size(), 0);
  while (true) {
    RealVector lambda = RealVector::Zero(n);
    for (std::size_t k = 0; k < codes_.size(); ++k) {
      if (a_[k] != 0) {
        lambda += static_cast<double>(a_[k]) * codes_[k].representatives[t[k]].coords;
      }
    }
    groups_[lambda_coeffs(lambda)].push_back(t);
    ++tuple_count_;
    std::size_t k = codes_.size();
    while (k > 0) {
      --k;
      if (++t[k] < codes_[k].size()) break;
      t[k] = 0;
      if (k == 0) return;
    }
  }
}

Coeffs TupleIndex::lambda_coeffs(const RealVector& lambda) const {
  const RealVector z = lambda_lattice().inverse() * lambda;
  Coeffs out(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double r = std::round(z(i));
    if (std::abs(z(i) - r) > 1e-6 * std::max(1.0, std::abs(r))) {
      fail(ErrorCode::kInvalidArgument, "point is not in the decoding lattice");
    }
    out[i] = static_cast<std::int64_t>(r);
  }
  return out;
}

const std::vector<TupleIndex::Tuple>& TupleIndex::tuples(const Coeffs& lambda_coeffs) const {
  const auto it = groups_.find(lambda_coeffs);
  return it == groups_.end() ? empty_tuples() : it->second;
}

std::vector<Coeffs> TupleIndex::stacked_coefficients(const Coeffs& lambda_coeffs) const {
  std::vector<Coeffs> out;
  for (const auto& t : tuples(lambda_coeffs)) {
    Coeffs z;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const auto& c = codes_[k].representatives[t[k]].coeffs;
      z.insert(z.end(), c.begin(), c.end());
    }
    out.push_back(std::move(z));
  }
  return out;
}

RealVector TupleIndex::codeword(int k, std::size_t index) const {
  return codes_.at(k).representatives.at(index).coords;
}

bool TupleIndex::contains(int k, const Coeffs& word_coeffs) const {
  return word_lookup_.at(k).count(word_coeffs) > 0;
}

std::vector<LatticePoint> candidate_set(const Coeffs& a,
                                        const std::vector<NestedCode>& codes) {
  if (codes.size() != a.size()) {
    fail(ErrorCode::kDimensionMismatch, "need one codebook per coefficient");
  }
  const int k_min = first_nonzero(a);
  if (k_min < 0) fail(ErrorCode::kInvalidArgument, "coefficient vector a is zero");
  double abs_sum = 0.0;
  for (auto x : a) abs_sum += std::abs(static_cast<double>(x));
  const double bound = abs_sum * codes[k_min].max_norm();
  return enumerate_within(codes[k_min].fine, bound * bound * (1.0 + 1e-12) + 1e-9);
}

double log_phi_definition(const TupleIndex& index, const Coeffs& lambda_coeffs,
                          const RealVector& y, const std::vector<double>& h,
                          double sigma2) {
  if (!(sigma2 > 0.0)) fail(ErrorCode::kDomainError, "sigma2 must be > 0");
  const auto& ts = index.tuples(lambda_coeffs);
  std::vector<double> exponents;
  exponents.reserve(ts.size());
  for (const auto& t : ts) {
    RealVector residual = y;
    for (std::size_t k = 0; k < t.size(); ++k) {
      residual -= h[k] * index.codes()[k].representatives[t[k]].coords;
    }
    exponents.push_back(-residual.squaredNorm() / (2.0 * sigma2));
  }
  return log_sum_exp(exponents);
}

double log_phi_decomposition(const DecompositionBundle& bundle,
                             const RealVector& lambda, const RealVector& y,
                             const std::vector<Coeffs>& S, double sigma2) {
  if (!(sigma2 > 0.0)) fail(ErrorCode::kDomainError, "sigma2 must be > 0");
  const RealVector w = bundle.omega(y, lambda);
  const int nK = bundle.n * bundle.K;
  std::vector<double> exponents;
  exponents.reserve(S.size());
  RealVector t(nK);
  for (const auto& s : S) {
    if (static_cast<int>(s.size()) != nK) {
      fail(ErrorCode::kInconsistentBundle, "coefficient vector length differs from nK");
    }
    for (int i = 0; i < nK; ++i) t(i) = static_cast<double>(s[i]);
    const RealVector v = bundle.M_L * (bundle.U_hat * t);
    exponents.push_back(-(w - v).squaredNorm() / (2.0 * sigma2));
  }
  return log_sum_exp(exponents);
}

double log_phi_lattice_sum(const DecompositionBundle& bundle,
                           const TupleIndex& index, const RealVector& lambda,
                           const RealVector& y, double sigma2) {
  if (!(sigma2 > 0.0)) fail(ErrorCode::kDomainError, "sigma2 must be > 0");
  if (!bundle.U_int) {
    fail(ErrorCode::kInconsistentBundle, "lattice-sum form needs a unimodular U");
  }
  if (static_cast<int>(index.codes().size()) != bundle.K) {
    fail(ErrorCode::kInconsistentBundle, "codebook count differs from K");
  }
  const int n = bundle.n;
  const int kd = bundle.kernel_dim();
  const RealVector rn_real = bundle.B_inv * lambda;
  RealVector rn(n);
  for (int i = 0; i < n; ++i) {
    rn(i) = std::round(rn_real(i));
    if (std::abs(rn_real(i) - rn(i)) > 1e-6) return kNegInf;  // λ ∉ M·ℤ^{nK}
  }
  // |r_i| <= Σ_j |Û_ij|·max|z_j| over the codebooks.
  std::vector<double> zmax(static_cast<std::size_t>(n * bundle.K), 0.0);
  for (int k = 0; k < bundle.K; ++k) {
    for (const auto& w : index.codes()[k].representatives) {
      for (int j = 0; j < n; ++j) {
        auto& m = zmax[static_cast<std::size_t>(k * n + j)];
        m = std::max(m, std::abs(static_cast<double>(w.coeffs[j])));
      }
    }
  }
  std::vector<std::int64_t> bound(static_cast<std::size_t>(kd));
  for (int i = 0; i < kd; ++i) {
    double s = 0.0;
    for (int j = 0; j < n * bundle.K; ++j) s += std::abs(bundle.U_hat(i, j)) * zmax[j];
    bound[i] = static_cast<std::int64_t>(std::floor(s + 1e-9));
  }
  if (box_size(bound) > 1e7) {
    fail(ErrorCode::kEnumerationBudgetExceeded, "lattice-sum coefficient box too large");
  }
  const RealVector w = bundle.omega(y, lambda);
  const RealMatrix U_left = bundle.U.leftCols(kd);
  const RealVector base = bundle.U.rightCols(n) * rn;
  std::vector<double> exponents;
  RealVector r(kd);
  Coeffs word(static_cast<std::size_t>(n));
  for_each_in_box(bound, [&](const Coeffs& rc) {
    for (int i = 0; i < kd; ++i) r(i) = static_cast<double>(rc[i]);
    const RealVector z = U_left * r + base;
    for (int k = 0; k < bundle.K; ++k) {
      for (int j = 0; j < n; ++j) word[j] = std::llround(z(k * n + j));
      if (!index.contains(k, word)) return;
    }
    exponents.push_back(-(w - bundle.M_L * r).squaredNorm() / (2.0 * sigma2));
  });
  return log_sum_exp(exponents);
}

double ml_metric_phi(const RealVector& lambda, const RealVector& y,
                     const DecompositionBundle& bundle,
                     const std::vector<Coeffs>& S, double sigma2) {
  return std::exp(log_phi_decomposition(bundle, lambda, y, S, sigma2));
}

std::string_view to_string(MetricForm form) {
  switch (form) {
    case MetricForm::kDefinition: return "definition";
    case MetricForm::kDecomposition: return "decomposition";
    case MetricForm::kLatticeSum: return "lattice_sum";
  }
  return "unknown";
}

MlDecoder::MlDecoder(const Coeffs& a, const std::vector<double>& h,
                     const std::vector<NestedCode>& codes, DecodeOptions options)
    : h_(h), options_(options), index_(a, codes), candidates_(candidate_set(a, codes)) {
  if (h.size() != a.size()) fail(ErrorCode::kDimensionMismatch, "h and a differ in length");
  if (options_.form != MetricForm::kDefinition) {
    std::vector<Lattice> fine;
    for (const auto& c : codes) fine.push_back(c.fine);
    bundle_ = build_decomposition(a, fine, h, options_.mode);
  }
}

double MlDecoder::log_phi(const LatticePoint& lambda, const RealVector& y,
                          double sigma2) const {
  switch (options_.form) {
    case MetricForm::kDefinition:
      return log_phi_definition(index_, lambda.coeffs, y, h_, sigma2);
    case MetricForm::kDecomposition:
      return log_phi_decomposition(*bundle_, lambda.coords, y,
                                   index_.stacked_coefficients(lambda.coeffs), sigma2);
    case MetricForm::kLatticeSum:
      return log_phi_lattice_sum(*bundle_, index_, lambda.coords, y, sigma2);
  }
  return kNegInf;
}

DecodeResult MlDecoder::decode(const RealVector& y, double sigma2) const {
  DecodeResult result;
  result.candidate_count = candidates_.size();
  if (options_.keep_profile) result.metric_profile.emplace();
  bool have = false;
  for (const auto& cand : candidates_) {
    const double v = log_phi(cand, y, sigma2);
    if (result.metric_profile) result.metric_profile->push_back({cand, v});
    if (!have) {
      result.lambda_hat = cand;
      result.log_metric = v;
      have = true;
      continue;
    }
    const double best = result.log_metric;
    const double tol = best == kNegInf ? 0.0 : 1e-12 * std::max(1.0, std::abs(best));
    const bool better = v > best + tol;
    const bool tie = v == best || std::abs(v - best) <= tol;
    if (better || (tie && coeffs_less(cand.coeffs, result.lambda_hat.coeffs))) {
      result.lambda_hat = cand;
      result.log_metric = std::max(v, best);
    }
  }
  if (!have) fail(ErrorCode::kInvalidArgument, "empty candidate set");
  result.metric_value = std::exp(result.log_metric);
  return result;
}

DecodeResult ml_decode(const RealVector& y, const std::vector<double>& h,
                       const Coeffs& a, const std::vector<NestedCode>& codes,
                       double sigma2, DecodeOptions options) {
  return MlDecoder(a, h, codes, options).decode(y, sigma2);
}

// ---------------------------------------------------------------- scaled pair

ScaledPairResult scaled_pair_equivalence(const RealMatrix& generator, std::int64_t c,
                                          const Coeffs& a, const std::vector<double>& h) {
  if (a.size() != 2 || h.size() != 2) {
    fail(ErrorCode::kDimensionMismatch, "scaled pair check needs K = 2");
  }
  if (c == 0) fail(ErrorCode::kInvalidArgument, "scale c must be nonzero");
  if (std::gcd(a[0], a[1]) != 1) {
    fail(ErrorCode::kInvalidArgument, "coefficients must satisfy gcd(a1, a2) = 1");
  }
  if (!IntMatrix::from_real(generator)) {
    fail(ErrorCode::kNonIntegerLattice, "scaled pair check needs an integer generator");
  }
  const double cross = static_cast<double>(a[0]) * h[1] - static_cast<double>(a[1]) * h[0];
  if (std::abs(cross) < 1e-9) {
    fail(ErrorCode::kDegenerate, "a1*h2 - a2*h1 vanishes; M_L collapses");
  }
  const int n = static_cast<int>(generator.rows());
  const Lattice l1(generator);
  const Lattice l2(static_cast<double>(c) * generator);
  const std::vector<Lattice> lattices{l1, l2};
  const RealMatrix G_inv = det_and_inverse(generator).inverse;
  const double det_G = generator.determinant();

  ScaledPairResult out;
  out.r_expected = static_cast<double>(c) * cross;

  const auto hnf = build_decomposition(a, lattices, h, DecompositionMode::kHnf);
  out.r = std::pow(std::abs(hnf.M_L.determinant() / det_G), 1.0 / n);
  const RealMatrix W = G_inv * hnf.M_L / out.r;
  const RealMatrix W_round = W.array().round().matrix();
  out.integrality_error = (W - W_round).cwiseAbs().maxCoeff();
  out.det_error = std::abs(std::abs(W_round.determinant()) - 1.0);
  out.equivalent = out.integrality_error <= 1e-6 && out.det_error <= 1e-6;

  // U₁ = -c·a₂·I, U₂ = a₁·I, completed by an extended-gcd column pair.
  std::int64_t g = 0, s = 0, t = 0;
  extended_gcd(a[0], c * a[1], g, s, t);
  out.explicit_unimodular = g == 1;
  const RealMatrix I = RealMatrix::Identity(n, n);
  RealMatrix U(2 * n, 2 * n);
  U << -static_cast<double>(c * a[1]) * I, -static_cast<double>(s) * I,
      static_cast<double>(a[0]) * I, -static_cast<double>(t) * I;
  const auto explicit_bundle = build_decomposition_with_transform(a, lattices, h, U);
  const RealMatrix R = explicit_bundle.M_L * G_inv;
  out.r_signed = R.trace() / n;
  const double off_scalar = (R - out.r_signed * I).cwiseAbs().maxCoeff();
  const double tol = 1e-9 * std::max(1.0, std::abs(out.r_expected));
  out.explicit_match =
      off_scalar <= tol && std::abs(out.r_signed - out.r_expected) <= tol;
  return out;
}

// ---------------------------------------------------------------- probes

SumLatticeProbe sum_lattice_probe(const std::vector<Lattice>& lattices,
                                  const std::vector<double>& h, int p,
                                  std::optional<Coeffs> a, std::size_t budget) {
  const int K = static_cast<int>(lattices.size());
  if (K < 2) fail(ErrorCode::kInvalidArgument, "sum-of-lattices probe needs K >= 2");
  if (p < 1) fail(ErrorCode::kInvalidArgument, "coefficient range p must be >= 1");
  const Coeffs coeffs = a.value_or(Coeffs(static_cast<std::size_t>(K), 1));
  check_inputs(coeffs, lattices, h);
  const int n = lattices.front().dim();

  // M = M₁·[a₁T₁ ⋯ a_K T_K] with T_k = M₁⁻¹M_k integral.
  IntMatrix A(n, n * K);
  for (int k = 0; k < K; ++k) {
    const IntMatrix T = sublattice_transform(lattices[k], lattices[0]);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) A(r, k * n + c) = T(r, c) * coeffs[k];
    }
  }
  const HnfResult hnf = hnf_zero_block(A);
  const auto bundle =
      build_decomposition_with_transform(coeffs, lattices, h, hnf.U.to_real());

  const int kd = bundle.kernel_dim();
  const std::vector<std::int64_t> bound(static_cast<std::size_t>(kd), p);
  if (box_size(bound) > static_cast<double>(budget)) {
    fail(ErrorCode::kEnumerationBudgetExceeded, "sum-of-lattices box exceeds budget");
  }
  SumLatticeProbe out;
  out.min_nonzero_norm = std::numeric_limits<double>::infinity();
  RealVector z(kd);
  for_each_in_box(bound, [&](const Coeffs& zc) {
    for (int i = 0; i < kd; ++i) z(i) = static_cast<double>(zc[i]);
    out.points.push_back(bundle.M_L * z);
    if (!all_zero(zc)) {
      out.min_nonzero_norm = std::min(out.min_nonzero_norm, out.points.back().squaredNorm());
    }
  });
  return out;
}

std::vector<FlatnessRow> flatness_comparison(const std::vector<CatalogEntry>& entries,
                                             const std::vector<double>& rho_db) {
  struct Job {
    std::size_t entry;
    double db;
  };
  std::vector<Lattice> lattices;
  std::vector<Job> jobs;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    if (!entries[e].power_P) {
      fail(ErrorCode::kInvalidArgument, "lattice '" + entries[e].name + "' has no power P");
    }
    lattices.push_back(entries[e].lattice());
    for (double db : rho_db) jobs.push_back({e, db});
  }
  std::vector<FlatnessRow> rows(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const auto& entry = entries[jobs[i].entry];
    const double rho = std::pow(10.0, jobs[i].db / 10.0);
    const double sigma2 = *entry.power_P / rho;
    const auto point = flatness_factor(lattices[jobs[i].entry], sigma2, FlatnessMode::kExact);
    rows[i] = FlatnessRow{entry.name, entry.dim, *entry.power_P, jobs[i].db,
                          sigma2,     point.epsilon, point.vnr};
  });
  return rows;
}

// ---------------------------------------------------------------- utility

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::int64_t gcd_of(const Coeffs& values) {
  std::int64_t g = 0;
  for (auto v : values) g = std::gcd(g, v);
  return g;
}

}  // namespace lattheta
