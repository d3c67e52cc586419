#pragma once

// Compute-and-forward first hop: channel model, equation selection, the
// zero-block decomposition of the combined generator, the ML metric φ(λ)
// in its three equivalent forms, decoding, and sum-of-lattices probes.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lattheta/catalog.hpp"
#include "lattheta/lattice.hpp"
#include "lattheta/matrix_kit.hpp"

namespace lattheta {

// ---------------------------------------------------------------- channel

struct ChannelInstance {
  int K = 0;
  std::vector<double> h;
  double sigma2 = 0.0;
  double P = 0.0;
  double rho = 0.0;  // P / σ²
  std::uint64_t seed = 0;
};

// h ~ N(0, 1)^K from a generator seeded with `seed`.
ChannelInstance sample_channel(int K, double P, double sigma2,
                               std::uint64_t seed);

// Independent per-trial stream derived from (master, index).
std::mt19937_64 trial_rng(std::uint64_t master_seed, std::uint64_t index);

std::vector<double> sample_gaussian_vector(std::size_t size, double variance,
                                           std::mt19937_64& rng);

// y = Σ h_k x_k + noise.
RealVector received_signal(const std::vector<RealVector>& codewords,
                           const std::vector<double>& h,
                           const RealVector& noise);

// ---------------------------------------------------------------- equations

struct EquationCoeffs {
  Coeffs a;
  bool gcd_flag = false;  // gcd of the nonzero entries is 1
};

double mmse_alpha(double rho, const std::vector<double>& h, const Coeffs& a);

// ½·log⁺₂ of (‖a‖² - ρ(hᵗa)²/(1 + ρ‖h‖²))⁻¹.
double computation_rate(double rho, const std::vector<double>& h,
                        const Coeffs& a);

// aᵗGa with G = I - ρhhᵗ/(1 + ρ‖h‖²).
double equation_quadratic_form(double rho, const std::vector<double>& h,
                               const Coeffs& a);

// Exhaustive search of [-box_bound, box_bound]^K \ {0}. Sign canonical (first
// nonzero entry positive); ties within 1e-12 go to the lexicographically
// smallest vector.
EquationCoeffs optimal_coeffs(double rho, const std::vector<double>& h,
                              int box_bound = 8);

// ---------------------------------------------------------------- decomposition

enum class DecompositionMode { kHnf, kOrthogonal };

std::string_view to_string(DecompositionMode mode);
DecompositionMode decomposition_mode_from_string(std::string_view name);

// M = [a₁M₁ ⋯ a_K M_K] with M·U = [0 | B]; U tiled as rows of blocks
// [U_k V_k], U_k of size n×n(K-1) and V_k of size n×n.
struct DecompositionBundle {
  DecompositionMode mode = DecompositionMode::kHnf;
  int n = 0;
  int K = 0;
  Coeffs a;
  std::vector<double> h;
  std::vector<RealMatrix> generators;
  RealMatrix M, U, U_inv, B, B_inv;
  RealMatrix U_hat;  // first n(K-1) rows of U⁻¹
  std::vector<RealMatrix> U_blocks, V_blocks;
  RealMatrix M_L;  // Σ h_k M_k U_k
  std::optional<IntMatrix> U_int, U_inv_int, B_int;

  int kernel_dim() const { return n * (K - 1); }
  // μ_k(λ) = M_k V_k B⁻¹ λ.
  RealVector mu(int k, const RealVector& lambda) const;
  // ω(λ) = y - Σ h_k μ_k(λ).
  RealVector omega(const RealVector& y, const RealVector& lambda) const;
  // ‖M·U - [0 | B]‖_max.
  double residual() const;
};

// HNF mode needs integer generators (kNonIntegerLattice otherwise).
DecompositionBundle build_decomposition(const Coeffs& a,
                                        const std::vector<Lattice>& lattices,
                                        const std::vector<double>& h,
                                        DecompositionMode mode);

// Uses a caller-supplied U; throws kInconsistentBundle unless M·U = [0 | B]
// with B invertible. The bundle is tagged HNF when U is integral and
// unimodular, kOrthogonal (a general real transform) otherwise.
DecompositionBundle build_decomposition_with_transform(
    const Coeffs& a, const std::vector<Lattice>& lattices,
    const std::vector<double>& h, const RealMatrix& U);

// ---------------------------------------------------------------- metric

// Codeword tuples grouped by λ = Σ a_k x_k, keyed by λ's coefficients in the
// basis of Λ_{k_min,F}.
class TupleIndex {
 public:
  using Tuple = std::vector<std::size_t>;

  TupleIndex(Coeffs a, std::vector<NestedCode> codes);

  const Coeffs& a() const { return a_; }
  int k_min() const { return k_min_; }
  const std::vector<NestedCode>& codes() const { return codes_; }
  const Lattice& lambda_lattice() const { return codes_[k_min_].fine; }
  std::size_t group_count() const { return groups_.size(); }
  std::size_t tuple_count() const { return tuple_count_; }

  // Coefficients of λ in the Λ_{k_min,F} basis (kInvalidArgument when λ is
  // not a lattice point).
  Coeffs lambda_coeffs(const RealVector& lambda) const;
  const std::vector<Tuple>& tuples(const Coeffs& lambda_coeffs) const;
  const std::map<Coeffs, std::vector<Tuple>>& groups() const { return groups_; }

  // Stacked codeword coefficients z ∈ ℤ^{nK} for each tuple summing to λ.
  std::vector<Coeffs> stacked_coefficients(const Coeffs& lambda_coeffs) const;
  RealVector codeword(int k, std::size_t index) const;
  bool contains(int k, const Coeffs& word_coeffs) const;

 private:
  Coeffs a_;
  std::vector<NestedCode> codes_;
  int k_min_ = 0;
  std::size_t tuple_count_ = 0;
  std::map<Coeffs, std::vector<Tuple>> groups_;
  std::vector<std::map<Coeffs, std::size_t>> word_lookup_;
};

// All points of Λ_{k_min,F} with ‖λ‖ <= Σ|a_k|·max_{x∈C_{k_min}} ‖x‖.
std::vector<LatticePoint> candidate_set(const Coeffs& a,
                                        const std::vector<NestedCode>& codes);

// log φ(λ) from the defining tuple sum: Σ exp(-‖y - Σ h_k x_k‖²/(2σ²)).
double log_phi_definition(const TupleIndex& index, const Coeffs& lambda_coeffs,
                          const RealVector& y, const std::vector<double>& h,
                          double sigma2);

// log φ(λ) = log Σ_{t∈S} exp(-‖ω(λ) - M_L Û t‖²/(2σ²)).
double log_phi_decomposition(const DecompositionBundle& bundle,
                             const RealVector& lambda, const RealVector& y,
                             const std::vector<Coeffs>& S, double sigma2);

// Same metric summed over q = M_L r, r ∈ ℤ^{n(K-1)}, keeping those r whose
// codeword tuple z = U·(r, B⁻¹λ) lies in the codebooks. Needs an integral
// unimodular U.
double log_phi_lattice_sum(const DecompositionBundle& bundle,
                           const TupleIndex& index, const RealVector& lambda,
                           const RealVector& y, double sigma2);

// φ(λ) in the decomposition form.
double ml_metric_phi(const RealVector& lambda, const RealVector& y,
                     const DecompositionBundle& bundle,
                     const std::vector<Coeffs>& S, double sigma2);

enum class MetricForm { kDefinition, kDecomposition, kLatticeSum };

std::string_view to_string(MetricForm form);

struct MetricSample {
  LatticePoint lambda;
  double log_phi;
};

struct DecodeResult {
  LatticePoint lambda_hat;
  double log_metric = 0.0;
  double metric_value = 0.0;  // exp(log_metric)
  std::size_t candidate_count = 0;
  std::optional<std::vector<MetricSample>> metric_profile;
};

struct DecodeOptions {
  DecompositionMode mode = DecompositionMode::kHnf;
  MetricForm form = MetricForm::kDefinition;
  bool keep_profile = false;
};

// Reusable decoder for fixed (a, h, codes).
class MlDecoder {
 public:
  MlDecoder(const Coeffs& a, const std::vector<double>& h,
            const std::vector<NestedCode>& codes, DecodeOptions options = {});

  DecodeResult decode(const RealVector& y, double sigma2) const;
  double log_phi(const LatticePoint& lambda, const RealVector& y,
                 double sigma2) const;

  const TupleIndex& index() const { return index_; }
  const std::vector<LatticePoint>& candidates() const { return candidates_; }
  const std::optional<DecompositionBundle>& bundle() const { return bundle_; }

 private:
  std::vector<double> h_;
  DecodeOptions options_;
  TupleIndex index_;
  std::vector<LatticePoint> candidates_;
  std::optional<DecompositionBundle> bundle_;
};

// argmax over the candidate set; ties (1e-12 in log φ) go to the
// lexicographically smallest λ coefficients.
DecodeResult ml_decode(const RealVector& y, const std::vector<double>& h,
                       const Coeffs& a, const std::vector<NestedCode>& codes,
                       double sigma2, DecodeOptions options = {});

// ---------------------------------------------------------------- scaled pair

struct ScaledPairResult {
  double r = 0.0;                // |det M_L / det M_Λ|^{1/n}, HNF bundle
  double r_expected = 0.0;       // c(a₁h₂ - a₂h₁)
  double r_signed = 0.0;         // scalar of M_L = r·M_Λ for the explicit U
  bool equivalent = false;       // (1/r)M_Λ⁻¹M_L integral and unimodular
  double integrality_error = 0.0;
  double det_error = 0.0;
  bool explicit_match = false;   // r_signed == r_expected within 1e-9
  bool explicit_unimodular = false;  // gcd(a₁, c·a₂) = 1
};

// K = 2 with Λ₂ = c·Λ₁. Throws kDegenerate when |a₁h₂ - a₂h₁| < 1e-9.
ScaledPairResult scaled_pair_equivalence(const RealMatrix& generator, std::int64_t c,
                                          const Coeffs& a, const std::vector<double>& h);

// ---------------------------------------------------------------- probes

struct SumLatticeProbe {
  std::vector<RealVector> points;  // q = M_L z, z ∈ [-p, p]^{n(K-1)}
  double min_nonzero_norm = 0.0;   // squared, over z ≠ 0
};

// The lattices must be nested in the first one (Λ_k ⊆ Λ₁); the kernel basis
// comes from the HNF of the integer matrix M₁⁻¹·M. `a` defaults to all ones.
SumLatticeProbe sum_lattice_probe(const std::vector<Lattice>& lattices,
                                  const std::vector<double>& h, int p,
                                  std::optional<Coeffs> a = {},
                                  std::size_t budget = default_enumeration_budget());

struct FlatnessRow {
  std::string lattice;
  int dim = 0;
  double power = 0.0;
  double rho_db = 0.0;
  double sigma2 = 0.0;
  double epsilon = 0.0;
  double vnr = 0.0;
};

// σ² = P/ρ with ρ = 10^{dB/10} and each entry's P; exact flatness factor.
std::vector<FlatnessRow> flatness_comparison(
    const std::vector<CatalogEntry>& entries, const std::vector<double>& rho_db);

// ---------------------------------------------------------------- utility

// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
// concurrency). The first exception is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

std::int64_t gcd_of(const Coeffs& values);

}  // namespace lattheta
