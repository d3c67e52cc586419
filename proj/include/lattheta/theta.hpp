#pragma once

// Theta series: exact enumeration, Jacobi theta closed forms, the
// volume-based approximation Θᴬ, lattice Gaussian sums and flatness factors.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "lattheta/lattice.hpp"

namespace lattheta {

struct CatalogEntry;

// Closed-form theta series identifiers.
enum class ThetaForm {
  kInteger,           // θ₃ⁿ
  kCheckerboard,      // ½(θ₃ⁿ + θ₄ⁿ)
  kCheckerboardDual,  // θ₂(q⁴)ⁿ + θ₃(q⁴)ⁿ, the 2·Dₙ* scaling
  kHexagonal,         // θ₂(q)θ₂(q³) + θ₃(q)θ₃(q³)
  kGosset,            // ½(θ₂⁸ + θ₃⁸ + θ₄⁸)
  kCoxeterTodd,
  kLeech,
};

std::string_view to_string(ThetaForm form);
ThetaForm theta_form_from_string(std::string_view name);

struct ThetaTerm {
  double norm;
  std::uint64_t count;
};

// Ω_Λ(r) for 0 < r <= r_max, sorted by norm. The constant term 1 is implied
// when includes_origin is set.
struct ThetaSeries {
  std::vector<ThetaTerm> terms;
  double r_max = 0.0;
  bool includes_origin = true;

  double evaluate(double q) const;
  std::optional<double> lambda1() const;
  std::uint64_t kissing() const;
  // Count at `norm` (matched within 1e-9), zero if absent.
  std::uint64_t count_at(double norm) const;
};

// Exact series truncated at r_max, norms bucketed within 1e-9.
ThetaSeries theta_exact(const Lattice& lattice, double r_max,
                        std::size_t budget = default_enumeration_budget());

// Θ_Λ(q) by enumeration, truncated once the estimated tail falls below
// 1e-13 relative. Sums over the dual lattice via Poisson summation when that
// side needs fewer points (q close to 1).
double theta_exact_value(const Lattice& lattice, double q);

// θ₂, θ₃ or θ₄ at nome q ∈ [0, 1), summed until terms drop below tol
// relative to the running sum.
double jacobi_theta(int kind, double q, double tol = 1e-15);

double theta_closed_form(ThetaForm form, int n, double q);
double theta_closed_form(const CatalogEntry& entry, double q);

// Exact integer coefficients c_k of q^k, k = 0..max_norm, expanded from the
// closed form. Throws kUnknownForm if a coefficient is not integral.
std::vector<BigInt> closed_form_coefficients(ThetaForm form, int n,
                                             int max_norm);

// Γ(s, x) for s = twice_s / 2 > 0, built upward from Γ(1, x) = e^{-x} or
// Γ(½, x) = √π·erfc(√x) with Γ(s+1, x) = s·Γ(s, x) + xˢe^{-x}.
double upper_incomplete_gamma_half(int twice_s, double x);

inline double nome_from_sigma2(double sigma2) {
  return std::exp(-1.0 / (2.0 * sigma2));
}

struct ThetaApproxResult {
  double value;
  double q;
  std::optional<double> sigma2;
  int n;
  double lambda1;
  double volume;
};

// Θᴬ(q) = (1 - q^λ₁) - log(q)·λ₁^{n/2+1}·π^{n/2} / (Γ(n/2+1)·vol)
//         · ∫₁^∞ t^{n/2} q^{λ₁t} dt,
// with the integral evaluated as Γ(n/2+1, β)/β^{n/2+1}, β = -λ₁·log q.
ThetaApproxResult theta_approx(int n, double lambda1, double volume, double q);
ThetaApproxResult theta_approx(const Lattice& lattice, double q);
ThetaApproxResult theta_approx_sigma2(int n, double lambda1, double volume,
                                      double sigma2);

// Σ_{x ∈ Λ} (2πσ²)^{-n/2} exp(-‖x + y‖²/(2σ²)). With r_max given the sum
// runs over ‖x + y‖² <= r_max; otherwise y is first reduced modulo Λ and the
// radius chosen so the estimated tail is below 1e-12 of the retained sum
// (primal or Poisson-dual side, whichever is cheaper).
double lattice_gaussian(const Lattice& lattice, const RealVector& y,
                        double sigma2, std::optional<double> r_max = {});

enum class FlatnessMode { kExact, kApprox };

std::string_view to_string(FlatnessMode mode);

struct FlatnessPoint {
  double sigma2;
  double epsilon;
  double vnr;
  double theta;
  FlatnessMode mode;
};

// γ_Λ(σ²) = vol^{2/n} / (2πσ²).
double volume_to_noise_ratio(int n, double volume, double sigma2);

// ε = γ^{n/2}·Θ - 1 with a caller-supplied theta value.
FlatnessPoint flatness_from_theta(int n, double volume, double sigma2,
                                  double theta, FlatnessMode mode);

FlatnessPoint flatness_factor(const Lattice& lattice, double sigma2,
                              FlatnessMode mode);

// 1 + κ·q^λ₁.
double truncated_sum_baseline(double lambda1, std::uint64_t kissing, double q);
double truncated_sum_baseline(const Lattice& lattice, double q);
// λ₁ and κ read from the closed form when present.
double truncated_sum_baseline(const CatalogEntry& entry, double q);

}  // namespace lattheta
