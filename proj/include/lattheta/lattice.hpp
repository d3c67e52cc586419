#pragma once

// Full-rank lattices in Rⁿ: enumeration, minima, quantizer, modulo-lattice
// reduction and nested lattice codes.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lattheta/matrix_kit.hpp"

namespace lattheta {

using Coeffs = std::vector<std::int64_t>;

inline constexpr int kMaxEnumerationDim = 12;
inline constexpr std::size_t kDefaultEnumerationBudget = 10'000'000;

// kDefaultEnumerationBudget unless LATTICE_THETA_BUDGET is set to a positive
// integer.
std::size_t default_enumeration_budget();

// Generator columns are the basis vectors. Immutable after construction.
class Lattice {
 public:
  explicit Lattice(RealMatrix generator, std::string name = {});

  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(generator_.rows()); }
  const RealMatrix& generator() const { return generator_; }
  const RealMatrix& gram() const { return gram_; }
  const RealMatrix& inverse() const { return inverse_; }
  double volume() const { return volume_; }
  bool is_integer() const { return is_integer_; }

  RealVector point(const Coeffs& coeffs) const;
  Lattice scaled(double factor, std::string name = {}) const;

 private:
  std::string name_;
  RealMatrix generator_;
  RealMatrix gram_;
  RealMatrix inverse_;
  double volume_ = 0.0;
  bool is_integer_ = false;
};

struct LatticePoint {
  RealVector coords;
  Coeffs coeffs;

  double norm() const { return coords.squaredNorm(); }
};

// Lexicographic order on coefficient vectors; the tie-break rule used by
// every deterministic selection in the library.
bool coeffs_less(const Coeffs& a, const Coeffs& b);

// All x in Λ with ‖x‖² <= r (plus 1e-9 slack), sorted by norm then
// coefficients. Fincke-Pohst enumeration on the Cholesky factor of the Gram
// matrix.
std::vector<LatticePoint> enumerate_within(
    const Lattice& lattice, double r,
    std::size_t budget = default_enumeration_budget());

// All x in Λ with ‖x - center‖² <= r (plus slack), same ordering rules.
std::vector<LatticePoint> enumerate_near(
    const Lattice& lattice, const RealVector& center, double r,
    std::size_t budget = default_enumeration_budget());

struct MinimalNorm {
  double lambda1;
  std::size_t kissing;
};

MinimalNorm minimal_norm(const Lattice& lattice);

struct SuccessiveMinima {
  std::vector<double> minima;
  std::vector<LatticePoint> vectors;  // independent vectors realizing minima
  bool well_rounded;
};

// Requires dim <= 8.
SuccessiveMinima successive_minima(const Lattice& lattice);

// Nearest lattice point; among equidistant points (within 1e-9) the one with
// lexicographically smallest coefficient vector.
LatticePoint closest_point(const Lattice& lattice, const RealVector& y);

// y - Q_Λ(y).
RealVector mod_lattice(const RealVector& y, const Lattice& lattice);

struct NestedCode {
  Lattice coarse;
  Lattice fine;
  std::vector<LatticePoint> representatives;  // coefficients in fine basis
  double rate;                                // bits per dimension

  std::size_t size() const { return representatives.size(); }
  double max_norm() const;
};

// Integer matrix T with M_coarse = M_fine·T, or throws kNotNested.
IntMatrix sublattice_transform(const Lattice& coarse, const Lattice& fine);

// Coset representatives of Λ_F/Λ_C reduced into the Voronoi cell of Λ_C.
// Throws kNotNested, or kEnumerationBudgetExceeded for index > 10⁶.
NestedCode build_nested_code(const Lattice& coarse, const Lattice& fine);

}  // namespace lattheta
