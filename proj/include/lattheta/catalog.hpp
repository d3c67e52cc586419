#pragma once

// Built-in named lattices with their reference attributes.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lattheta/lattice.hpp"
#include "lattheta/theta.hpp"

namespace lattheta {

struct CatalogEntry {
  std::string name;    // e.g. "Z3", "D4_star", "E8"
  std::string family;  // e.g. "Zn", "Dn_star", "E8"
  int dim = 0;
  std::optional<RealMatrix> generator;
  double lambda1 = 0.0;
  double volume = 0.0;
  std::optional<ThetaForm> theta_form;
  std::optional<double> power_P;
  std::optional<std::int64_t> codebook_size;

  // Throws kGeneratorUnavailable for entries without a generator.
  Lattice lattice() const;
};

// Families: Zn, Dn, Dn_star (n required), A2, A3, E8, K12, Leech, Lambda4_3,
// Lambda3_4, Lambda4_4, GoldenQ5. Throws kUnknownLattice.
CatalogEntry get(std::string_view family, std::optional<int> n = {});

// Accepts a family name or a dimensioned shorthand: "Z3", "D4", "D3_star".
CatalogEntry resolve(std::string_view name, std::optional<int> n = {});

// Default entries, including the dimension 3 and 4 codebook lattices.
std::vector<CatalogEntry> list_catalog();

struct CoefficientCheck {
  int max_norm = 0;
  std::vector<std::uint64_t> enumerated;  // Ω(k), k = 0..max_norm
  std::vector<BigInt> closed_form;        // c_k, k = 0..max_norm
  bool non_integer_norm = false;          // an enumerated norm was not integral
  bool match = false;
};

// Enumerated theta coefficients against the closed-form expansion.
// Requires a generator and a theta form.
CoefficientCheck check_theta_coefficients(const CatalogEntry& entry,
                                          int max_norm);

struct CatalogValidation {
  std::string name;
  bool has_generator = false;
  std::optional<double> lambda1_found;
  std::optional<double> volume_found;
  bool lambda1_ok = true;
  bool volume_ok = true;
  std::optional<bool> coefficients_ok;
  bool passed = true;
};

// Cross-checks λ₁, volume and (to norm 20) theta coefficients per entry.
std::vector<CatalogValidation> validate_catalog();

}  // namespace lattheta
