#include "lattheta/catalog.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "lattheta/errors.hpp"

namespace lattheta {
namespace {

RealMatrix from_rows(int n, std::initializer_list<double> row_major) {
  RealMatrix m(n, n);
  auto it = row_major.begin();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) m(r, c) = *it++;
  }
  return m;
}

int require_dim(std::string_view family, std::optional<int> n, int min_dim) {
  if (!n) {
    fail(ErrorCode::kUnknownLattice,
         "lattice family '" + std::string(family) + "' needs a dimension");
  }
  if (*n < min_dim) {
    fail(ErrorCode::kUnknownLattice, "lattice family '" + std::string(family) +
                                         "' needs dimension >= " +
                                         std::to_string(min_dim));
  }
  return *n;
}

void set_codebook_power(CatalogEntry& e, double power) {
  e.power_P = power;
  if (e.dim == 3) e.codebook_size = 343;
  if (e.dim == 4) e.codebook_size = 2401;
}

CatalogEntry integer_lattice(int n) {
  CatalogEntry e{"Z" + std::to_string(n), "Zn", n, RealMatrix::Identity(n, n),
                 1.0, 1.0, ThetaForm::kInteger, {}, {}};
  if (n == 3 || n == 4) set_codebook_power(e, 4.0);
  return e;
}

// Columns -e₁-e₂, e₁-e₂, then e_{j-1}-e_j.
CatalogEntry checkerboard(int n) {
  RealMatrix g = RealMatrix::Zero(n, n);
  g(0, 0) = -1.0;
  g(1, 0) = -1.0;
  g(0, 1) = 1.0;
  g(1, 1) = -1.0;
  for (int j = 2; j < n; ++j) {
    g(j - 1, j) = 1.0;
    g(j, j) = -1.0;
  }
  CatalogEntry e{"D" + std::to_string(n), "Dn", n, g, 2.0, 2.0,
                 ThetaForm::kCheckerboard, {}, {}};
  if (n == 3 || n == 4) set_codebook_power(e, 8.0);
  return e;
}

// 2·Dₙ*: columns 2e₁, …, 2e_{n-1} and the all-ones vector.
CatalogEntry checkerboard_dual(int n) {
  RealMatrix g = 2.0 * RealMatrix::Identity(n, n);
  g.col(n - 1).setOnes();
  CatalogEntry e{"D" + std::to_string(n) + "_star", "Dn_star", n, g,
                 static_cast<double>(std::min(n, 4)), std::pow(2.0, n - 1),
                 ThetaForm::kCheckerboardDual, {}, {}};
  if (n == 3) set_codebook_power(e, 50.0 / 3.0);
  return e;
}

CatalogEntry gosset() {
  RealMatrix g = RealMatrix::Zero(8, 8);
  g(0, 0) = 2.0;
  for (int j = 1; j < 7; ++j) {
    g(j - 1, j) = -1.0;
    g(j, j) = 1.0;
  }
  g.col(7).setConstant(0.5);
  return CatalogEntry{"E8", "E8", 8, g, 2.0, 1.0, ThetaForm::kGosset, {}, {}};
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

Lattice CatalogEntry::lattice() const {
  if (!generator) {
    fail(ErrorCode::kGeneratorUnavailable,
         "lattice '" + name + "' has no generator matrix");
  }
  return Lattice(*generator, name);
}

CatalogEntry get(std::string_view family, std::optional<int> n) {
  auto check_fixed = [&](int dim) {
    if (n && *n != dim) {
      fail(ErrorCode::kUnknownLattice, std::string(family) + " has dimension " +
                                           std::to_string(dim));
    }
  };
  if (family == "Zn") return integer_lattice(require_dim(family, n, 1));
  if (family == "Dn") return checkerboard(require_dim(family, n, 2));
  if (family == "Dn_star") return checkerboard_dual(require_dim(family, n, 2));
  if (family == "A2") {
    check_fixed(2);
    return CatalogEntry{"A2", "A2", 2,
                        from_rows(2, {1.0, 0.5, 0.0, std::sqrt(3.0) / 2.0}),
                        1.0, std::sqrt(0.75), ThetaForm::kHexagonal, {}, {}};
  }
  if (family == "A3") {
    check_fixed(3);
    CatalogEntry e = checkerboard(3);
    e.name = e.family = "A3";
    e.power_P.reset();
    e.codebook_size.reset();
    return e;
  }
  if (family == "E8") {
    check_fixed(8);
    return gosset();
  }
  if (family == "K12") {
    check_fixed(12);
    return CatalogEntry{"K12", "K12", 12, {}, 4.0, 27.0,
                        ThetaForm::kCoxeterTodd, {}, {}};
  }
  if (family == "Leech") {
    check_fixed(24);
    return CatalogEntry{"Leech", "Leech", 24, {}, 4.0, 1.0, ThetaForm::kLeech,
                        {}, {}};
  }
  if (family == "Lambda4_3") {
    check_fixed(3);
    CatalogEntry e{"Lambda4_3", "Lambda4_3", 3,
                   from_rows(3, {2, 0, 0, 1, -2, 1, 0, -1, -2}), 5.0, 10.0,
                   {}, {}, {}};
    set_codebook_power(e, 20.0);
    return e;
  }
  if (family == "Lambda3_4") {
    check_fixed(4);
    CatalogEntry e{"Lambda3_4", "Lambda3_4", 4,
                   from_rows(4, {1, 1, -1, 1, 1, -1, 1, 1, -1, 0, 0, 1, 0, 1, 1, 0}),
                   3.0, 8.0, {}, {}, {}};
    set_codebook_power(e, 12.0);
    return e;
  }
  if (family == "Lambda4_4") {
    check_fixed(4);
    CatalogEntry e{"Lambda4_4", "Lambda4_4", 4,
                   from_rows(4, {-2, 0, 0, 0, 0, 0, 0, -2, 1, 1, -2, 1, 0, 2, 1, 0}),
                   5.0, 20.0, {}, {}, {}};
    set_codebook_power(e, 20.0);
    return e;
  }
  if (family == "GoldenQ5") {
    check_fixed(2);
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double phi_bar = (1.0 - std::sqrt(5.0)) / 2.0;
    return CatalogEntry{"GoldenQ5", "GoldenQ5", 2,
                        from_rows(2, {1.0, phi, 1.0, phi_bar}), 2.0,
                        std::sqrt(5.0), {}, {}, {}};
  }
  fail(ErrorCode::kUnknownLattice, "unknown lattice '" + std::string(family) + "'");
}

CatalogEntry resolve(std::string_view name, std::optional<int> n) {
  for (std::string_view fam : {"Zn", "Dn", "Dn_star", "A2", "A3", "E8", "K12",
                               "Leech", "Lambda4_3", "Lambda3_4", "Lambda4_4",
                               "GoldenQ5"}) {
    if (name == fam) return get(fam, n);
  }
  // Shorthand Z<n>, D<n>, D<n>_star (case-insensitive prefix letter).
  std::string s = lower(name);
  std::string_view family;
  std::string digits;
  if (s.size() >= 2 && s[0] == 'z') {
    family = "Zn";
    digits = s.substr(1);
  } else if (s.size() >= 2 && s[0] == 'd') {
    const auto star = s.find("_star");
    if (star != std::string::npos && star + 5 == s.size()) {
      family = "Dn_star";
      digits = s.substr(1, star - 1);
    } else {
      family = "Dn";
      digits = s.substr(1);
    }
  }
  const bool numeric = !digits.empty() && digits.size() <= 3 &&
                       digits.find_first_not_of("0123456789") == std::string::npos;
  if (family.empty() || !numeric) {
    fail(ErrorCode::kUnknownLattice, "unknown lattice '" + std::string(name) + "'");
  }
  const int dim = std::stoi(digits);
  if (n && *n != dim) {
    fail(ErrorCode::kUnknownLattice,
         "lattice '" + std::string(name) + "' conflicts with requested dimension");
  }
  return get(family, dim);
}

std::vector<CatalogEntry> list_catalog() {
  return {get("Zn", 1),        get("Zn", 2),        get("Zn", 3),
          get("Zn", 4),        get("Dn", 3),        get("Dn", 4),
          get("Dn_star", 3),   get("Dn_star", 4),   get("A2"),
          get("A3"),           get("E8"),           get("K12"),
          get("Leech"),        get("Lambda4_3"),    get("Lambda3_4"),
          get("Lambda4_4"),    get("GoldenQ5")};
}

CoefficientCheck check_theta_coefficients(const CatalogEntry& entry,
                                          int max_norm) {
  if (!entry.theta_form) {
    fail(ErrorCode::kUnknownForm, "lattice '" + entry.name + "' has no theta form");
  }
  CoefficientCheck out;
  out.max_norm = max_norm;
  out.closed_form = closed_form_coefficients(*entry.theta_form, entry.dim, max_norm);
  out.enumerated.assign(static_cast<std::size_t>(max_norm) + 1, 0);
  const auto series = theta_exact(entry.lattice(), max_norm + 0.5);
  if (series.includes_origin) out.enumerated[0] = 1;
  for (const auto& term : series.terms) {
    const double k = std::round(term.norm);
    if (std::abs(term.norm - k) > 1e-9 * std::max(1.0, k)) {
      out.non_integer_norm = true;
      continue;
    }
    if (k >= 0 && k <= max_norm) out.enumerated[static_cast<std::size_t>(k)] += term.count;
  }
  out.match = !out.non_integer_norm;
  for (int k = 0; k <= max_norm && out.match; ++k) {
    out.match = BigInt(out.enumerated[k]) == out.closed_form[k];
  }
  return out;
}

std::vector<CatalogValidation> validate_catalog() {
  std::vector<CatalogValidation> report;
  for (const auto& entry : list_catalog()) {
    CatalogValidation v;
    v.name = entry.name;
    v.has_generator = entry.generator.has_value();
    if (v.has_generator) {
      const Lattice lattice = entry.lattice();
      v.lambda1_found = minimal_norm(lattice).lambda1;
      v.volume_found = lattice.volume();
      v.lambda1_ok = std::abs(*v.lambda1_found - entry.lambda1) <= 1e-9;
      v.volume_ok = std::abs(*v.volume_found - entry.volume) <= 1e-9;
      if (entry.theta_form) {
        v.coefficients_ok = check_theta_coefficients(entry, 20).match;
      }
    } else if (entry.theta_form) {
      // No generator: confirm λ₁ against the first nonzero closed-form term.
      const auto coeffs = closed_form_coefficients(
          *entry.theta_form, entry.dim,
          static_cast<int>(std::llround(entry.lambda1)));
      int first = 0;
      for (int k = 1; k < static_cast<int>(coeffs.size()); ++k) {
        if (coeffs[k] != 0) {
          first = k;
          break;
        }
      }
      v.lambda1_found = first;
      v.lambda1_ok = first == std::llround(entry.lambda1);
    }
    v.passed = v.lambda1_ok && v.volume_ok && v.coefficients_ok.value_or(true);
    report.push_back(std::move(v));
  }
  return report;
}

}  // namespace lattheta
