#include <gtest/gtest.h>

#include <cmath>

#include "lattheta/catalog.hpp"
#include "lattheta/errors.hpp"

namespace lattheta {
namespace {

TEST(Catalog, PowerAndCodebookSize) {
  const auto e = get("Lambda4_4");
  EXPECT_EQ(e.lambda1, 5.0);
  EXPECT_EQ(e.volume, 20.0);
  EXPECT_EQ(e.power_P, 20.0);
  EXPECT_EQ(e.codebook_size, 2401);
}

TEST(Catalog, Hexagonal) {
  const auto e = get("A2");
  EXPECT_EQ(e.lambda1, 1.0);
  EXPECT_NEAR(e.volume, std::sqrt(0.75), 1e-15);
  EXPECT_NEAR(e.lattice().volume(), e.volume, 1e-12);
}

TEST(Catalog, IntegerPowers) {
  const auto e = get("Zn", 3);
  EXPECT_EQ(e.power_P, 4.0);
  EXPECT_EQ(e.codebook_size, 343);
  EXPECT_FALSE(get("Zn", 5).power_P.has_value());
}

TEST(Catalog, GoldenVolume) {
  EXPECT_NEAR(get("GoldenQ5").lattice().volume(), std::sqrt(5.0), 1e-12);
}

TEST(Catalog, NoGenerator) {
  for (const char* name : {"K12", "Leech"}) {
    const auto e = get(name);
    EXPECT_FALSE(e.generator.has_value());
    try {
      e.lattice();
      FAIL();
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), ErrorCode::kGeneratorUnavailable);
    }
  }
}

TEST(Catalog, UnknownNames) {
  for (const char* name : {"E7", "Zx", "", "D3_stars"}) {
    try {
      resolve(name);
      FAIL() << name;
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), ErrorCode::kUnknownLattice);
    }
  }
  EXPECT_THROW(get("Zn"), Error);
  EXPECT_THROW(get("E8", 7), Error);
}

TEST(Catalog, Shorthands) {
  EXPECT_EQ(resolve("Z3").dim, 3);
  EXPECT_EQ(resolve("D4").family, "Dn");
  EXPECT_EQ(resolve("D3_star").volume, 4.0);
  EXPECT_EQ(resolve("Zn", 7).dim, 7);
}

TEST(Catalog, GeneratorEntriesMatchListedInvariants) {
  for (const auto& e : list_catalog()) {
    if (!e.generator) continue;
    const Lattice l = e.lattice();
    EXPECT_NEAR(l.volume(), e.volume, 1e-9) << e.name;
    EXPECT_NEAR(minimal_norm(l).lambda1, e.lambda1, 1e-9) << e.name;
  }
}

TEST(Catalog, Validation) {
  for (const auto& v : validate_catalog()) {
    EXPECT_TRUE(v.passed) << v.name;
    if (v.has_generator && (v.name == "D3" || v.name == "E8" || v.name == "Z1")) {
      EXPECT_EQ(v.coefficients_ok, true) << v.name;
    }
  }
}

TEST(Catalog, CoefficientChecks) {
  const auto z1 = check_theta_coefficients(get("Zn", 1), 10);
  EXPECT_EQ(z1.enumerated, (std::vector<std::uint64_t>{1, 2, 0, 0, 2, 0, 0, 0, 0, 2, 0}));
  const auto e8 = check_theta_coefficients(get("E8"), 4);
  EXPECT_EQ(e8.enumerated[2], 240u);
  EXPECT_EQ(e8.closed_form[2], 240);
  EXPECT_TRUE(e8.match);
  EXPECT_THROW(check_theta_coefficients(get("Lambda4_3"), 4), Error);
}

}  // namespace
}  // namespace lattheta
