#include <gtest/gtest.h>

#include <cmath>

#include "lattheta/catalog.hpp"
#include "lattheta/theta.hpp"

namespace lattheta {
namespace {

// Approximate vs exact flatness, compared through Θ = (1 + ε)/γ^{n/2}.
TEST(FlatnessProperty, ApproxWithinTenPercentUpToDimFour) {
  for (const auto& e : list_catalog()) {
    if (e.dim > 4) continue;
    const Lattice l = e.lattice();
    double worst = 0.0, at = 0.0;
    for (int i = 0; i <= 35; ++i) {
      const double s2 = 0.5 + 0.1 * i;
      const auto exact = flatness_factor(l, s2, FlatnessMode::kExact);
      const auto approx = flatness_factor(l, s2, FlatnessMode::kApprox);
      const double dev = std::abs(approx.theta - exact.theta) / exact.theta;
      if (dev > worst) {
        worst = dev;
        at = s2;
      }
    }
    EXPECT_LT(worst, 0.10) << e.name << " worst at sigma2=" << at;
  }
}

TEST(CoefficientProperty, GeneratorAndFormAgreeToNormTwenty) {
  for (const auto& e : list_catalog()) {
    if (!e.generator || !e.theta_form) continue;
    EXPECT_TRUE(check_theta_coefficients(e, 20).match) << e.name;
  }
}

}  // namespace
}  // namespace lattheta
