#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "lattheta/caf.hpp"
#include "lattheta/catalog.hpp"
#include "lattheta/errors.hpp"

namespace lattheta {
namespace {

Lattice integer(int n) { return Lattice(RealMatrix::Identity(n, n), "Z"); }

NestedCode code_over(const Lattice& fine, int k) { return build_nested_code(fine.scaled(k), fine); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kInvalidArgument;
}

TEST(Channel, Deterministic) {
  const auto a = sample_channel(3, 2.0, 0.5, 42);
  const auto b = sample_channel(3, 2.0, 0.5, 42);
  EXPECT_EQ(a.h, b.h);
  EXPECT_DOUBLE_EQ(a.rho, 4.0);
  EXPECT_NE(sample_channel(3, 2.0, 0.5, 43).h, a.h);
  EXPECT_EQ(sample_channel(1, 1.0, 1.0, 0).h.size(), 1u);
}

TEST(Channel, Statistics) {
  double s[2] = {0, 0}, ss[2] = {0, 0};
  const int count = 10000;
  for (int seed = 0; seed < count; ++seed) {
    const auto h = sample_channel(2, 1.0, 1.0, seed).h;
    for (int k = 0; k < 2; ++k) {
      s[k] += h[k];
      ss[k] += h[k] * h[k];
    }
  }
  for (int k = 0; k < 2; ++k) {
    const double mean = s[k] / count;
    EXPECT_LT(std::abs(mean), 0.05);
    EXPECT_LT(std::abs(ss[k] / count - mean * mean - 1.0), 0.1);
  }
}

TEST(Channel, TrialStreamsIndependent) {
  auto a = trial_rng(5, 0), b = trial_rng(5, 1), c = trial_rng(5, 0);
  const auto x = a(), y = b(), z = c();
  EXPECT_NE(x, y);
  EXPECT_EQ(x, z);
}

TEST(Channel, ReceivedSignal) {
  RealVector x1(2), x2(2), zero = RealVector::Zero(2), n(2);
  x1 << 1, 2;
  x2 << -3, 0.5;
  n << 0.1, -0.2;
  EXPECT_EQ(received_signal({x1}, {1.0}, zero), x1);
  EXPECT_EQ(received_signal({zero, zero}, {0.3, 0.7}, n), n);
  EXPECT_EQ(received_signal({x1, x2}, {1.0, 1.0}, zero), x1 + x2);
  EXPECT_EQ(code_of([&] { received_signal({x1, x2}, {1.0}, zero); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { received_signal({x1}, {1.0}, RealVector::Zero(3)); }),
            ErrorCode::kDimensionMismatch);
}

TEST(Equations, MmseAlpha) {
  EXPECT_EQ(mmse_alpha(5.0, {1.0, 1.0}, {1, -1}), 0.0);
  EXPECT_NEAR(mmse_alpha(1.0, {1.0, 1.0}, {1, 1}), 2.0 / 3.0, 1e-15);
  for (double rho : {1e2, 1e4, 1e6}) {
    EXPECT_NEAR(mmse_alpha(rho, {1.0, 1.0}, {1, 1}), 1.0, 1.0 / rho);
  }
}

TEST(Equations, ComputationRate) {
  EXPECT_NEAR(computation_rate(3.0, {1.0}, {1}), 1.0, 1e-14);
  EXPECT_EQ(computation_rate(4.0, {1.0, -1.0}, {1, 1}), 0.0);
  EXPECT_EQ(computation_rate(0.0, {0.3, 2.0}, {1, 2}), 0.0);
}

TEST(Equations, RateScaleInvariance) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> h{g(rng), g(rng), g(rng)};
    const Coeffs a{1, -2, 1};
    const double rho = std::exp(g(rng));
    const double scale = 0.5 + std::abs(g(rng));
    std::vector<double> hs = h;
    for (auto& x : hs) x *= scale;
    EXPECT_NEAR(computation_rate(rho, h, a), computation_rate(rho / (scale * scale), hs, a), 1e-12);
  }
}

TEST(Equations, OptimalCoefficients) {
  // Near ρ = 0 the best unit vector sits on the strongest channel.
  EXPECT_EQ(optimal_coeffs(1e-6, {0.3, -1.2, 0.8}).a, (Coeffs{0, 1, 0}));
  EXPECT_EQ(optimal_coeffs(10.0, {1.0, 0.0}).a, (Coeffs{1, 0}));
  EXPECT_EQ(optimal_coeffs(100.0, {1.0, 1.0}).a, (Coeffs{1, 1}));
  const auto eq = optimal_coeffs(100.0, {-2.0, 1.0});
  EXPECT_EQ(eq.a, (Coeffs{2, -1}));
  EXPECT_TRUE(eq.gcd_flag);
}

TEST(Equations, NeverWorseThanUnitVectors) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    const int K = 2 + t % 3;
    std::vector<double> h(K);
    for (auto& x : h) x = g(rng);
    const double rho = std::pow(10.0, (t % 4) * 0.8);
    const auto eq = optimal_coeffs(rho, h, 4);
    const int first = std::find_if(eq.a.begin(), eq.a.end(), [](auto x) { return x != 0; }) - eq.a.begin();
    EXPECT_GT(eq.a[first], 0);
    for (int i = 0; i < K; ++i) {
      Coeffs e(K, 0);
      e[i] = 1;
      EXPECT_LE(equation_quadratic_form(rho, h, eq.a), equation_quadratic_form(rho, h, e) + 1e-12);
    }
  }
}

TEST(Decomposition, OneDimensional) {
  const auto b = build_decomposition({1, 1}, {integer(1), integer(1)}, {0.4, 0.9}, DecompositionMode::kHnf);
  EXPECT_EQ(b.M.cols(), 2);
  EXPECT_EQ(b.M_L.rows(), 1);
  EXPECT_EQ(b.M_L.cols(), 1);
  EXPECT_NEAR(std::abs(b.M_L(0, 0)), 0.5, 1e-12);
  EXPECT_EQ(b.residual(), 0.0);
}

TEST(Decomposition, BlockTiling) {
  const auto d3 = get("Dn", 3).lattice();
  const auto b = build_decomposition({2, -3, 1}, {d3, d3.scaled(2), d3}, {0.3, 1.1, -0.7},
                                     DecompositionMode::kHnf);
  ASSERT_TRUE(b.U_int.has_value());
  EXPECT_EQ(abs(determinant(*b.U_int)), 1);
  EXPECT_EQ(b.residual(), 0.0);
  const int n = 3, w = b.kernel_dim();
  RealMatrix rebuilt(b.U.rows(), b.U.cols());
  for (int k = 0; k < 3; ++k) {
    rebuilt.block(k * n, 0, n, w) = b.U_blocks[k];
    rebuilt.block(k * n, w, n, n) = b.V_blocks[k];
  }
  EXPECT_EQ(rebuilt, b.U);
  RealMatrix ml = RealMatrix::Zero(n, w);
  for (int k = 0; k < 3; ++k) ml += b.h[k] * b.generators[k] * b.U_blocks[k];
  EXPECT_LT((ml - b.M_L).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((b.U_hat - b.U_inv.topRows(w)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(IntMatrix::from_real(b.U_hat).has_value());
}

TEST(Decomposition, MuAndOmegaRecoverLambda) {
  const auto z2 = integer(2);
  const auto b = build_decomposition({1, 2}, {z2, z2}, {0.6, -0.2}, DecompositionMode::kHnf);
  RealVector x1(2), x2(2);
  x1 << 1, -1;
  x2 << 0, 2;
  const RealVector lambda = x1 + 2 * x2;
  RealVector sum = RealVector::Zero(2);
  for (int k = 0; k < 2; ++k) sum += b.a[k] * b.mu(k, lambda);
  EXPECT_LT((sum - lambda).norm(), 1e-12);
}

TEST(Decomposition, GoldenOrthogonal) {
  const auto g = get("GoldenQ5").lattice();
  const auto b = build_decomposition({1, 1}, {g, g}, {0.8, -0.3}, DecompositionMode::kOrthogonal);
  EXPECT_LT(b.residual(), 1e-9);
  EXPECT_FALSE(IntMatrix::from_real(b.U_hat, 1e-6).has_value());
  EXPECT_EQ(code_of([&] { build_decomposition({1, 1}, {g, g}, {0.8, -0.3}, DecompositionMode::kHnf); }),
            ErrorCode::kNonIntegerLattice);
}

TEST(Decomposition, InvalidTransformRejected) {
  const auto z1 = integer(1);
  RealMatrix u = RealMatrix::Identity(2, 2);
  EXPECT_EQ(code_of([&] { build_decomposition_with_transform({1, 1}, {z1, z1}, {1, 2}, u); }),
            ErrorCode::kInconsistentBundle);
  EXPECT_EQ(code_of([&] { build_decomposition({0, 0}, {z1, z1}, {1, 2}, DecompositionMode::kHnf); }),
            ErrorCode::kInvalidArgument);
}

TEST(CandidateSet, PlaneExample) {
  const auto code = code_over(integer(2), 3);
  EXPECT_NEAR(code.max_norm(), std::sqrt(2.0), 1e-12);
  EXPECT_EQ(candidate_set({1, 1}, {code, code}).size(), 25u);
  const auto single = candidate_set({1, 0}, {code, code});
  for (const auto& p : single) EXPECT_LE(p.norm(), 2.0 + 1e-9);
}

TEST(CandidateSet, ContainsEveryRealizableSum) {
  const auto c1 = code_over(get("A2").lattice(), 3);
  const auto c2 = code_over(get("A2").lattice(), 2);
  for (const Coeffs& a : {Coeffs{1, 1}, Coeffs{2, -1}, Coeffs{0, 3}, Coeffs{-1, 2}}) {
    const TupleIndex index(a, {c1, c2});
    std::set<Coeffs> candidates;
    for (const auto& p : candidate_set(a, {c1, c2})) candidates.insert(p.coeffs);
    for (const auto& [lambda, tuples] : index.groups()) {
      EXPECT_TRUE(candidates.count(lambda));
    }
  }
}

double rel_gap(double log_a, double log_b) { return std::abs(std::expm1(log_a - log_b)); }

TEST(Metric, ThreeFormsAgree) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  const std::vector<Lattice> fines{integer(1), integer(2), get("Dn", 2).lattice()};
  for (int t = 0; t < 30; ++t) {
    const Lattice& fine = fines[t % 3];
    const int k = fine.dim() == 1 ? 5 : 2 + t % 2;
    const auto code = code_over(fine, k);
    Coeffs a{1 + t % 2, -(t % 3)};
    if (a[1] == 0) a[1] = 1;
    const std::vector<double> h{g(rng), g(rng)};
    const std::vector<NestedCode> codes{code, code};
    const TupleIndex index(a, codes);
    const auto bundle = build_decomposition(a, {fine, fine}, h, DecompositionMode::kHnf);
    RealVector y(fine.dim());
    for (int i = 0; i < y.size(); ++i) y(i) = 2 * g(rng);
    const double s2 = 0.05 + std::abs(g(rng));
    for (const auto& [lc, tuples] : index.groups()) {
      const RealVector lambda = index.lambda_lattice().point(lc);
      const double def = log_phi_definition(index, lc, y, h, s2);
      const double dec = log_phi_decomposition(bundle, lambda, y, index.stacked_coefficients(lc), s2);
      const double sum = log_phi_lattice_sum(bundle, index, lambda, y, s2);
      EXPECT_LT(rel_gap(def, dec), 1e-10);
      EXPECT_LT(rel_gap(def, sum), 1e-10);
    }
  }
}

TEST(Metric, InvariantUnderKernelBasisChange) {
  const Lattice z2 = integer(2);
  const auto code = code_over(z2, 3);
  const Coeffs a{2, 1};
  const std::vector<double> h{0.7, -1.3};
  const auto b1 = build_decomposition(a, {z2, z2}, h, DecompositionMode::kHnf);
  RealMatrix w = RealMatrix::Identity(4, 4);
  w(0, 1) = 3;
  w(1, 0) = 1;
  w(1, 1) = 4;  // det [[1,3],[1,4]] = 1
  const auto b2 = build_decomposition_with_transform(a, {z2, z2}, h, b1.U * w);
  EXPECT_EQ(b2.mode, DecompositionMode::kHnf);
  EXPECT_GT((b1.M_L - b2.M_L).cwiseAbs().maxCoeff(), 1e-3);
  const TupleIndex index(a, {code, code});
  RealVector y(2);
  y << 0.4, -1.7;
  for (const auto& [lc, tuples] : index.groups()) {
    const RealVector lambda = index.lambda_lattice().point(lc);
    const auto S = index.stacked_coefficients(lc);
    EXPECT_LT(rel_gap(log_phi_decomposition(b1, lambda, y, S, 0.3),
                      log_phi_decomposition(b2, lambda, y, S, 0.3)),
              1e-12);
    EXPECT_LT(rel_gap(log_phi_lattice_sum(b1, index, lambda, y, 0.3),
                      log_phi_lattice_sum(b2, index, lambda, y, 0.3)),
              1e-12);
  }
}

TEST(Metric, ExactTupleGivesUnitTerm) {
  const auto code = code_over(integer(1), 3);
  const Coeffs a{1, 0};
  const std::vector<double> h{1.0, 0.0};
  const TupleIndex index(a, {code, code_over(integer(1), 1)});
  RealVector y(1);
  y << 1.0;
  EXPECT_NEAR(log_phi_definition(index, {1}, y, h, 0.5), 0.0, 1e-14);
}

TEST(Metric, VanishingNoiseLimit) {
  std::mt19937_64 rng(3);
  const auto code = code_over(integer(1), 3);
  const std::vector<double> h{0.83, 1.41};
  const Coeffs a = optimal_coeffs(10.0, h).a;
  const TupleIndex index(a, {code, code});
  const double s2 = 1e-4;
  const RealVector y = received_signal({code.representatives[2].coords, code.representatives[0].coords},
                                       h, RealVector::Zero(1));
  const RealVector truth = a[0] * code.representatives[2].coords + a[1] * code.representatives[0].coords;
  const Coeffs tc = index.lambda_coeffs(truth);
  EXPECT_GE(log_phi_definition(index, tc, y, h, s2), -1e-12);
  for (const auto& [lc, tuples] : index.groups()) {
    if (lc == tc) continue;
    double best = INFINITY;
    for (const auto& t : tuples) {
      const RealVector r = y - h[0] * index.codeword(0, t[0]) - h[1] * index.codeword(1, t[1]);
      best = std::min(best, r.squaredNorm());
    }
    if (best > 1e-2) EXPECT_LT(log_phi_definition(index, lc, y, h, s2), -40.0);
  }
}

TEST(Decode, IntegerChannelNoiseless) {
  const auto code = code_over(integer(1), 3);
  const std::vector<NestedCode> codes{code, code};
  for (const Coeffs& a : {Coeffs{1, 1}, Coeffs{1, -1}, Coeffs{2, 1}, Coeffs{1, 2}, Coeffs{0, 1}}) {
    const std::vector<double> h(a.begin(), a.end());
    for (auto form : {MetricForm::kDefinition, MetricForm::kDecomposition, MetricForm::kLatticeSum}) {
      MlDecoder dec(a, h, codes, {DecompositionMode::kHnf, form, false});
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
          const RealVector x1 = code.representatives[i].coords, x2 = code.representatives[j].coords;
          const RealVector y = received_signal({x1, x2}, h, RealVector::Zero(1));
          const auto r = dec.decode(y, 0.01);
          EXPECT_LT((r.lambda_hat.coords - (a[0] * x1 + a[1] * x2)).norm(), 1e-12);
          EXPECT_NEAR(r.metric_value, std::exp(r.log_metric), 1e-15);
        }
      }
    }
  }
}

TEST(Decode, SingleUserIsPointDecoding) {
  const auto code = code_over(get("A2").lattice(), 3);
  MlDecoder dec({1}, {1.0}, {code});
  for (const auto& w : code.representatives) {
    const auto r = dec.decode(w.coords, 0.2);
    EXPECT_EQ(r.lambda_hat.coeffs, closest_point(code.fine, w.coords).coeffs);
  }
}

TEST(Decode, ProfileHoldsEveryCandidate) {
  const auto code = code_over(integer(1), 4);
  MlDecoder dec({1, 2}, {0.9, 1.7}, {code, code}, {DecompositionMode::kHnf, MetricForm::kDefinition, true});
  RealVector y(1);
  y << 0.37;
  const auto r = dec.decode(y, 0.1);
  ASSERT_TRUE(r.metric_profile.has_value());
  EXPECT_EQ(r.metric_profile->size(), dec.candidates().size());
  double best = -INFINITY;
  for (const auto& s : *r.metric_profile) best = std::max(best, s.log_phi);
  EXPECT_EQ(best, r.log_metric);
}

TEST(ScaledPairEquivalence, Example) {
  const auto r = scaled_pair_equivalence(RealMatrix::Identity(2, 2), 1, {1, 1}, {0.3, 0.7});
  EXPECT_NEAR(r.r_signed, 0.4, 1e-12);
  EXPECT_NEAR(r.r_expected, 0.4, 1e-12);
  EXPECT_NEAR(r.r, 0.4, 1e-12);
  EXPECT_TRUE(r.equivalent);
  EXPECT_TRUE(r.explicit_match);
}

TEST(ScaledPairEquivalence, Degenerate) {
  EXPECT_EQ(code_of([] { scaled_pair_equivalence(RealMatrix::Identity(2, 2), 1, {1, 1}, {0.5, 0.5}); }),
            ErrorCode::kDegenerate);
}

TEST(ScaledPairEquivalence, RandomTrials) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> box(-5, 5);
  const RealMatrix d3 = *get("Dn", 3).generator;
  for (int t = 0; t < 200; ++t) {
    Coeffs a{box(rng), box(rng)};
    if (gcd_of(a) != 1) continue;
    const auto r = scaled_pair_equivalence(t % 2 ? d3 : RealMatrix::Identity(2, 2), 1 + t % 3, a, {g(rng), g(rng)});
    EXPECT_TRUE(r.equivalent);
    EXPECT_TRUE(r.explicit_match);
    EXPECT_LT(r.integrality_error, 1e-6);
    EXPECT_LT(r.det_error, 1e-6);
  }
}

TEST(Probe, TwoUsersAreDiscrete) {
  const auto z2 = integer(2);
  const std::vector<double> h{0.61, -1.37};
  const double base = sum_lattice_probe({z2, z2}, h, 1).min_nonzero_norm;
  for (int p = 2; p <= 4; ++p) {
    EXPECT_NEAR(sum_lattice_probe({z2, z2}, h, p).min_nonzero_norm, base, 1e-12);
  }
}

TEST(Probe, ThreeUserPointCloud) {
  const auto z2 = integer(2);
  const auto probe = sum_lattice_probe({z2, z2, z2}, {0.3, -1.1, 0.8}, 1);
  EXPECT_LE(probe.points.size(), 81u);
  EXPECT_GT(probe.min_nonzero_norm, 0.0);
  const auto wider = sum_lattice_probe({z2, z2, z2}, {0.3, -1.1, 0.8}, 3);
  EXPECT_LE(wider.min_nonzero_norm, probe.min_nonzero_norm);
  EXPECT_EQ(code_of([&] { sum_lattice_probe({z2, z2, z2}, {0.3, -1.1, 0.8}, 40, {}, 1000); }),
            ErrorCode::kEnumerationBudgetExceeded);
}

TEST(FlatnessComparison, TwentyDbOrderings) {
  const auto dim3 = flatness_comparison({get("Zn", 3), get("Dn", 3), get("Dn_star", 3), get("Lambda4_3")}, {20.0});
  ASSERT_EQ(dim3.size(), 4u);
  for (const auto& r : dim3) {
    if (r.lattice != "Z3") EXPECT_LT(r.epsilon, dim3[0].epsilon);
    if (r.lattice != "D3_star") EXPECT_GT(r.epsilon, dim3[2].epsilon);
    EXPECT_NEAR(r.sigma2, r.power / 100.0, 1e-12);
  }
  const auto dim4 = flatness_comparison({get("Zn", 4), get("Dn", 4), get("Lambda3_4"), get("Lambda4_4")}, {20.0});
  for (const auto& r : dim4) {
    if (r.lattice != "Z4") EXPECT_LT(r.epsilon, dim4[0].epsilon);
    if (r.lattice != "D4") EXPECT_GT(r.epsilon, dim4[1].epsilon);
  }
}

TEST(Utility, ParallelForRunsAllAndRethrows) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) fail(ErrorCode::kDomainError, "x"); }, 3),
               Error);
}

}  // namespace
}  // namespace lattheta
