#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "mewfit/random.hpp"
#include "mewfit/scenarios.hpp"
#include "mewfit/wls_solver.hpp"

using namespace mewfit;

namespace {

struct Instance {
  AdaptedDataset data;
  WeightVector p;
};

// n points with x spread over [0,1] (both ends present) and random weights.
Instance random_instance(Rng& rng, std::size_t n) {
  std::vector<double> x(n), y(n), w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = (static_cast<double>(i) + 0.8 * (rng.uniform() - 0.5) * (i > 0 && i + 1 < n)) / (n - 1);
    y[i] = rng.uniform();
    w[i] = 0.05 + rng.uniform();
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return {AdaptedDataset(std::move(x), std::move(y)), WeightVector(std::move(w))};
}

double objective(const Instance& in, std::span<const double> a) {
  double s = 0.0;
  for (std::size_t i = 0; i < in.data.size(); ++i) {
    double f = 0.0;
    for (std::size_t k = a.size(); k-- > 0;) f = f * in.data.x()[i] + a[k];
    const double e = f - in.data.y()[i];
    s += in.p[i] * e * e;
  }
  return s;
}

// Brute-force minimizer of sum p (f(x) - y)^2. The search runs over the
// polynomial's values at fixed nodes (a well-conditioned parametrization)
// on a shrinking 11^(m+1) grid, then expands the Lagrange form into monomial
// coefficients. No normal equations are involved.
std::vector<double> brute_force_fit(const Instance& in, int m) {
  const std::size_t d = static_cast<std::size_t>(m) + 1;
  std::vector<double> nodes(d);
  for (std::size_t j = 0; j < d; ++j) nodes[j] = d == 1 ? 0.5 : 0.5 - 0.5 * std::cos(M_PI * j / (d - 1));
  // Monomial coefficients of each Lagrange basis polynomial.
  std::vector<std::vector<double>> L(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> c{1.0};
    for (std::size_t q = 0; q < d; ++q) {
      if (q == j) continue;
      std::vector<double> next(c.size() + 1, 0.0);
      for (std::size_t k = 0; k < c.size(); ++k) {
        next[k] -= c[k] * nodes[q] / (nodes[j] - nodes[q]);
        next[k + 1] += c[k] / (nodes[j] - nodes[q]);
      }
      c = std::move(next);
    }
    L[j] = std::move(c);
  }
  auto to_coeffs = [&](const std::vector<double>& v) {
    std::vector<double> a(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < d; ++k) a[k] += v[j] * L[j][k];
    }
    return a;
  };

  std::vector<double> center(d, 0.5);
  double half = 4.0;
  std::vector<double> best = center;
  while (half > 1e-11) {
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<int> idx(d, 0);
    std::vector<double> v(d);
    for (;;) {
      for (std::size_t j = 0; j < d; ++j) v[j] = center[j] + half * (idx[j] - 5) / 5.0;
      const double val = objective(in, to_coeffs(v));
      if (val < best_val) {
        best_val = val;
        best = v;
      }
      std::size_t j = 0;
      while (j < d && ++idx[j] == 11) idx[j++] = 0;
      if (j == d) break;
    }
    center = best;
    half /= 4.0;
  }
  return to_coeffs(best);
}

}  // namespace

TEST(Assemble, TwoPointHandComputation) {
  const AdaptedDataset d({0.0, 1.0}, {0.0, 1.0});
  const auto sys = assemble(d, WeightVector::uniform(2), 1);
  ASSERT_EQ(sys.dim, 2u);
  EXPECT_DOUBLE_EQ(sys.G(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(sys.G(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(sys.G(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(sys.G(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(sys.rhs[0], 0.5);
  EXPECT_DOUBLE_EQ(sys.rhs[1], 0.5);
}

TEST(Assemble, PointMassDegreeZero) {
  const AdaptedDataset d({0.0, 0.4, 1.0}, {0.2, 0.7, 1.0});
  const auto sys = assemble(d, WeightVector::point_mass(3, 1), 0);
  ASSERT_EQ(sys.dim, 1u);
  EXPECT_EQ(sys.G(0, 0), 1.0);
  EXPECT_EQ(sys.rhs[0], 0.7);
}

TEST(Assemble, Errors) {
  const AdaptedDataset d({0.0, 1.0}, {0.0, 1.0});
  EXPECT_THROW(assemble(d, WeightVector::uniform(2), 2), DegreeTooHigh);
  EXPECT_THROW(assemble(d, WeightVector::uniform(3), 1), LengthMismatch);
  EXPECT_THROW(assemble(d, WeightVector::uniform(2), -1), InvalidInput);
  EXPECT_THROW(fit_coefficients(d, WeightVector::uniform(2), 3), DegreeTooHigh);
  EXPECT_THROW(fit_coefficients(d, WeightVector::uniform(3), 3), LengthMismatch);
}

TEST(Assemble, GramIsSymmetricAndPositive) {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    const auto in = random_instance(rng, 5 + rng.below(30));
    const int m = static_cast<int>(rng.below(5));
    const auto sys = assemble(in.data, in.p, m);
    for (std::size_t k = 0; k < sys.dim; ++k) {
      EXPECT_GT(sys.G(k, k), 0.0);
      for (std::size_t s = 0; s < sys.dim; ++s) EXPECT_NEAR(sys.G(k, s), sys.G(s, k), 1e-14);
    }
    EXPECT_FALSE(detail::cholesky(sys, kCholeskyPivotTolerance).empty());
  }
}

TEST(Solve, LineThroughTwoPoints) {
  NormalSystem sys{2, {1.0, 0.5, 0.5, 0.5}, {0.5, 0.5}};
  const auto a = solve(sys);
  EXPECT_NEAR(a[0], 0.0, 1e-15);
  EXPECT_NEAR(a[1], 1.0, 1e-15);
}

TEST(Solve, IdentitySystem) {
  NormalSystem sys{3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0.3, -2.0, 7.5}};
  const auto a = solve(sys);
  EXPECT_EQ(a, (std::vector<double>{0.3, -2.0, 7.5}));
}

TEST(Solve, PearsonUniformSystem) {
  const auto data = adapt(pearson_data());
  const auto a = solve(assemble(data, WeightVector::uniform(data.size()), 1));
  EXPECT_NEAR(a[0], 0.96845, 1e-4);
  EXPECT_NEAR(a[1], -0.90747, 1e-4);
}

TEST(Solve, SingularSupportThrows) {
  const AdaptedDataset d({0.0, 0.5, 1.0}, {0.0, 0.5, 1.0});
  EXPECT_THROW(fit_coefficients(d, WeightVector::point_mass(3, 1), 1), SingularSystem);
  EXPECT_THROW(fit_coefficients(d, WeightVector({0.5, 0.5, 0.0}), 2), SingularSystem);
  NormalSystem zero{2, {0, 0, 0, 0}, {1, 1}};
  EXPECT_THROW(solve(zero), SingularSystem);
}

// Cholesky trips on a tiny relative pivot; full pivoting still solves.
TEST(Solve, FallsBackToFullPivoting) {
  const double eps = 5e-14;
  NormalSystem sys{2, {1.0, 1.0, 1.0, 1.0 + eps}, {2.0, 2.0 + eps}};
  EXPECT_TRUE(detail::cholesky(sys, kCholeskyPivotTolerance).empty());
  const auto a = solve(sys);
  const auto r = detail::residual(sys, a);
  EXPECT_LE(detail::inf_norm(r), 1e-10 * (1.0 + detail::inf_norm(sys.rhs)));
}

TEST(Solve, ResidualBoundOnRandomSystems) {
  Rng rng(41);
  for (int t = 0; t < 200; ++t) {
    const auto in = random_instance(rng, 8 + rng.below(60));
    const int m = static_cast<int>(rng.below(8));
    const auto sys = assemble(in.data, in.p, m);
    const auto a = solve(sys);
    EXPECT_LE(detail::inf_norm(detail::residual(sys, a)), 1e-10 * (1.0 + detail::inf_norm(sys.rhs)));
  }
}

TEST(Solve, OrthogonalityAtSolution) {
  Rng rng(43);
  for (int t = 0; t < 200; ++t) {
    const auto in = random_instance(rng, 5 + rng.below(96));
    const int m = static_cast<int>(rng.below(std::min<std::size_t>(8, in.data.size())));
    const auto f = fit_coefficients(in.data, in.p, m);
    const auto e = residuals(f, in.data);
    for (int k = 0; k <= m; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < e.size(); ++i) s += in.p[i] * e[i] * std::pow(in.data.x()[i], k);
      EXPECT_NEAR(s, 0.0, 1e-10) << "t=" << t << " m=" << m << " k=" << k;
    }
  }
}

TEST(Solve, WeightScalingLeavesCoefficientsUnchanged) {
  Rng rng(47);
  for (int t = 0; t < 50; ++t) {
    const auto in = random_instance(rng, 6 + rng.below(20));
    const std::size_t m = rng.below(4);
    std::vector<double> scaled(in.p.values().begin(), in.p.values().end());
    const double c = 0.01 + 100.0 * rng.uniform();
    for (auto& v : scaled) v *= c;
    const auto a = solve(detail::assemble_powers(in.data.x(), in.data.y(), in.p.values(), m));
    const auto b = solve(detail::assemble_powers(in.data.x(), in.data.y(), scaled, m));
    for (std::size_t k = 0; k <= m; ++k) EXPECT_NEAR(a[k], b[k], 1e-9 * (1.0 + std::abs(a[k])));
  }
}

TEST(Solve, MatchesBruteForceMinimizer) {
  Rng rng(53);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 2 + rng.below(7);
    const int m = static_cast<int>(rng.below(std::min<std::size_t>(4, n)));
    const auto in = random_instance(rng, n);
    const auto a = fit_coefficients(in.data, in.p, m);
    const auto oracle = brute_force_fit(in, m);
    for (int k = 0; k <= m; ++k) {
      EXPECT_NEAR(a[k], oracle[k], 1e-6) << "t=" << t << " n=" << n << " m=" << m << " k=" << k;
    }
  }
}

TEST(ShiftedBasis, ConversionIsExactOnKnownPolynomial) {
  // (2x-1)^2 = 4x^2 - 4x + 1; 3 + 2(2x-1) = 1 + 4x.
  EXPECT_EQ(detail::shifted_to_monomial(std::vector<double>{0, 0, 1}), (std::vector<double>{1, -4, 4}));
  EXPECT_EQ(detail::shifted_to_monomial(std::vector<double>{3, 2}), (std::vector<double>{1, 4}));
}

TEST(ShiftedBasis, AgreesWithMonomialAssembly) {
  Rng rng(59);
  for (int t = 0; t < 50; ++t) {
    const auto in = random_instance(rng, 10 + rng.below(30));
    const std::size_t m = 2 + rng.below(3);
    const auto mono = solve(detail::assemble_powers(in.data.x(), in.data.y(), in.p.values(), m));
    const auto shifted = fit_coefficients(in.data, in.p, static_cast<int>(m));
    for (std::size_t k = 0; k <= m; ++k) EXPECT_NEAR(mono[k], shifted[k], 1e-8 * (1.0 + std::abs(mono[k])));
  }
}

// Degree-7 solve with weight only on uncorrupted samples of the shifted
// Legendre polynomial recovers its coefficients.
TEST(Solve, LegendreCoefficientsFromCleanSupport) {
  const auto raw = legendre_signal_data(kDefaultSeed);
  const auto data = adapt(raw);
  std::vector<double> w(raw.size(), 0.0);
  std::size_t clean = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw.y()[i] == legendre7(raw.x()[i])) {
      w[i] = 1.0;
      ++clean;
    }
  }
  ASSERT_EQ(clean, 25u);
  for (auto& v : w) v /= static_cast<double>(clean);
  const auto F = unscale(fit_coefficients(data, WeightVector(w), 7), data.scale());
  for (std::size_t k = 0; k < kLegendre7.size(); ++k) EXPECT_NEAR(F[k], kLegendre7[k], 0.1) << "k=" << k;
}
