#pragma once
// Weighted polynomial least squares with fixed weights: assembles and solves
//
//   sum_s ( sum_i p_i x_i^(k+s) ) a_s = sum_i p_i y_i x_i^k,   k = 0..m
//
// Systems are tiny (m rarely exceeds 10), so the solver favors robustness:
// Cholesky with a relative pivot test, full-pivot elimination as fallback and
// one step of iterative refinement.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "mewfit/core_model.hpp"
#include "mewfit/errors.hpp"

namespace mewfit {

struct NormalSystem {
  std::size_t dim = 0;
  std::vector<double> gram;  // row-major dim x dim
  std::vector<double> rhs;

  double& G(std::size_t k, std::size_t s) { return gram[k * dim + s]; }
  double G(std::size_t k, std::size_t s) const { return gram[k * dim + s]; }
};

namespace detail {

/// Builds the normal system for basis values phi_k(t_i) = t_i^k.
inline NormalSystem assemble_powers(std::span<const double> t, std::span<const double> y,
                                    std::span<const double> p, std::size_t m) {
  const std::size_t d = m + 1;
  std::vector<CompensatedSum> moments(2 * m + 1);
  std::vector<CompensatedSum> rhs(d);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (p[i] == 0.0) continue;
    double pw = p[i];
    for (std::size_t k = 0; k <= 2 * m; ++k) {
      moments[k] += pw;
      if (k < d) rhs[k] += pw * y[i];
      pw *= t[i];
    }
  }
  NormalSystem sys{d, std::vector<double>(d * d), std::vector<double>(d)};
  for (std::size_t k = 0; k < d; ++k) {
    sys.rhs[k] = rhs[k].value();
    for (std::size_t s = 0; s < d; ++s) sys.G(k, s) = moments[k + s].value();
  }
  return sys;
}

inline double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline std::vector<double> residual(const NormalSystem& sys, std::span<const double> a) {
  std::vector<double> r(sys.dim);
  for (std::size_t k = 0; k < sys.dim; ++k) {
    CompensatedSum acc;
    acc += sys.rhs[k];
    for (std::size_t s = 0; s < sys.dim; ++s) acc += -sys.G(k, s) * a[s];
    r[k] = acc.value();
  }
  return r;
}

/// Lower-triangular Cholesky factor, or empty when a pivot falls below
/// `rel_tol` times the largest diagonal entry.
inline std::vector<double> cholesky(const NormalSystem& sys, double rel_tol) {
  const std::size_t d = sys.dim;
  double max_diag = 0.0;
  for (std::size_t k = 0; k < d; ++k) max_diag = std::max(max_diag, sys.G(k, k));
  if (!(max_diag > 0.0)) return {};
  std::vector<double> L(d * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double diag = sys.G(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= L[j * d + k] * L[j * d + k];
    if (!(diag > rel_tol * max_diag)) return {};
    const double ljj = std::sqrt(diag);
    L[j * d + j] = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      double v = sys.G(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= L[i * d + k] * L[j * d + k];
      L[i * d + j] = v / ljj;
    }
  }
  return L;
}

inline std::vector<double> cholesky_solve(std::span<const double> L, std::size_t d,
                                          std::span<const double> b) {
  std::vector<double> z(b.begin(), b.end());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < i; ++k) z[i] -= L[i * d + k] * z[k];
    z[i] /= L[i * d + i];
  }
  for (std::size_t i = d; i-- > 0;) {
    for (std::size_t k = i + 1; k < d; ++k) z[i] -= L[k * d + i] * z[k];
    z[i] /= L[i * d + i];
  }
  return z;
}

/// Gaussian elimination with full pivoting. Throws SingularSystem when a
/// remaining pivot is negligible against the largest matrix entry.
inline std::vector<double> full_pivot_solve(const NormalSystem& sys) {
  const std::size_t d = sys.dim;
  std::vector<double> A = sys.gram;
  std::vector<double> b = sys.rhs;
  std::vector<std::size_t> col(d);
  std::iota(col.begin(), col.end(), 0);
  const double scale = std::max(inf_norm(A), 1e-300);
  const double tol = 1e-14 * scale;
  std::size_t rank = d;
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t pr = k, pc = k;
    double best = 0.0;
    for (std::size_t i = k; i < d; ++i) {
      for (std::size_t j = k; j < d; ++j) {
        if (std::abs(A[i * d + j]) > best) {
          best = std::abs(A[i * d + j]);
          pr = i;
          pc = j;
        }
      }
    }
    if (best <= tol) {
      rank = k;
      break;
    }
    if (pr != k) {
      for (std::size_t j = 0; j < d; ++j) std::swap(A[k * d + j], A[pr * d + j]);
      std::swap(b[k], b[pr]);
    }
    if (pc != k) {
      for (std::size_t i = 0; i < d; ++i) std::swap(A[i * d + k], A[i * d + pc]);
      std::swap(col[k], col[pc]);
    }
    for (std::size_t i = k + 1; i < d; ++i) {
      const double f = A[i * d + k] / A[k * d + k];
      if (f == 0.0) continue;
      for (std::size_t j = k; j < d; ++j) A[i * d + j] -= f * A[k * d + j];
      b[i] -= f * b[k];
    }
  }
  if (rank < d) {
    throw SingularSystem("normal system is singular: weighted support too thin for degree " +
                         std::to_string(d - 1));
  }
  std::vector<double> z(d);
  for (std::size_t i = d; i-- > 0;) {
    double v = b[i];
    for (std::size_t j = i + 1; j < d; ++j) v -= A[i * d + j] * z[j];
    z[i] = v / A[i * d + i];
  }
  std::vector<double> a(d);
  for (std::size_t i = 0; i < d; ++i) a[col[i]] = z[i];
  return a;
}

/// Coefficients of sum_k c_k (2x - 1)^k re-expressed in the monomial basis.
inline std::vector<double> shifted_to_monomial(std::span<const double> c) {
  const std::size_t m = c.size() - 1;
  std::vector<double> acc{c[m]};
  for (std::size_t k = m; k-- > 0;) {
    std::vector<double> next(acc.size() + 1, 0.0);
    for (std::size_t j = 0; j < acc.size(); ++j) {
      next[j] -= acc[j];
      next[j + 1] += 2.0 * acc[j];
    }
    next[0] += c[k];
    acc = std::move(next);
  }
  return acc;
}

}  // namespace detail

/// Degree from which fit_coefficients assembles in the t = 2x - 1 basis.
/// Monomials on [0,1] lose several digits per degree; at degree 7 with
/// concentrated weights the unshifted system is too noisy for the
/// outer iteration to settle at 1e-12.
inline constexpr int kShiftedBasisDegree = 2;
inline constexpr double kCholeskyPivotTolerance = 1e-13;

inline NormalSystem assemble(const AdaptedDataset& data, const WeightVector& p, int m) {
  if (m < 0) throw InvalidInput("assemble: negative degree");
  if (p.size() != data.size()) throw LengthMismatch("assemble: weights and data differ in length");
  if (static_cast<std::size_t>(m) + 1 > data.size()) {
    throw DegreeTooHigh("assemble: degree " + std::to_string(m) + " needs at least " +
                        std::to_string(m + 1) + " points");
  }
  return detail::assemble_powers(data.x(), data.y(), p.values(), static_cast<std::size_t>(m));
}

/// Solves G a = b. Throws SingularSystem when neither the Cholesky nor the
/// full-pivot route produces a solution meeting the residual bound.
inline std::vector<double> solve(const NormalSystem& sys) {
  const std::size_t d = sys.dim;
  std::vector<double> a;
  const auto L = detail::cholesky(sys, kCholeskyPivotTolerance);
  if (!L.empty()) {
    a = detail::cholesky_solve(L, d, sys.rhs);
    const auto r = detail::residual(sys, a);
    const auto delta = detail::cholesky_solve(L, d, r);
    for (std::size_t k = 0; k < d; ++k) a[k] += delta[k];
  } else {
    a = detail::full_pivot_solve(sys);
  }
  const auto r = detail::residual(sys, a);
  if (!(detail::inf_norm(r) <= 1e-10 * (1.0 + detail::inf_norm(sys.rhs)))) {
    throw SingularSystem("normal system is inconsistent or too ill-conditioned to solve");
  }
  for (double c : a) {
    if (!std::isfinite(c)) throw SingularSystem("normal system produced non-finite coefficients");
  }
  return a;
}

/// Weighted least-squares polynomial of degree m for fixed weights.
inline PolynomialModel fit_coefficients(const AdaptedDataset& data, const WeightVector& p, int m) {
  if (m < kShiftedBasisDegree) return PolynomialModel(solve(assemble(data, p, m)));
  if (p.size() != data.size()) throw LengthMismatch("fit: weights and data differ in length");
  if (static_cast<std::size_t>(m) + 1 > data.size()) {
    throw DegreeTooHigh("fit: degree " + std::to_string(m) + " needs at least " +
                        std::to_string(m + 1) + " points");
  }
  std::vector<double> t(data.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 2.0 * data.x()[i] - 1.0;
  const auto sys = detail::assemble_powers(t, data.y(), p.values(), static_cast<std::size_t>(m));
  return PolynomialModel(detail::shifted_to_monomial(solve(sys)));
}

}  // namespace mewfit
