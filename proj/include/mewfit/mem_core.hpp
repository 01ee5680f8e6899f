#pragma once
// Maximal-entropy weighting.
//
// For fixed residuals e_i and a prescribed mean squared error, the entropy
// -sum p ln p under the constraints sum p = 1 and sum p e^2 = mse is maximized
// by Gibbs weights
//
//   p_i = exp(-beta e_i^2) / Q,    Q = sum_i exp(-beta e_i^2),
//
// with beta fixed by the constraint. The full method alternates a weighted
// least-squares solve for the coefficients with a beta/weight update until
// both stop moving, and walks the prescribed error down from the uniform-weight
// level mse_uw to mse_uw / r along a geometric continuation path.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mewfit/core_model.hpp"
#include "mewfit/errors.hpp"
#include "mewfit/wls_solver.hpp"

namespace mewfit {

inline constexpr double kDefaultWeightFloor = 1e-300;
inline constexpr double kDefaultBetaMax = 1e12;
inline constexpr double kPerfectFitMse = 1e-30;

struct MemState {
  WeightVector p;
  double beta = 0.0;
  double log_Q = 0.0;  // ln Q; Q itself may underflow for very large beta
  double H = 0.0;
  double mse = 0.0;

  double Q() const { return std::exp(log_Q); }
  /// Normalization multiplier, exp(1 + alpha) = Q.
  double alpha() const { return log_Q - 1.0; }
};

struct FitConfig {
  int degree = 1;
  double reduction_factor = 1.0;
  /// Geometric continuation stages; 0 picks ceil(2 log10 r).
  int continuation_steps = 0;
  double outer_tol = 1e-12;
  int outer_max_iter = 20000;
  double weight_floor = kDefaultWeightFloor;
  double beta_max = kDefaultBetaMax;
  /// When a stage target stays below min e_i^2 after all refinements, pin
  /// beta at beta_max instead of failing with InfeasibleTarget.
  bool cap_beta = true;
  /// Halvings of a continuation step allowed before a stage is declared failed.
  int max_refinements = 30;

  void validate() const {
    if (degree < 0) throw InvalidInput("fit config: degree must be non-negative");
    if (!(reduction_factor >= 1.0) || !std::isfinite(reduction_factor)) {
      throw InvalidInput("fit config: reduction factor must be finite and >= 1");
    }
    if (continuation_steps < 0) throw InvalidInput("fit config: continuation steps must be >= 0");
    if (!(outer_tol > 0.0)) throw InvalidInput("fit config: tolerance must be positive");
    if (outer_max_iter < 1) throw InvalidInput("fit config: max iterations must be >= 1");
    if (!(weight_floor >= 0.0)) throw InvalidInput("fit config: weight floor must be >= 0");
    if (!(beta_max > 0.0)) throw InvalidInput("fit config: beta_max must be positive");
  }

  int resolved_stages() const {
    if (continuation_steps > 0) return continuation_steps;
    if (reduction_factor <= 1.0) return 1;
    return std::max(1, static_cast<int>(std::ceil(2.0 * std::log10(reduction_factor) - 1e-9)));
  }
};

struct TraceRow {
  double r = 1.0;
  double mse = 0.0;
  double H = 0.0;
  double beta = 0.0;
};

struct FitResult {
  PolynomialModel model;
  MemState state;
  std::vector<TraceRow> trace;
  bool converged = false;
  int iterations = 0;
  double mse_uw = 0.0;
  double target_mse = 0.0;
  /// Set when the uniform-weight fit already interpolates the data.
  bool perfect_fit = false;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, FitResult best) : Error(what), best_(std::move(best)) {}
  const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

namespace detail {

inline std::vector<double> squares(const ResidualVector& e) {
  std::vector<double> e2(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) e2[i] = e[i] * e[i];
  return e2;
}

/// Exponent shift making every exp(-beta (e2 - shift)) <= 1.
inline double gibbs_shift(std::span<const double> e2, double beta) {
  const auto [lo, hi] = std::minmax_element(e2.begin(), e2.end());
  return beta >= 0.0 ? *lo : *hi;
}

struct GibbsMoments {
  double sum = 0.0;   // sum of shifted exponentials
  double mean = 0.0;  // Gibbs mean of e^2
  double var = 0.0;   // Gibbs variance of e^2
};

inline GibbsMoments gibbs_moments(std::span<const double> e2, double beta) {
  const double shift = gibbs_shift(e2, beta);
  std::vector<double> w(e2.size());
  CompensatedSum s0, s1;
  for (std::size_t i = 0; i < e2.size(); ++i) {
    w[i] = std::exp(-beta * (e2[i] - shift));
    s0 += w[i];
    s1 += w[i] * e2[i];
  }
  GibbsMoments m;
  m.sum = s0.value();
  m.mean = s1.value() / m.sum;
  CompensatedSum s2;
  for (std::size_t i = 0; i < e2.size(); ++i) {
    const double d = e2[i] - m.mean;
    s2 += w[i] * d * d;
  }
  m.var = s2.value() / m.sum;
  return m;
}

inline double log_partition(std::span<const double> e2, double beta) {
  const double shift = gibbs_shift(e2, beta);
  CompensatedSum s;
  for (double v : e2) s += std::exp(-beta * (v - shift));
  return std::log(s.value()) - beta * shift;
}

inline std::vector<double> gibbs_weights(std::span<const double> e2, double beta, double floor) {
  const double shift = gibbs_shift(e2, beta);
  std::vector<double> p(e2.size());
  CompensatedSum s;
  for (std::size_t i = 0; i < e2.size(); ++i) {
    p[i] = std::exp(-beta * (e2[i] - shift));
    s += p[i];
  }
  const double total = s.value();
  CompensatedSum kept;
  for (double& v : p) {
    v /= total;
    if (v < floor) v = 0.0;
    kept += v;
  }
  const double k = kept.value();
  if (k != 1.0) {
    for (double& v : p) v /= k;
  }
  return p;
}

}  // namespace detail

/// ln Q for residuals e at multiplier beta, computed in shifted form.
inline double log_partition_function(const ResidualVector& e, double beta) {
  return detail::log_partition(detail::squares(e), beta);
}

inline double partition_function(const ResidualVector& e, double beta) {
  return std::exp(log_partition_function(e, beta));
}

inline WeightVector weights_from_beta(const ResidualVector& e, double beta,
                                      double weight_floor = kDefaultWeightFloor) {
  if (!std::isfinite(beta)) throw InvalidInput("weights_from_beta: beta must be finite");
  return WeightVector(detail::gibbs_weights(detail::squares(e), beta, weight_floor));
}

inline double entropy(const WeightVector& p) {
  CompensatedSum h;
  for (double v : p.values()) {
    if (v > 0.0) h += -v * std::log(v);
  }
  return std::max(0.0, h.value());
}

struct BetaSolverOptions {
  double beta_max = kDefaultBetaMax;
  int max_iter = 200;
};

/// Root of  sum_i (e_i^2 - target) exp(-beta e_i^2) = 0, i.e. the beta whose
/// Gibbs mean of e^2 equals `target`. Newton steps on the (strictly
/// decreasing) Gibbs mean, safeguarded by a bracket that falls back to
/// bisection whenever a step leaves it.
inline double solve_beta(const ResidualVector& e, double target, double beta_init = 0.0,
                         BetaSolverOptions opt = {}) {
  if (e.size() == 0) throw InvalidInput("solve_beta: empty residual vector");
  const auto e2 = detail::squares(e);
  const auto [lo_it, hi_it] = std::minmax_element(e2.begin(), e2.end());
  const double e2_min = *lo_it, e2_max = *hi_it;
  if (!(target > e2_min)) {
    throw InfeasibleTarget("solve_beta: target " + std::to_string(target) +
                           " does not exceed the smallest squared residual");
  }
  if (!(target < e2_max)) {
    throw InfeasibleTarget("solve_beta: target " + std::to_string(target) +
                           " is not below the largest squared residual");
  }

  auto excess = [&](double beta, double* var) {
    const auto m = detail::gibbs_moments(e2, beta);
    if (var) *var = m.var;
    return m.mean - target;
  };
  const double tol = 1e-14 * target;

  const double h0 = excess(0.0, nullptr);
  if (h0 == 0.0) return 0.0;

  // Bracket [lo, hi] with excess(lo) > 0 > excess(hi).
  double lo, hi;
  if (h0 > 0.0) {
    lo = 0.0;
    hi = std::max(1.0, 2.0 * std::abs(beta_init));
    while (excess(hi, nullptr) > 0.0) {
      if (hi >= opt.beta_max) {
        throw InfeasibleTarget("solve_beta: root lies beyond beta_max");
      }
      lo = hi;
      hi = std::min(opt.beta_max, hi * 8.0);
    }
  } else {
    hi = 0.0;
    lo = -std::max(1.0, 2.0 * std::abs(beta_init));
    while (excess(lo, nullptr) < 0.0) {
      if (lo <= -opt.beta_max) {
        throw InfeasibleTarget("solve_beta: root lies beyond -beta_max");
      }
      hi = lo;
      lo = std::max(-opt.beta_max, lo * 8.0);
    }
  }

  auto bisect = [&] {
    if (lo > 0.0 && hi > 4.0 * lo) return std::sqrt(lo * hi);
    if (hi < 0.0 && lo < 4.0 * hi) return -std::sqrt(lo * hi);
    return 0.5 * (lo + hi);
  };

  double beta = (beta_init > lo && beta_init < hi) ? beta_init : bisect();
  for (int it = 0; it < opt.max_iter; ++it) {
    double var = 0.0;
    const double h = excess(beta, &var);
    if (std::abs(h) <= tol) return beta;
    if (h > 0.0) {
      lo = beta;
    } else {
      hi = beta;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi))) {
      return beta;
    }
    double next = var > 0.0 ? beta + h / var : bisect();
    if (!(next > lo && next < hi)) next = bisect();
    if (next == beta) return beta;
    beta = next;
  }
  throw Error("solve_beta: no convergence after " + std::to_string(opt.max_iter) + " iterations");
}

/// Gibbs state for residuals e at multiplier beta.
inline MemState make_state(const ResidualVector& e, double beta, double weight_floor) {
  const auto e2 = detail::squares(e);
  WeightVector p(detail::gibbs_weights(e2, beta, weight_floor));
  const double mse = weighted_mse(e, p);
  const double H = entropy(p);
  return MemState{std::move(p), beta, detail::log_partition(e2, beta), H, mse};
}

struct UniformBaseline {
  PolynomialModel model;
  double mse_uw = 0.0;
};

inline UniformBaseline uniform_baseline(const AdaptedDataset& data, int m) {
  const auto p = WeightVector::uniform(data.size());
  auto model = fit_coefficients(data, p, m);
  const double mse = weighted_mse(residuals(model, data), p);
  return {std::move(model), mse};
}

/// Continuation path for one data set. Holds the current converged state and
/// moves it to tighter error targets on request.
class MemPath {
 public:
  MemPath(const AdaptedDataset& data, FitConfig cfg) : data_(data), cfg_(std::move(cfg)) {
    cfg_.validate();
    auto base = uniform_baseline(data_, cfg_.degree);
    const auto e = residuals(base.model, data_);
    const std::size_t n = data_.size();
    MemState state{WeightVector::uniform(n), 0.0, std::log(static_cast<double>(n)),
                   std::log(static_cast<double>(n)), base.mse_uw};
    result_ = FitResult{std::move(base.model), std::move(state), {}, true, 0, base.mse_uw, base.mse_uw,
                        base.mse_uw <= kPerfectFitMse};
    result_.trace.push_back({1.0, result_.state.mse, result_.state.H, 0.0});
  }

  /// Warm start from an earlier converged result on the same data.
  MemPath(const AdaptedDataset& data, FitConfig cfg, FitResult start)
      : data_(data), cfg_(std::move(cfg)), result_(std::move(start)) {
    cfg_.validate();
    if (result_.state.p.size() != data_.size()) throw LengthMismatch("warm start: size mismatch");
    log_r_ = std::log(result_.mse_uw / result_.target_mse);
  }

  const FitResult& result() const { return result_; }
  double current_r() const { return std::exp(log_r_); }
  const FitConfig& config() const { return cfg_; }

  /// Moves the prescribed error to mse_uw / r in `stages` geometric steps
  /// (halving a step whenever its target cannot be reached from the current
  /// residuals). Throws NoConvergence with the last good state on failure.
  void advance_to(double r, int stages = 1) {
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidInput("advance_to: reduction factor must be positive");
    if (result_.perfect_fit) return;
    const double log_goal = std::log(r);
    if (log_goal == log_r_) return;
    const double base_step = (log_goal - log_r_) / std::max(1, stages);
    double step = base_step;
    int refinements = 0;
    while (log_r_ != log_goal) {
      double next = log_r_ + step;
      if ((step > 0.0 && next >= log_goal) || (step < 0.0 && next <= log_goal)) next = log_goal;
      const bool last_chance = refinements >= cfg_.max_refinements;
      try {
        run_stage(next, last_chance && cfg_.cap_beta);
        log_r_ = next;
        step = (std::abs(step * 2.0) <= std::abs(base_step)) ? step * 2.0 : base_step;
      } catch (const InfeasibleTarget&) {
        if (last_chance) {
          if (!cfg_.cap_beta) throw;
          fail("continuation: target unreachable even with beta capped");
        }
        ++refinements;
        step *= 0.5;
      } catch (const SingularSystem&) {
        if (last_chance) fail("continuation: weighted normal system became singular");
        ++refinements;
        step *= 0.5;
      } catch (const StageStall&) {
        if (last_chance) fail("continuation: outer iteration did not converge");
        ++refinements;
        step *= 0.5;
      }
    }
  }

 private:
  struct StageStall {};

  [[noreturn]] void fail(const std::string& why) {
    auto best = result_;
    best.converged = false;
    throw NoConvergence(why, std::move(best));
  }

  // Fixed-point iteration at target mse_uw * exp(-log_r). On success commits
  // the converged state; on any failure leaves result_ untouched.
  void run_stage(double log_r, bool allow_cap) {
    const double target = result_.mse_uw * std::exp(-log_r);
    const int m = cfg_.degree;
    std::vector<double> p(result_.state.p.values().begin(), result_.state.p.values().end());
    std::vector<double> a_prev(result_.model.coeffs().begin(), result_.model.coeffs().end());
    double beta = result_.state.beta;
    double lambda = 1.0;
    double last_dp = std::numeric_limits<double>::infinity();
    int rising = 0;
    const BetaSolverOptions beta_opt{cfg_.beta_max, 200};

    for (int it = 1; it <= cfg_.outer_max_iter; ++it) {
      auto model = fit_coefficients(data_, WeightVector(p), m);
      const auto e = residuals(model, data_);
      try {
        beta = solve_beta(e, target, beta, beta_opt);
      } catch (const InfeasibleTarget&) {
        if (!allow_cap) throw;
        beta = cfg_.beta_max;
      }
      const auto gibbs = detail::gibbs_weights(detail::squares(e), beta, cfg_.weight_floor);

      double dp = 0.0, da = 0.0, amag = 0.0;
      std::vector<double> next(p.size());
      CompensatedSum total;
      for (std::size_t i = 0; i < p.size(); ++i) {
        next[i] = lambda == 1.0 ? gibbs[i] : (1.0 - lambda) * p[i] + lambda * gibbs[i];
        total += next[i];
      }
      const double t = total.value();
      for (std::size_t i = 0; i < p.size(); ++i) {
        next[i] /= t;
        dp = std::max(dp, std::abs(next[i] - p[i]));
      }
      for (std::size_t k = 0; k < a_prev.size(); ++k) {
        da = std::max(da, std::abs(model[k] - a_prev[k]));
        amag = std::max(amag, std::abs(model[k]));
      }
      p = std::move(next);
      a_prev.assign(model.coeffs().begin(), model.coeffs().end());
      ++result_.iterations;

      if (dp <= cfg_.outer_tol && da <= cfg_.outer_tol * (1.0 + amag)) {
        auto state = make_state(e, beta, cfg_.weight_floor);
        result_.model = std::move(model);
        result_.state = std::move(state);
        result_.target_mse = target;
        result_.trace.push_back({result_.mse_uw / target, result_.state.mse, result_.state.H, beta});
        return;
      }
      // Two consecutive growths of the weight step count as oscillation.
      rising = dp > last_dp ? rising + 1 : 0;
      if (rising >= 2 && lambda > 1.0 / 64.0) {
        lambda *= 0.5;
        rising = 0;
      }
      last_dp = dp;
    }
    throw StageStall{};
  }

  AdaptedDataset data_;
  FitConfig cfg_;
  FitResult result_{PolynomialModel({0.0}), MemState{WeightVector::uniform(1)}, {}, false, 0, 0.0, 0.0, false};
  double log_r_ = 0.0;
};

/// Maximal-entropy fit at reduction factor cfg.reduction_factor.
inline FitResult mem_fit(const AdaptedDataset& data, const FitConfig& cfg) {
  MemPath path(data, cfg);
  path.advance_to(cfg.reduction_factor, cfg.resolved_stages());
  return path.result();
}

struct EntropyDiagnostics {
  double identity_residual = 0.0;  // |H - (beta mse + ln Q)|
  double dH_dmse = 0.0;            // centered finite difference
  double beta = 0.0;
  double relative_gap() const {
    return beta == 0.0 ? std::abs(dH_dmse) : std::abs(dH_dmse - beta) / std::abs(beta);
  }
};

/// Checks H = beta mse + ln Q on `fit` and estimates dH/dmse by refitting at
/// mse (1 +- h), warm-started from `fit`.
inline EntropyDiagnostics entropy_identity_check(const AdaptedDataset& data, const FitConfig& cfg,
                                                 const FitResult& fit, double h = 1e-3) {
  EntropyDiagnostics d;
  const auto& s = fit.state;
  d.beta = s.beta;
  d.identity_residual = std::abs(s.H - (s.beta * s.mse + s.log_Q));
  if (fit.perfect_fit || fit.target_mse == fit.mse_uw) {
    d.dH_dmse = 0.0;
    return d;
  }
  const double r = fit.mse_uw / fit.target_mse;
  MemPath up(data, cfg, fit);
  up.advance_to(r / (1.0 + h));
  MemPath down(data, cfg, fit);
  down.advance_to(r / (1.0 - h));
  const auto& a = up.result().state;
  const auto& b = down.result().state;
  d.dH_dmse = (a.H - b.H) / (a.mse - b.mse);
  return d;
}

}  // namespace mewfit
