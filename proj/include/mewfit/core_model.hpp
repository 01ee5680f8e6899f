#pragma once
// Data model shared by every solver: raw and adapted data sets, polynomial
// models, weights and residuals.
//
// All fitting happens in adapted coordinates, where both x and y live in the
// unit square and a residual of 0.01 reads as a 1% error with respect to the
// Y bandwidth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mewfit/errors.hpp"

namespace mewfit {

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double v) {
    add(v);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Extrema of the raw data, kept so adapted results can be mapped back.
struct Scale {
  double y_min = 0.0;
  double y_max = 1.0;
  double x_min = 0.0;
  double x_max = 1.0;

  double y_span() const { return y_max - y_min; }
  double x_span() const { return x_max - x_min; }
  static Scale identity() { return {}; }
};

class RawDataset {
 public:
  RawDataset(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size()) {
      throw LengthMismatch("raw dataset: X and Y have different lengths");
    }
    if (x_.size() < 2) {
      throw InvalidInput("raw dataset: at least two points are required");
    }
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (!std::isfinite(x_[i]) || !std::isfinite(y_[i])) {
        throw InvalidInput("raw dataset: non-finite value at row " + std::to_string(i + 1));
      }
    }
  }

  std::size_t size() const { return x_.size(); }
  std::span<const double> x() const { return x_; }
  std::span<const double> y() const { return y_; }

  Scale extrema() const {
    const auto [xlo, xhi] = std::minmax_element(x_.begin(), x_.end());
    const auto [ylo, yhi] = std::minmax_element(y_.begin(), y_.end());
    return {*ylo, *yhi, *xlo, *xhi};
  }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
};

/// Data mapped into the unit square. Values outside [0,1] are rejected,
/// never clamped.
class AdaptedDataset {
 public:
  AdaptedDataset(std::vector<double> x, std::vector<double> y, Scale scale = Scale::identity())
      : x_(std::move(x)), y_(std::move(y)), scale_(scale) {
    if (x_.size() != y_.size()) {
      throw LengthMismatch("adapted dataset: x and y have different lengths");
    }
    if (x_.empty()) {
      throw InvalidInput("adapted dataset: empty");
    }
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (!(x_[i] >= 0.0 && x_[i] <= 1.0) || !(y_[i] >= 0.0 && y_[i] <= 1.0)) {
        throw InvalidInput("adapted dataset: point " + std::to_string(i + 1) +
                           " lies outside the unit square");
      }
    }
  }

  std::size_t size() const { return x_.size(); }
  std::span<const double> x() const { return x_; }
  std::span<const double> y() const { return y_; }
  const Scale& scale() const { return scale_; }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  Scale scale_;
};

/// f(x) = sum_k a_k x^k.
class PolynomialModel {
 public:
  explicit PolynomialModel(std::vector<double> coeffs) : a_(std::move(coeffs)) {
    if (a_.empty()) {
      throw InvalidInput("polynomial model: needs at least one coefficient");
    }
    for (double c : a_) {
      if (!std::isfinite(c)) throw InvalidInput("polynomial model: non-finite coefficient");
    }
  }

  int degree() const { return static_cast<int>(a_.size()) - 1; }
  std::span<const double> coeffs() const { return a_; }
  double operator[](std::size_t k) const { return a_[k]; }

  double operator()(double x) const {
    double acc = 0.0;
    for (auto it = a_.rbegin(); it != a_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

 private:
  std::vector<double> a_;
};

/// Normalized non-negative weights.
class WeightVector {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit WeightVector(std::vector<double> p) : p_(std::move(p)) {
    if (p_.empty()) throw InvalidInput("weights: empty");
    CompensatedSum total;
    for (double v : p_) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("weights: negative or non-finite entry");
      total += v;
    }
    if (std::abs(total.value() - 1.0) > kSumTolerance) {
      throw InvalidInput("weights: entries do not sum to one");
    }
  }

  static WeightVector uniform(std::size_t n) { return WeightVector(std::vector<double>(n, 1.0 / n)); }

  /// Weight one on point `j`, zero elsewhere.
  static WeightVector point_mass(std::size_t n, std::size_t j) {
    std::vector<double> p(n, 0.0);
    p.at(j) = 1.0;
    return WeightVector(std::move(p));
  }

  std::size_t size() const { return p_.size(); }
  std::span<const double> values() const { return p_; }
  double operator[](std::size_t i) const { return p_[i]; }

 private:
  std::vector<double> p_;
};

/// e_i = f(x_i) - y_i in adapted coordinates.
struct ResidualVector {
  std::vector<double> e;

  std::size_t size() const { return e.size(); }
  double operator[](std::size_t i) const { return e[i]; }
};

inline AdaptedDataset adapt(const RawDataset& raw) {
  const Scale s = raw.extrema();
  if (!(s.y_max > s.y_min)) throw DegenerateRange("adapt: Y_max equals Y_min");
  if (!(s.x_max > s.x_min)) throw DegenerateRange("adapt: X_max equals X_min");
  const std::size_t n = raw.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = (raw.x()[i] - s.x_min) / s.x_span();
    y[i] = (raw.y()[i] - s.y_min) / s.y_span();
  }
  return AdaptedDataset(std::move(x), std::move(y), s);
}

/// Expands F(X) = Y_min + (Y_max - Y_min) f((X - X_min) / (X_max - X_min))
/// into a polynomial in X of the same degree.
inline PolynomialModel unscale(const PolynomialModel& model, const Scale& s) {
  const double c1 = 1.0 / s.x_span();
  const double c0 = -s.x_min * c1;
  const auto a = model.coeffs();
  const std::size_t m = a.size() - 1;
  // Horner in polynomial space: acc <- acc * (c0 + c1 X) + a_k.
  std::vector<double> acc{a[m]};
  for (std::size_t k = m; k-- > 0;) {
    std::vector<double> next(acc.size() + 1, 0.0);
    for (std::size_t j = 0; j < acc.size(); ++j) {
      next[j] += acc[j] * c0;
      next[j + 1] += acc[j] * c1;
    }
    next[0] += a[k];
    acc = std::move(next);
  }
  for (double& c : acc) c *= s.y_span();
  acc[0] += s.y_min;
  return PolynomialModel(std::move(acc));
}

inline ResidualVector residuals(const PolynomialModel& model, const AdaptedDataset& data) {
  ResidualVector r;
  r.e.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) r.e[i] = model(data.x()[i]) - data.y()[i];
  return r;
}

inline double weighted_mse(const ResidualVector& e, const WeightVector& p) {
  if (e.size() != p.size()) throw LengthMismatch("weighted_mse: residuals and weights differ in length");
  CompensatedSum acc;
  for (std::size_t i = 0; i < e.size(); ++i) acc += p[i] * e[i] * e[i];
  return acc.value();
}

}  // namespace mewfit
