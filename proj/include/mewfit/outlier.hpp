#pragma once
// Outlier labelling from converged maximal-entropy weights: points whose weight
// collapses below a threshold are outliers.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mewfit/core_model.hpp"
#include "mewfit/mem_core.hpp"
#include "mewfit/wls_solver.hpp"

namespace mewfit {

enum class PointLabel { kept, outlier };

struct OutlierReport {
  std::vector<PointLabel> labels;
  WeightVector weights;
  double threshold = 0.0;
  /// Uniform-weight fit restricted to kept points, in the same adapted
  /// coordinates as the input. Empty if too few points survive.
  std::optional<PolynomialModel> comparison;

  std::size_t outlier_count() const {
    std::size_t c = 0;
    for (auto l : labels) c += l == PointLabel::outlier;
    return c;
  }
  std::vector<std::size_t> outlier_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == PointLabel::outlier) idx.push_back(i);
    }
    return idx;
  }
};

/// 1e-3 of the uniform weight level.
inline double default_outlier_threshold(std::size_t n) { return 1e-3 / static_cast<double>(n); }

inline OutlierReport detect(const AdaptedDataset& data, const FitResult& result, double threshold) {
  const auto& p = result.state.p;
  if (p.size() != data.size()) throw LengthMismatch("detect: weights and data differ in length");
  OutlierReport rep{std::vector<PointLabel>(p.size()), p, threshold, std::nullopt};
  std::vector<double> kx, ky;
  for (std::size_t i = 0; i < p.size(); ++i) {
    rep.labels[i] = p[i] < threshold ? PointLabel::outlier : PointLabel::kept;
    if (rep.labels[i] == PointLabel::kept) {
      kx.push_back(data.x()[i]);
      ky.push_back(data.y()[i]);
    }
  }
  const int m = result.model.degree();
  if (kx.size() >= static_cast<std::size_t>(m) + 1) {
    const std::size_t nk = kx.size();
    AdaptedDataset kept(std::move(kx), std::move(ky), data.scale());
    try {
      rep.comparison = fit_coefficients(kept, WeightVector::uniform(nk), m);
    } catch (const SingularSystem&) {
      rep.comparison.reset();
    }
  }
  return rep;
}

struct WeightHistoryRow {
  double r = 1.0;
  bool ok = false;
  std::string error;
  std::vector<double> p;
  double mse = 0.0;
  double H = 0.0;
  double beta = 0.0;
};

/// One converged fit per reduction factor, warm-started along the ascending
/// grid. A failed row keeps the path at the last good state.
inline std::vector<WeightHistoryRow> weight_history(const AdaptedDataset& data, const FitConfig& cfg,
                                                    std::span<const double> r_grid) {
  for (std::size_t k = 0; k < r_grid.size(); ++k) {
    if (!(r_grid[k] >= 1.0) || (k > 0 && !(r_grid[k] > r_grid[k - 1]))) {
      throw InvalidInput("weight_history: grid must be ascending and start at r >= 1");
    }
  }
  MemPath path(data, cfg);
  std::vector<WeightHistoryRow> rows;
  rows.reserve(r_grid.size());
  for (double r : r_grid) {
    WeightHistoryRow row;
    row.r = r;
    try {
      path.advance_to(r, 1);
      row.ok = true;
    } catch (const Error& ex) {
      row.error = ex.what();
    }
    if (row.ok) {
      const auto& s = path.result().state;
      row.p.assign(s.p.values().begin(), s.p.values().end());
      row.mse = s.mse;
      row.H = s.H;
      row.beta = s.beta;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// r = 10^(k / per_decade) for k = 0 .. per_decade * log10(r_max), plus r_max.
inline std::vector<double> log_grid(double r_max, int per_decade = 4) {
  std::vector<double> grid{1.0};
  if (r_max <= 1.0) return grid;
  const double decades = std::log10(r_max);
  const int steps = static_cast<int>(std::ceil(decades * per_decade - 1e-9));
  for (int k = 1; k < steps; ++k) grid.push_back(std::pow(10.0, static_cast<double>(k) / per_decade));
  grid.push_back(r_max);
  return grid;
}

}  // namespace mewfit
