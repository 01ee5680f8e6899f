#pragma once
// Seeded data generators for the reference test cases.

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "mewfit/core_model.hpp"
#include "mewfit/errors.hpp"
#include "mewfit/random.hpp"

namespace mewfit {

inline constexpr std::uint64_t kDefaultSeed = 7;

/// Pearson (1901), bottom of p. 569: ten (X, Y) pairs.
inline constexpr std::array<double, 10> kPearsonX{0.0, 0.9, 1.8, 2.6, 3.3, 4.4, 5.2, 6.1, 6.5, 7.4};
inline constexpr std::array<double, 10> kPearsonY{5.9, 5.4, 4.4, 4.6, 3.5, 3.7, 2.8, 2.8, 2.4, 1.5};

/// Degree-seven Legendre polynomial rescaled to map [0, 1] onto [0, 1],
/// (P7(2x - 1) + 1) / 2, ascending powers.
inline constexpr std::array<double, 8> kLegendre7{0.0, 28.0, -378.0, 2100.0, -5775.0, 8316.0, -6006.0, 1716.0};

inline RawDataset pearson_data() {
  return RawDataset({kPearsonX.begin(), kPearsonX.end()}, {kPearsonY.begin(), kPearsonY.end()});
}

/// y = x on n equidistant points of [0, 1]; even-positioned points (1-based
/// i = 2, 4, ...) get uniform random ordinates.
inline RawDataset hidden_line_data(std::uint64_t seed, std::size_t n = 21) {
  Rng rng(seed);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    y[i] = x[i];
    if (i % 2 == 1) y[i] = rng.uniform();
  }
  return RawDataset(std::move(x), std::move(y));
}

inline double legendre7(double x) {
  double acc = 0.0;
  for (auto it = kLegendre7.rbegin(); it != kLegendre7.rend(); ++it) acc = acc * x + *it;
  return acc;
}

/// Indices (0-based, ascending) of a uniformly drawn `k`-subset of [0, n),
/// sampled without replacement by a partial Fisher-Yates shuffle.
inline std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t pick = j + static_cast<std::size_t>(rng.below(n - j));
    std::swap(idx[j], idx[pick]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// P7 sampled on x_i = (i-1)/99; `noisy` indices replaced by uniform values.
inline RawDataset legendre_signal_data(std::uint64_t seed, std::size_t n = 100, std::size_t noisy = 75) {
  Rng rng(seed);
  Rng pick_rng = rng.split(0);
  Rng value_rng = rng.split(1);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    y[i] = legendre7(x[i]);
  }
  for (std::size_t i : sample_without_replacement(pick_rng, n, noisy)) y[i] = value_rng.uniform();
  return RawDataset(std::move(x), std::move(y));
}

/// Y = 1 - X + 2 X^2 on 20 equidistant points with N(0,1)/20 noise, except
/// the fixed outliers Y_5 = 2 and Y_10 = 1.5 (1-based).
inline RawDataset parabola_outlier_data(std::uint64_t seed) {
  constexpr std::size_t n = 20;
  Rng rng(seed);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    const double delta = rng.normal();
    y[i] = 1.0 - x[i] + 2.0 * x[i] * x[i] + delta / 20.0;
  }
  y[4] = 2.0;
  y[9] = 1.5;
  return RawDataset(std::move(x), std::move(y));
}

}  // namespace mewfit
