#pragma once
// Grayscale image noise injection and removal by windowed maximal-entropy fits.
//
// Each row or column is cut into overlapping windows. A low-degree polynomial
// is fitted to every window while the prescribed error is lowered along a
// short schedule; pixels whose weight collapses are flagged as corrupted and
// replaced by the window prediction (averaged over all windows that flagged
// them). Flag/replace is applied after each sweep, so every window in a sweep
// sees the same image.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mewfit/core_model.hpp"
#include "mewfit/errors.hpp"
#include "mewfit/mem_core.hpp"
#include "mewfit/random.hpp"

namespace mewfit {

template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  T& operator()(std::size_t i, std::size_t j) { return v_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return v_[i * cols_ + j]; }
  std::span<T> values() { return v_; }
  std::span<const T> values() const { return v_; }
  bool same_shape(const Grid& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool operator==(const Grid&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> v_;
};

/// Pixel intensities in [0, 1], 0 black, 1 white.
class ImageGrid : public Grid<double> {
 public:
  ImageGrid() = default;
  ImageGrid(std::size_t rows, std::size_t cols, double fill = 0.0) : Grid(rows, cols, fill) {
    if (!(fill >= 0.0 && fill <= 1.0)) throw InvalidInput("image: intensity outside [0,1]");
  }

  /// Throws InvalidInput if any intensity left [0, 1].
  void check() const {
    for (double v : values()) {
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("image: intensity outside [0,1]");
    }
  }
};

using PixelMask = Grid<std::uint8_t>;

inline std::size_t count_set(const PixelMask& m) {
  std::size_t c = 0;
  for (auto v : m.values()) c += v != 0;
  return c;
}

struct NoiseSpec {
  double probability = 0.15;
  double safety = 0.5;
  std::uint64_t seed = 7;

  void validate() const {
    if (!(probability >= 0.0 && probability <= 1.0)) throw InvalidInput("noise: probability outside [0,1]");
    if (!(safety >= 0.0 && safety <= 1.0)) throw InvalidInput("noise: safety factor outside [0,1]");
  }
};

struct NoisyImage {
  ImageGrid image;
  PixelMask mask;
};

/// Bernoulli(P) mask; masked pixels get min(1, max(0, pi + safety * eta)),
/// eta ~ N(0, 1). Mask and magnitudes come from independent streams.
inline NoisyImage inject_noise(const ImageGrid& img, const NoiseSpec& spec) {
  spec.validate();
  Rng root(spec.seed);
  Rng mask_rng = root.split(0);
  Rng noise_rng = root.split(1);
  NoisyImage out{img, PixelMask(img.rows(), img.cols(), 0)};
  for (std::size_t i = 0; i < img.rows(); ++i) {
    for (std::size_t j = 0; j < img.cols(); ++j) {
      if (!(mask_rng.uniform() < spec.probability)) continue;
      out.mask(i, j) = 1;
      const double eta = noise_rng.normal();
      out.image(i, j) = std::min(1.0, std::max(0.0, img(i, j) + spec.safety * eta));
    }
  }
  return out;
}

/// 10 log10(1 / mean squared difference); +infinity for identical images.
inline double psnr(const ImageGrid& a, const ImageGrid& b) {
  if (!a.same_shape(b)) throw DimensionMismatch("psnr: images differ in size");
  if (a.size() == 0) throw DimensionMismatch("psnr: empty images");
  CompensatedSum acc;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a.values()[k] - b.values()[k];
    acc += d * d;
  }
  const double mse = acc.value() / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

/// Smooth stand-in test image: a few low-frequency sinusoids, affinely
/// mapped onto [0.1, 0.9].
inline ImageGrid synthetic_image(std::size_t rows = 99, std::size_t cols = 350) {
  constexpr double tau = 2.0 * std::numbers::pi;
  Grid<double> raw(rows, cols);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < rows; ++i) {
    const double v = rows > 1 ? static_cast<double>(i) / static_cast<double>(rows - 1) : 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double u = cols > 1 ? static_cast<double>(j) / static_cast<double>(cols - 1) : 0.0;
      const double f = std::sin(tau * 1.3 * u + 0.4) * std::cos(tau * 0.7 * v) +
                       0.6 * std::sin(tau * (0.8 * u + 1.1 * v) + 1.0) + 0.4 * std::cos(tau * 2.1 * u - 0.5);
      raw(i, j) = f;
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
  }
  ImageGrid img(rows, cols);
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t k = 0; k < img.size(); ++k) img.values()[k] = 0.1 + 0.8 * (raw.values()[k] - lo) / span;
  return img;
}

enum class SweepOrder { rows_then_columns, columns_then_rows, alternating };

struct DenoiseConfig {
  int window = 15;
  int degree = 3;
  std::vector<double> mse_schedule{2.0, 5.0, 10.0, 20.0};
  /// A pixel is flagged when its converged weight falls below this value.
  double weight_tol = 5e-3;
  /// Windows whose uniform-weight fit already stays within this many
  /// intensity units of every pixel are left alone, as are pixels deviating
  /// by less than this from the maximal-entropy prediction.
  double min_deviation = 0.03;
  SweepOrder sweep_order = SweepOrder::alternating;
  int max_passes = 4;
  int outer_max_iter = 2000;

  void validate() const {
    if (window < 3 || window % 2 == 0) throw InvalidInput("denoise: window must be odd and >= 3");
    if (degree < 0 || degree + 1 > window) throw InvalidInput("denoise: degree must satisfy 0 <= degree < window");
    if (mse_schedule.empty()) throw InvalidInput("denoise: empty reduction schedule");
    for (std::size_t k = 0; k < mse_schedule.size(); ++k) {
      if (!(mse_schedule[k] >= 1.0) || (k > 0 && !(mse_schedule[k] > mse_schedule[k - 1]))) {
        throw InvalidInput("denoise: schedule must be ascending reduction factors >= 1");
      }
    }
    if (!(weight_tol > 0.0)) throw InvalidInput("denoise: weight tolerance must be positive");
    if (!(min_deviation >= 0.0)) throw InvalidInput("denoise: min deviation must be >= 0");
    if (max_passes < 1) throw InvalidInput("denoise: max passes must be >= 1");
  }
};

struct FlaggedPixel {
  std::size_t row = 0;
  std::size_t col = 0;
  double old_value = 0.0;
  double new_value = 0.0;
  double weight = 0.0;  // smallest weight any window assigned to the pixel
};

struct DenoiseResult {
  ImageGrid clean;
  PixelMask flagged;
  std::vector<FlaggedPixel> repairs;  // final repair per flagged pixel, row-major
  int passes = 0;
};

namespace detail {

struct WindowFlag {
  std::size_t offset;
  double prediction;
  double weight;
};

/// Flags inside one window of intensities.
inline std::vector<WindowFlag> scan_window(std::span<const double> values, const DenoiseConfig& cfg) {
  const std::size_t n = values.size();
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) return {};
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    y[i] = (values[i] - *lo) / (*hi - *lo);
  }
  const double span = *hi - *lo;
  AdaptedDataset data(std::move(x), std::move(y), Scale{*lo, *hi, 0.0, 1.0});

  FitConfig fcfg;
  fcfg.degree = std::min<int>(cfg.degree, static_cast<int>(n) - 1);
  fcfg.outer_max_iter = cfg.outer_max_iter;
  fcfg.max_refinements = 8;
  MemPath path(data, fcfg);
  if (path.result().perfect_fit) return {};
  {
    const auto e = residuals(path.result().model, data);
    double worst = 0.0;
    for (double v : e.e) worst = std::max(worst, std::abs(v));
    if (worst * span < cfg.min_deviation) return {};
  }

  std::vector<std::uint8_t> prev, cur;
  const FitResult* fit = &path.result();
  for (std::size_t k = 0; k < cfg.mse_schedule.size(); ++k) {
    try {
      path.advance_to(cfg.mse_schedule[k], 1);
    } catch (const Error&) {
      break;  // keep the last converged stage
    }
    fit = &path.result();
    cur.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) cur[i] = fit->state.p[i] < cfg.weight_tol;
    const bool any = std::find(cur.begin(), cur.end(), 1) != cur.end();
    if (k > 0 && any && cur == prev) break;
    prev = cur;
  }

  // Predictions come from the converged weights with the collapsed ones set
  // to exactly zero, so a flagged pixel has no pull on its own replacement.
  std::vector<double> kept(fit->state.p.values().begin(), fit->state.p.values().end());
  std::size_t n_flagged = 0;
  double total = 0.0;
  for (double& v : kept) {
    if (v < cfg.weight_tol) {
      v = 0.0;
      ++n_flagged;
    }
    total += v;
  }
  if (n_flagged == 0 || n - n_flagged < static_cast<std::size_t>(fcfg.degree) + 1) return {};
  for (double& v : kept) v /= total;
  PolynomialModel model = fit->model;
  try {
    model = fit_coefficients(data, WeightVector(std::move(kept)), fcfg.degree);
  } catch (const SingularSystem&) {
    return {};
  }

  std::vector<WindowFlag> flags;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(fit->state.p[i] < cfg.weight_tol)) continue;
    const double pred = *lo + span * model(data.x()[i]);
    if (std::abs(pred - values[i]) < cfg.min_deviation) continue;
    flags.push_back({i, std::min(1.0, std::max(0.0, pred)), fit->state.p[i]});
  }
  return flags;
}

/// Window start offsets covering [0, len): stride ceil(W/2), last window
/// flush with the end.
inline std::vector<std::size_t> window_starts(std::size_t len, std::size_t w) {
  if (len <= w) return {0};
  const std::size_t stride = (w + 1) / 2;
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + w <= len; s += stride) starts.push_back(s);
  if (starts.back() + w < len) starts.push_back(len - w);
  return starts;
}

}  // namespace detail

inline DenoiseResult denoise(const ImageGrid& noisy, const DenoiseConfig& cfg) {
  cfg.validate();
  noisy.check();
  const std::size_t R = noisy.rows(), C = noisy.cols();
  DenoiseResult res{noisy, PixelMask(R, C, 0), {}, 0};
  Grid<double> min_weight(R, C, std::numeric_limits<double>::infinity());
  const std::size_t W = static_cast<std::size_t>(cfg.window);

  // One sweep along rows (by_rows) or columns; returns the number of pixels
  // flagged for the first time.
  auto sweep = [&](bool by_rows) {
    const std::size_t slices = by_rows ? R : C;
    const std::size_t len = by_rows ? C : R;
    if (len < static_cast<std::size_t>(cfg.degree) + 2) return std::size_t{0};
    Grid<double> sum(R, C, 0.0);
    Grid<std::uint32_t> count(R, C, 0);
    std::vector<double> line(len);
    for (std::size_t s = 0; s < slices; ++s) {
      for (std::size_t t = 0; t < len; ++t) line[t] = by_rows ? res.clean(s, t) : res.clean(t, s);
      for (std::size_t start : detail::window_starts(len, W)) {
        const std::size_t w = std::min(W, len - start);
        for (const auto& f : detail::scan_window(std::span<const double>(line).subspan(start, w), cfg)) {
          const std::size_t t = start + f.offset;
          const std::size_t i = by_rows ? s : t, j = by_rows ? t : s;
          sum(i, j) += f.prediction;
          count(i, j) += 1;
          min_weight(i, j) = std::min(min_weight(i, j), f.weight);
        }
      }
    }
    std::size_t fresh = 0;
    for (std::size_t i = 0; i < R; ++i) {
      for (std::size_t j = 0; j < C; ++j) {
        if (count(i, j) == 0) continue;
        res.clean(i, j) = sum(i, j) / count(i, j);
        if (!res.flagged(i, j)) ++fresh;
        res.flagged(i, j) = 1;
      }
    }
    return fresh;
  };

  for (int pass = 0; pass < cfg.max_passes; ++pass) {
    std::size_t fresh = 0;
    switch (cfg.sweep_order) {
      case SweepOrder::rows_then_columns:
        fresh += sweep(true);
        fresh += sweep(false);
        break;
      case SweepOrder::columns_then_rows:
        fresh += sweep(false);
        fresh += sweep(true);
        break;
      case SweepOrder::alternating:
        fresh += sweep(pass % 2 == 0);
        break;
    }
    res.passes = pass + 1;
    // Alternating needs both directions before "no new flags" means anything.
    if (fresh == 0 && (cfg.sweep_order != SweepOrder::alternating || pass > 0)) break;
  }

  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      if (res.flagged(i, j)) res.repairs.push_back({i, j, noisy(i, j), res.clean(i, j), min_weight(i, j)});
    }
  }
  return res;
}

struct DetectionScore {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;

  double sensitivity() const {
    const auto p = true_positive + false_negative;
    return p ? static_cast<double>(true_positive) / static_cast<double>(p) : 1.0;
  }
  double specificity() const {
    const auto n = true_negative + false_positive;
    return n ? static_cast<double>(true_negative) / static_cast<double>(n) : 1.0;
  }
  double false_positive_rate() const { return 1.0 - specificity(); }
};

inline DetectionScore score_flags(const PixelMask& flagged, const PixelMask& truth) {
  if (!flagged.same_shape(truth)) throw DimensionMismatch("score: masks differ in size");
  DetectionScore s;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const bool f = flagged.values()[k] != 0, t = truth.values()[k] != 0;
    if (f && t) ++s.true_positive;
    else if (f) ++s.false_positive;
    else if (t) ++s.false_negative;
    else ++s.true_negative;
  }
  return s;
}

}  // namespace mewfit
