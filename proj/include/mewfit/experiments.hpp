#pragma once
// End-to-end reference scenarios: data generation plus the uniform and
// maximal-entropy fits, outlier labels and r-grid histories behind each
// figure-style table.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "mewfit/core_model.hpp"
#include "mewfit/denoise.hpp"
#include "mewfit/errors.hpp"
#include "mewfit/mem_core.hpp"
#include "mewfit/outlier.hpp"
#include "mewfit/scenarios.hpp"

namespace mewfit {

enum class ScenarioName { pearson, hidden_line, legendre_signal, parabola_outliers, image_denoise };

inline constexpr std::array<std::string_view, 5> kScenarioNames{"pearson", "hidden-line", "legendre-signal",
                                                                 "parabola-outliers", "image-denoise"};

inline std::string_view to_string(ScenarioName s) { return kScenarioNames[static_cast<std::size_t>(s)]; }

inline ScenarioName parse_scenario_name(std::string_view name) {
  for (std::size_t k = 0; k < kScenarioNames.size(); ++k) {
    if (kScenarioNames[k] == name) return static_cast<ScenarioName>(k);
  }
  std::string valid;
  for (auto n : kScenarioNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
  throw UnknownScenario("unknown scenario '" + std::string(name) + "'; valid names: " + valid);
}

struct Scenario {
  ScenarioName name = ScenarioName::pearson;
  std::uint64_t seed = kDefaultSeed;
  FitConfig fit;           // curve scenarios
  int history_per_decade = 4;
  NoiseSpec noise;         // image scenario
  DenoiseConfig denoise;   // image scenario
  std::size_t image_rows = 99;
  std::size_t image_cols = 350;
};

/// Scenario with the reference parameters: degree and reduction factor per
/// test case, P = 0.15 and safety 0.5 for the image.
inline Scenario default_scenario(ScenarioName name, std::uint64_t seed = kDefaultSeed) {
  Scenario s;
  s.name = name;
  s.seed = seed;
  s.noise.seed = seed;
  switch (name) {
    case ScenarioName::pearson:
      s.fit.degree = 1;
      s.fit.reduction_factor = 100.0;
      break;
    case ScenarioName::hidden_line:
      s.fit.degree = 1;
      s.fit.reduction_factor = 1e4;
      break;
    case ScenarioName::legendre_signal:
      s.fit.degree = 7;
      s.fit.reduction_factor = 1e6;
      break;
    case ScenarioName::parabola_outliers:
      s.fit.degree = 2;
      s.fit.reduction_factor = 20.0;
      s.history_per_decade = 8;
      break;
    case ScenarioName::image_denoise:
      s.noise.probability = 0.15;
      s.noise.safety = 0.5;
      break;
  }
  return s;
}

/// Throws Error unless the embedded Pearson table reproduces the published
/// uniform-weight line f(x) = 0.96845 - 0.90747 x to 1e-4.
inline void check_pearson_fixture() {
  const auto uw = uniform_baseline(adapt(pearson_data()), 1);
  if (!(std::abs(uw.model[0] - 0.96845) <= 1e-4 && std::abs(uw.model[1] + 0.90747) <= 1e-4)) {
    throw Error("Pearson fixture does not reproduce the reference uniform fit");
  }
}

inline RawDataset generate_curve(const Scenario& s) {
  switch (s.name) {
    case ScenarioName::pearson: return pearson_data();
    case ScenarioName::hidden_line: return hidden_line_data(s.seed);
    case ScenarioName::legendre_signal: return legendre_signal_data(s.seed);
    case ScenarioName::parabola_outliers: return parabola_outlier_data(s.seed);
    case ScenarioName::image_denoise: break;
  }
  throw InvalidInput("scenario '" + std::string(to_string(s.name)) + "' does not produce a curve data set");
}

inline ImageGrid generate_image(const Scenario& s) {
  if (s.name != ScenarioName::image_denoise) {
    throw InvalidInput("scenario '" + std::string(to_string(s.name)) + "' does not produce an image");
  }
  return synthetic_image(s.image_rows, s.image_cols);
}

struct CurveReport {
  RawDataset raw;
  AdaptedDataset data;
  UniformBaseline uniform;
  FitResult mew;
  bool converged = true;
  std::string error;  // set when the fit stopped early; mew holds the best state
  OutlierReport outliers;
  std::vector<WeightHistoryRow> history;

  PolynomialModel uniform_unscaled() const { return unscale(uniform.model, data.scale()); }
  PolynomialModel mew_unscaled() const { return unscale(mew.model, data.scale()); }
};

struct ImageReport {
  ImageGrid truth;
  NoisyImage noisy;
  DenoiseResult result;
  double psnr_noisy = 0.0;
  double psnr_clean = 0.0;
  DetectionScore score;
};

struct ReportBundle {
  Scenario scenario;
  std::variant<CurveReport, ImageReport> body;
};

/// Fits one curve data set the way every curve scenario does.
inline CurveReport analyze_curve(const RawDataset& raw, const FitConfig& cfg, int history_per_decade,
                                 std::optional<double> outlier_threshold = std::nullopt) {
  auto data = adapt(raw);
  auto uniform = uniform_baseline(data, cfg.degree);
  auto [fit, converged, error] = [&]() -> std::tuple<FitResult, bool, std::string> {
    try {
      return {mem_fit(data, cfg), true, {}};
    } catch (const NoConvergence& ex) {
      return {ex.best(), false, ex.what()};
    }
  }();
  auto outliers = detect(data, fit, outlier_threshold.value_or(default_outlier_threshold(data.size())));
  const auto grid = log_grid(cfg.reduction_factor, history_per_decade);
  auto history = weight_history(data, cfg, grid);
  return CurveReport{raw,       std::move(data), std::move(uniform), std::move(fit), converged, std::move(error),
                     std::move(outliers), std::move(history)};
}

inline ReportBundle run(const Scenario& s) {
  if (s.name == ScenarioName::image_denoise) {
    ImageReport rep;
    rep.truth = generate_image(s);
    NoiseSpec spec = s.noise;
    rep.noisy = inject_noise(rep.truth, spec);
    rep.result = denoise(rep.noisy.image, s.denoise);
    rep.psnr_noisy = psnr(rep.noisy.image, rep.truth);
    rep.psnr_clean = psnr(rep.result.clean, rep.truth);
    rep.score = score_flags(rep.result.flagged, rep.noisy.mask);
    return {s, std::move(rep)};
  }
  if (s.name == ScenarioName::pearson) check_pearson_fixture();
  return {s, analyze_curve(generate_curve(s), s.fit, s.history_per_decade)};
}

}  // namespace mewfit
