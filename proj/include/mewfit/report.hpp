#pragma once
// Report bundles: a manifest-headed report.txt plus plot-ready CSV tables.
//
// report.txt layout:
//   manifest lines (key: value), one per resolved setting
//   timestamp: <UTC time>          <- the only line that varies between runs
//   (blank line)
//   summary lines (key: value)

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mewfit/denoise.hpp"
#include "mewfit/experiments.hpp"
#include "mewfit/io.hpp"

namespace mewfit {

inline constexpr const char* kVersion = "0.1.0";

struct RunManifest {
  std::string subcommand;
  std::vector<std::string> inputs;
  std::vector<std::pair<std::string, std::string>> config;
  std::optional<std::uint64_t> seed;
  std::string version = kVersion;

  void set(std::string key, std::string value) { config.emplace_back(std::move(key), std::move(value)); }
  void set(std::string key, double value) { set(std::move(key), fmt(value)); }
  void set(std::string key, int value) { set(std::move(key), std::to_string(value)); }
  void set(std::string key, bool value) { set(std::move(key), std::string(value ? "true" : "false")); }
};

inline std::string join(std::span<const double> v, char sep = ' ') {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += sep;
    s += fmt(v[k]);
  }
  return s;
}

inline std::string to_string(SweepOrder s) {
  switch (s) {
    case SweepOrder::rows_then_columns: return "rows";
    case SweepOrder::columns_then_rows: return "columns";
    case SweepOrder::alternating: return "alternating";
  }
  return "?";
}

inline void add_config(RunManifest& m, const FitConfig& c) {
  m.set("degree", c.degree);
  m.set("reduce", c.reduction_factor);
  m.set("stages", c.resolved_stages());
  m.set("tol", c.outer_tol);
  m.set("max-iter", c.outer_max_iter);
  m.set("weight-floor", c.weight_floor);
  m.set("beta-max", c.beta_max);
  m.set("cap-beta", c.cap_beta);
  m.set("max-refinements", c.max_refinements);
}

inline void add_config(RunManifest& m, const DenoiseConfig& c) {
  m.set("window", c.window);
  m.set("win-degree", c.degree);
  m.set("schedule", join(c.mse_schedule, ','));
  m.set("weight-tol", c.weight_tol);
  m.set("min-deviation", c.min_deviation);
  m.set("sweep", to_string(c.sweep_order));
  m.set("passes", c.max_passes);
  m.set("win-max-iter", c.outer_max_iter);
}

inline void add_config(RunManifest& m, const NoiseSpec& s) {
  m.set("inject", fmt(s.probability) + "," + fmt(s.safety) + "," + std::to_string(s.seed));
}

inline RunManifest scenario_manifest(const Scenario& s) {
  RunManifest m;
  m.subcommand = "experiment";
  m.seed = s.seed;
  m.set("scenario", std::string(to_string(s.name)));
  if (s.name == ScenarioName::image_denoise) {
    m.set("rows", static_cast<int>(s.image_rows));
    m.set("cols", static_cast<int>(s.image_cols));
    add_config(m, s.noise);
    add_config(m, s.denoise);
  } else {
    add_config(m, s.fit);
    m.set("history-per-decade", s.history_per_decade);
  }
  return m;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_manifest(std::ostream& out, const RunManifest& m) {
  out << "mewfit-report: " << m.version << '\n';
  out << "subcommand: " << m.subcommand << '\n';
  for (const auto& in : m.inputs) out << "input: " << in << '\n';
  if (m.seed) out << "seed: " << *m.seed << '\n';
  for (const auto& [k, v] : m.config) out << k << ": " << v << '\n';
  out << "timestamp: " << utc_timestamp() << "\n\n";
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  return out;
}

inline void kv(std::ostream& out, const char* key, const std::string& v) { out << key << ": " << v << '\n'; }
inline void kv(std::ostream& out, const char* key, double v) { kv(out, key, fmt(v)); }

}  // namespace detail

inline void write_curve_summary(std::ostream& out, const CurveReport& r) {
  using detail::kv;
  const auto& s = r.mew.state;
  const auto& sc = r.data.scale();
  kv(out, "n", std::to_string(r.data.size()));
  kv(out, "status", r.converged ? std::string("converged") : "no-convergence: " + r.error);
  kv(out, "perfect-fit", std::string(r.mew.perfect_fit ? "true" : "false"));
  kv(out, "scale", join(std::vector<double>{sc.y_min, sc.y_max, sc.x_min, sc.x_max}));
  kv(out, "uw-adapted", join(r.uniform.model.coeffs()));
  kv(out, "uw-unscaled", join(r.uniform_unscaled().coeffs()));
  kv(out, "mew-adapted", join(r.mew.model.coeffs()));
  kv(out, "mew-unscaled", join(r.mew_unscaled().coeffs()));
  kv(out, "mse-uw", r.mew.mse_uw);
  kv(out, "target-mse", r.mew.target_mse);
  kv(out, "mse", s.mse);
  kv(out, "beta", s.beta);
  kv(out, "H", s.H);
  kv(out, "ln-Q", s.log_Q);
  kv(out, "alpha", s.alpha());
  kv(out, "iterations", std::to_string(r.mew.iterations));
  kv(out, "stages", std::to_string(r.mew.trace.size() - 1));
  kv(out, "outlier-threshold", r.outliers.threshold);
  std::string idx;
  for (auto i : r.outliers.outlier_indices()) idx += (idx.empty() ? "" : " ") + std::to_string(i + 1);
  kv(out, "outliers", std::to_string(r.outliers.outlier_count()));
  kv(out, "outlier-indices", idx.empty() ? std::string("-") : idx);
  if (r.outliers.comparison) kv(out, "pruned-uw-adapted", join(r.outliers.comparison->coeffs()));
}

inline void write_weights_csv(std::ostream& out, const CurveReport& r) {
  const auto e = residuals(r.mew.model, r.data);
  const auto e_uw = residuals(r.uniform.model, r.data);
  out << "i,X,Y,x,y,e,p,outlier,e_uw\n";
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    out << i + 1 << ',' << fmt(r.raw.x()[i]) << ',' << fmt(r.raw.y()[i]) << ',' << fmt(r.data.x()[i]) << ','
        << fmt(r.data.y()[i]) << ',' << fmt(e[i]) << ',' << fmt(r.mew.state.p[i]) << ','
        << (r.outliers.labels[i] == PointLabel::outlier ? 1 : 0) << ',' << fmt(e_uw[i]) << '\n';
  }
}

inline void write_trace_csv(std::ostream& out, const FitResult& f) {
  out << "stage,r,mse,H,beta\n";
  for (std::size_t k = 0; k < f.trace.size(); ++k) {
    const auto& t = f.trace[k];
    out << k << ',' << fmt(t.r) << ',' << fmt(t.mse) << ',' << fmt(t.H) << ',' << fmt(t.beta) << '\n';
  }
}

inline void write_history_csv(std::ostream& out, const std::vector<WeightHistoryRow>& rows, std::size_t n) {
  out << "r,ok,mse,H,beta";
  for (std::size_t i = 1; i <= n; ++i) out << ",p" << i;
  out << '\n';
  for (const auto& row : rows) {
    out << fmt(row.r) << ',' << (row.ok ? 1 : 0) << ',' << fmt(row.mse) << ',' << fmt(row.H) << ','
        << fmt(row.beta);
    for (std::size_t i = 0; i < n; ++i) out << ',' << (row.ok ? fmt(row.p[i]) : std::string("nan"));
    out << '\n';
  }
}

/// report.txt, weights.csv, trace.csv and history.csv.
inline void write_curve_bundle(const std::filesystem::path& dir, const RunManifest& m, const CurveReport& r) {
  std::filesystem::create_directories(dir);
  {
    auto out = detail::open_out(dir / "report.txt");
    write_manifest(out, m);
    write_curve_summary(out, r);
  }
  {
    auto out = detail::open_out(dir / "weights.csv");
    write_weights_csv(out, r);
  }
  {
    auto out = detail::open_out(dir / "trace.csv");
    write_trace_csv(out, r.mew);
  }
  auto out = detail::open_out(dir / "history.csv");
  write_history_csv(out, r.history, r.data.size());
}

/// Everything an image bundle can report. `truth` enables PSNR, `truth_mask`
/// enables detection scores; `input` is written out only when `write_input`.
struct ImageBundle {
  ImageGrid input;
  DenoiseResult result;
  std::optional<ImageGrid> truth;
  std::optional<PixelMask> truth_mask;
  PgmFormat format = PgmFormat::binary;
  bool write_input = false;
};

inline ImageBundle to_bundle(const ImageReport& r) {
  return {r.noisy.image, r.result, r.truth, r.noisy.mask, PgmFormat::binary, true};
}

inline std::vector<std::pair<std::string, std::string>> image_metrics(const ImageBundle& b) {
  std::vector<std::pair<std::string, std::string>> m;
  m.emplace_back("rows", std::to_string(b.input.rows()));
  m.emplace_back("cols", std::to_string(b.input.cols()));
  m.emplace_back("passes", std::to_string(b.result.passes));
  m.emplace_back("flagged", std::to_string(count_set(b.result.flagged)));
  if (b.truth) {
    const double before = psnr(b.input, *b.truth), after = psnr(b.result.clean, *b.truth);
    m.emplace_back("psnr-before", fmt(before));
    m.emplace_back("psnr-after", fmt(after));
    m.emplace_back("psnr-gain", fmt(after - before));
  }
  if (b.truth_mask) {
    const auto s = score_flags(b.result.flagged, *b.truth_mask);
    m.emplace_back("noise-density",
                   fmt(static_cast<double>(count_set(*b.truth_mask)) / static_cast<double>(b.truth_mask->size())));
    m.emplace_back("true-positive", std::to_string(s.true_positive));
    m.emplace_back("false-positive", std::to_string(s.false_positive));
    m.emplace_back("true-negative", std::to_string(s.true_negative));
    m.emplace_back("false-negative", std::to_string(s.false_negative));
    m.emplace_back("sensitivity", fmt(s.sensitivity()));
    m.emplace_back("specificity", fmt(s.specificity()));
    m.emplace_back("false-positive-rate", fmt(s.false_positive_rate()));
  }
  return m;
}

inline void write_flags_csv(std::ostream& out, const DenoiseResult& r) {
  out << "i,j,old,new,weight\n";
  for (const auto& f : r.repairs) {
    out << f.row << ',' << f.col << ',' << fmt(f.old_value) << ',' << fmt(f.new_value) << ',' << fmt(f.weight)
        << '\n';
  }
}

/// report.txt, metrics.csv, flags.csv, clean.pgm, flags.pgm, plus noisy.pgm
/// and truth.pgm when available.
inline void write_image_bundle(const std::filesystem::path& dir, const RunManifest& m, const ImageBundle& b) {
  std::filesystem::create_directories(dir);
  const auto metrics = image_metrics(b);
  {
    auto out = detail::open_out(dir / "report.txt");
    write_manifest(out, m);
    for (const auto& [k, v] : metrics) out << k << ": " << v << '\n';
  }
  {
    auto out = detail::open_out(dir / "metrics.csv");
    out << "metric,value\n";
    for (const auto& [k, v] : metrics) out << k << ',' << v << '\n';
  }
  {
    auto out = detail::open_out(dir / "flags.csv");
    write_flags_csv(out, b.result);
  }
  write_pgm_file((dir / "clean.pgm").string(), b.result.clean, b.format);
  ImageGrid mask(b.result.flagged.rows(), b.result.flagged.cols());
  for (std::size_t k = 0; k < mask.size(); ++k) mask.values()[k] = b.result.flagged.values()[k] ? 1.0 : 0.0;
  write_pgm_file((dir / "flags.pgm").string(), mask, b.format);
  if (b.write_input) write_pgm_file((dir / "noisy.pgm").string(), b.input, b.format);
  if (b.truth && b.write_input) write_pgm_file((dir / "truth.pgm").string(), *b.truth, b.format);
}

inline void write_bundle(const std::filesystem::path& dir, const ReportBundle& r) {
  const auto m = scenario_manifest(r.scenario);
  if (const auto* c = std::get_if<CurveReport>(&r.body)) {
    write_curve_bundle(dir, m, *c);
  } else {
    write_image_bundle(dir, m, to_bundle(std::get<ImageReport>(r.body)));
  }
}

}  // namespace mewfit
