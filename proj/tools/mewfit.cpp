// mewfit: maximal-entropy weighted least-squares fitting from the shell.
//
//   mewfit fit data.csv --degree 1 --reduce 100 --out-dir out
//   mewfit denoise image.pgm --inject 0.15,0.5,7 --out-dir out
//   mewfit experiment pearson --out-dir out
//   mewfit synth-image truth.pgm
//
// Exit codes: 0 ok, 2 fit did not converge (report still written) or the
// computation failed, 3 bad input.

#include <cctype>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mewfit/mewfit.hpp"

namespace {

using namespace mewfit;

constexpr int kExitOk = 0;
constexpr int kExitNoConvergence = 2;
constexpr int kExitInput = 3;

struct FitOptions {
  std::optional<int> degree;
  std::optional<double> reduce;
  std::optional<int> stages;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<double> weight_floor;
  std::optional<double> beta_max;
  bool no_cap_beta = false;
  std::optional<double> threshold;
  std::optional<int> history_per_decade;

  void apply(FitConfig& c) const {
    if (degree) c.degree = *degree;
    if (reduce) c.reduction_factor = *reduce;
    if (stages) c.continuation_steps = *stages;
    if (tol) c.outer_tol = *tol;
    if (max_iter) c.outer_max_iter = *max_iter;
    if (weight_floor) c.weight_floor = *weight_floor;
    if (beta_max) c.beta_max = *beta_max;
    if (no_cap_beta) c.cap_beta = false;
  }
};

struct DenoiseOptions {
  std::optional<int> window;
  std::optional<int> win_degree;
  std::vector<double> schedule;
  std::optional<std::string> sweep;
  std::optional<double> weight_tol;
  std::optional<double> min_deviation;
  std::optional<int> passes;

  void apply(DenoiseConfig& c) const {
    if (window) c.window = *window;
    if (win_degree) c.degree = *win_degree;
    if (!schedule.empty()) c.mse_schedule = schedule;
    if (sweep) c.sweep_order = parse_sweep(*sweep);
    if (weight_tol) c.weight_tol = *weight_tol;
    if (min_deviation) c.min_deviation = *min_deviation;
    if (passes) c.max_passes = *passes;
  }

  static SweepOrder parse_sweep(const std::string& s) {
    if (s == "rows") return SweepOrder::rows_then_columns;
    if (s == "columns") return SweepOrder::columns_then_rows;
    if (s == "alternating") return SweepOrder::alternating;
    throw InvalidInput("unknown sweep order '" + s + "' (rows, columns, alternating)");
  }
};

template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& target, const std::string& help) {
  std::string env = "MEWFIT_";
  for (char c : name) env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return app->add_option("--" + name, target, help)->envname(env);
}

void add_fit_flags(CLI::App* app, FitOptions& o) {
  flag(app, "degree", o.degree, "polynomial degree m (default 1)");
  flag(app, "reduce", o.reduce, "reduction factor r >= 1; target mse = mse_uw / r (default 1)");
  flag(app, "stages", o.stages, "continuation stages K, 0 = automatic (default 0)");
  flag(app, "tol", o.tol, "outer convergence tolerance (default 1e-12)");
  flag(app, "max-iter", o.max_iter, "outer iteration cap per stage (default 20000)");
  flag(app, "weight-floor", o.weight_floor, "weights below this are set to zero (default 1e-300)");
  flag(app, "beta-max", o.beta_max, "upper bound on beta (default 1e12)");
  app->add_flag("--no-cap-beta", o.no_cap_beta, "fail instead of capping beta when a target is unreachable")
      ->envname("MEWFIT_NO_CAP_BETA");
  flag(app, "threshold", o.threshold, "outlier weight threshold (default 1e-3/n)");
  flag(app, "history-per-decade", o.history_per_decade, "r-grid points per decade in history.csv");
}

void add_denoise_flags(CLI::App* app, DenoiseOptions& o) {
  flag(app, "window", o.window, "odd window width W (default 15)");
  flag(app, "win-degree", o.win_degree, "window polynomial degree (default 3)");
  flag(app, "schedule", o.schedule, "ascending reduction factors per window (default 2,5,10,20)")
      ->delimiter(',');
  flag(app, "sweep", o.sweep, "rows | columns | alternating (default alternating)")
      ->check(CLI::IsMember({"rows", "columns", "alternating"}));
  flag(app, "weight-tol", o.weight_tol, "flag pixels whose weight falls below this (default 5e-3)");
  flag(app, "min-deviation", o.min_deviation, "ignore deviations smaller than this intensity (default 0.03)");
  flag(app, "passes", o.passes, "maximum number of passes (default 4)");
}

/// "P,alpha" or "P,alpha,seed".
NoiseSpec parse_inject(const std::string& s, std::uint64_t default_seed) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(',', start);
    parts.push_back(s.substr(start, pos == std::string::npos ? pos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) throw InvalidInput("--inject expects P,alpha[,seed]");
  NoiseSpec spec;
  double v = 0.0;
  if (!detail::parse_number(parts[0], v)) throw InvalidInput("--inject: bad probability '" + parts[0] + "'");
  spec.probability = v;
  if (!detail::parse_number(parts[1], v)) throw InvalidInput("--inject: bad safety factor '" + parts[1] + "'");
  spec.safety = v;
  spec.seed = default_seed;
  if (parts.size() == 3) {
    try {
      std::size_t used = 0;
      spec.seed = std::stoull(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InvalidInput("--inject: bad seed '" + parts[2] + "'");
    }
  }
  spec.validate();
  return spec;
}

bool is_input_error(const Error& e) {
  return dynamic_cast<const InvalidInput*>(&e) || dynamic_cast<const ParseError*>(&e) ||
         dynamic_cast<const DegenerateRange*>(&e) || dynamic_cast<const LengthMismatch*>(&e) ||
         dynamic_cast<const DimensionMismatch*>(&e) || dynamic_cast<const DegreeTooHigh*>(&e) ||
         dynamic_cast<const UnknownScenario*>(&e) || dynamic_cast<const SingularSystem*>(&e);
}

int report_curve(const std::string& dir, const RunManifest& m, const CurveReport& r) {
  write_curve_bundle(dir, m, r);
  const auto& s = r.mew.state;
  std::printf("mse_uw %s  mse %s  beta %s  H %s  outliers %zu\n", fmt(r.mew.mse_uw).c_str(), fmt(s.mse).c_str(),
              fmt(s.beta).c_str(), fmt(s.H).c_str(), r.outliers.outlier_count());
  std::printf("report written to %s\n", dir.c_str());
  if (!r.converged) {
    std::fprintf(stderr, "mewfit: fit did not converge: %s\n", r.error.c_str());
    return kExitNoConvergence;
  }
  return kExitOk;
}

int run_fit(const std::string& input, const FitOptions& o, const std::string& out_dir) {
  FitConfig cfg;
  o.apply(cfg);
  cfg.validate();
  const auto raw = read_csv_file(input);
  RunManifest m;
  m.subcommand = "fit";
  m.inputs = {input};
  add_config(m, cfg);
  const int per_decade = o.history_per_decade.value_or(4);
  m.set("history-per-decade", per_decade);
  if (o.threshold) m.set("threshold", *o.threshold);
  const auto rep = analyze_curve(raw, cfg, per_decade, o.threshold);
  return report_curve(out_dir, m, rep);
}

int run_denoise(const std::string& input, const DenoiseOptions& o, const std::optional<std::string>& inject,
                const std::optional<std::string>& truth_path, std::uint64_t seed, const std::string& out_dir) {
  DenoiseConfig cfg;
  o.apply(cfg);
  cfg.validate();
  auto pgm = read_pgm_file(input);
  RunManifest m;
  m.subcommand = "denoise";
  m.inputs = {input};
  ImageBundle b;
  b.format = pgm.format;
  if (inject) {
    const auto spec = parse_inject(*inject, seed);
    m.seed = spec.seed;
    add_config(m, spec);
    auto noisy = inject_noise(pgm.image, spec);
    b.truth = pgm.image;
    b.truth_mask = std::move(noisy.mask);
    b.input = std::move(noisy.image);
    b.write_input = true;
  } else {
    b.input = std::move(pgm.image);
  }
  if (truth_path) {
    if (inject) throw InvalidInput("--truth and --inject are mutually exclusive");
    m.inputs.push_back(*truth_path);
    auto truth = read_pgm_file(*truth_path).image;
    if (!truth.same_shape(b.input)) throw DimensionMismatch("--truth image differs in size from the input");
    PixelMask mask(truth.rows(), truth.cols(), 0);
    for (std::size_t k = 0; k < mask.size(); ++k) mask.values()[k] = truth.values()[k] != b.input.values()[k];
    b.truth = std::move(truth);
    b.truth_mask = std::move(mask);
  }
  add_config(m, cfg);
  b.result = denoise(b.input, cfg);
  write_image_bundle(out_dir, m, b);
  for (const auto& [k, v] : image_metrics(b)) std::printf("%s %s\n", k.c_str(), v.c_str());
  std::printf("report written to %s\n", out_dir.c_str());
  return kExitOk;
}

int run_experiment(const std::string& name, std::uint64_t seed, const FitOptions& fo, const DenoiseOptions& dopt,
                   const std::string& out_dir) {
  auto s = default_scenario(parse_scenario_name(name), seed);
  fo.apply(s.fit);
  if (fo.history_per_decade) s.history_per_decade = *fo.history_per_decade;
  dopt.apply(s.denoise);
  s.fit.validate();
  s.denoise.validate();
  const auto bundle = run(s);
  const std::string dir = out_dir.empty() ? "mewfit-" + name : out_dir;
  if (const auto* c = std::get_if<CurveReport>(&bundle.body)) return report_curve(dir, scenario_manifest(s), *c);
  write_bundle(dir, bundle);
  for (const auto& [k, v] : image_metrics(to_bundle(std::get<ImageReport>(bundle.body)))) {
    std::printf("%s %s\n", k.c_str(), v.c_str());
  }
  std::printf("report written to %s\n", dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximal-entropy weighted least-squares fitting, outlier removal and image denoising"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string out_dir;
  std::uint64_t seed = kDefaultSeed;

  auto* fit = app.add_subcommand("fit", "fit a polynomial to X,Y data from a CSV file");
  std::string fit_input;
  FitOptions fit_opts;
  fit->add_option("input", fit_input, "CSV file with two columns X,Y (header optional)")->required();
  add_fit_flags(fit, fit_opts);
  flag(fit, "out-dir", out_dir, "output directory")->default_val("mewfit-out");

  auto* den = app.add_subcommand("denoise", "detect and repair corrupted pixels in a PGM image");
  std::string den_input;
  DenoiseOptions den_opts;
  std::optional<std::string> inject, truth;
  den->add_option("input", den_input, "PGM image (P2 or P5, maxval 255)")->required();
  add_denoise_flags(den, den_opts);
  flag(den, "inject", inject, "corrupt the input first: P,alpha[,seed]; the input is then the truth");
  flag(den, "truth", truth, "noise-free reference PGM for scoring");
  flag(den, "seed", seed, "seed for --inject when it has no seed part");
  flag(den, "out-dir", out_dir, "output directory")->default_val("mewfit-out");

  auto* exp = app.add_subcommand("experiment", "run a reference scenario and write its report bundle");
  std::string name;
  FitOptions exp_fit;
  DenoiseOptions exp_den;
  exp->add_option("name", name, "pearson | hidden-line | legendre-signal | parabola-outliers | image-denoise")
      ->required();
  flag(exp, "seed", seed, "scenario seed");
  add_fit_flags(exp, exp_fit);
  add_denoise_flags(exp, exp_den);
  flag(exp, "out-dir", out_dir, "output directory (default mewfit-<name>)");

  auto* synth = app.add_subcommand("synth-image", "write the smooth synthetic test image");
  std::string synth_out;
  std::size_t rows = 99, cols = 350;
  bool ascii = false;
  synth->add_option("output", synth_out, "PGM file to write")->required();
  synth->add_option("--rows", rows, "image height")->capture_default_str();
  synth->add_option("--cols", cols, "image width")->capture_default_str();
  synth->add_flag("--ascii", ascii, "write P2 instead of P5");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*fit) return run_fit(fit_input, fit_opts, out_dir);
    if (*den) return run_denoise(den_input, den_opts, inject, truth, seed, out_dir);
    if (*exp) return run_experiment(name, seed, exp_fit, exp_den, out_dir);
    if (*synth) {
      if (rows == 0 || cols == 0) throw InvalidInput("synth-image: empty size");
      write_pgm_file(synth_out, synthetic_image(rows, cols), ascii ? PgmFormat::ascii : PgmFormat::binary);
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "mewfit: " << e.what() << '\n';
    return is_input_error(e) ? kExitInput : kExitNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "mewfit: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}
