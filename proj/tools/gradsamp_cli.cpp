// Command-line front end: synthetic data generation, full and subsampled
// least-squares solves, error-bound diagnostics, experiment sweeps, and the
// stage-timing benchmark.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradsamp/gradsamp.hpp"

namespace {

using namespace gradsamp;

struct DataSourceOptions {
  std::string input;
  std::string y_column = "y";
  bool no_header = false;

  Eigen::Index n = 20000;
  Eigen::Index d = 100;
  std::string preset = "GA";
  double mu = std::numeric_limits<double>::quiet_NaN();
  double theta_mg = std::numeric_limits<double>::quiet_NaN();
  double sigma_x = std::numeric_limits<double>::quiet_NaN();
  double sigma_eps = 10.0;
  std::string misspec = "none";
  double rho = 0.0;
};

void add_synthetic_options(CLI::App* cmd, DataSourceOptions& opt) {
  cmd->add_option("--n", opt.n, "Synthetic sample size");
  cmd->add_option("--d", opt.d, "Synthetic dimension");
  cmd->add_option("--preset", opt.preset, "Design preset: GA, MG1, MG2, MG3");
  cmd->add_option("--mu", opt.mu, "Mixture component mean offset (overrides preset)");
  cmd->add_option("--theta", opt.theta_mg, "Second-component std multiplier");
  cmd->add_option("--sigma-x", opt.sigma_x, "Base entry std");
  cmd->add_option("--sigma-eps", opt.sigma_eps, "Noise std");
  cmd->add_option("--misspec", opt.misspec,
                  "Noise model: none, heteroscedastic, ar_errors, error_predictor_corr");
  cmd->add_option("--rho", opt.rho, "Misspecification strength");
}

void add_input_options(CLI::App* cmd, DataSourceOptions& opt) {
  cmd->add_option("--input", opt.input, "CSV dataset path (otherwise synthetic)");
  cmd->add_option("--y-column", opt.y_column, "Response column (name or 0-based index)");
  cmd->add_flag("--no-header", opt.no_header, "CSV has no header row");
}

SyntheticSpec synthetic_spec(const DataSourceOptions& opt) {
  SyntheticSpec spec;
  spec.n = opt.n;
  spec.d = opt.d;
  spec.mixture = detail::mixture_preset(opt.preset);
  if (!std::isnan(opt.mu)) spec.mixture.mu = opt.mu;
  if (!std::isnan(opt.theta_mg)) spec.mixture.theta_mg = opt.theta_mg;
  if (!std::isnan(opt.sigma_x)) spec.mixture.sigma_x = opt.sigma_x;
  spec.response.sigma_eps = opt.sigma_eps;
  spec.response.misspec = detail::parse_misspec(opt.misspec);
  spec.response.rho = opt.rho;
  spec.response.hidden = spec.mixture;
  return spec;
}

Dataset resolve_dataset(const DataSourceOptions& opt, RngSeed seed) {
  if (!opt.input.empty()) {
    return load_csv_auto(opt.input, opt.y_column, !opt.no_header);
  }
  return make_synthetic_dataset(synthetic_spec(opt), seed);
}

ProbabilityVector compute_probs(const Dataset& data, const LsSolution& full,
                                ProbMethod method, Eigen::Index r0,
                                Eigen::Index sketch_rows, RngSeed seed) {
  switch (method) {
    case ProbMethod::uniform:
      return uniform_probs(data.n());
    case ProbMethod::leverage:
      return leverage_probs(data.x);
    case ProbMethod::approx_leverage:
      return approx_leverage_probs(
          data.x, sketch_rows > 0 ? sketch_rows : 20 * data.d(),
          derive_seed(seed, 2));
    case ProbMethod::gradient: {
      const LsSolution pilot = pilot_estimate(data, r0, derive_seed(seed, 1));
      return gradient_probs(data, pilot.beta);
    }
    case ProbMethod::residual_oracle:
      return residual_oracle_probs(data, full.beta);
  }
  throw std::invalid_argument("unknown probability method");
}

void print_bound_report(const BoundReport& rep, double r) {
  std::printf("sigma_sq_Sigma   %.17g\n", rep.sigma_sq_Sigma);
  std::printf("sigma_sq_b       %.17g\n", rep.sigma_sq_b);
  std::printf("R                %.17g\n", rep.max_sq_row_norm);
  std::printf("lambda_min       %.17g\n", rep.lambda_min);
  std::printf("delta            %.17g\n", rep.delta);
  std::printf("C                %.17g\n", rep.C);
  std::printf("C1               %.17g\n", rep.C1);
  std::printf("C2               %.17g\n", rep.C2);
  if (rep.r_min.has_value()) {
    std::printf("r_min            %.17g\n", *rep.r_min);
  } else {
    std::printf("r_min            infeasible (delta too small)\n");
  }
  std::printf("bound_at_r       %.17g  (r = %.17g)\n", rep.bound_at_r, r);
  std::printf("two_term_bound   %.17g\n", two_term_error_bound(rep, r));
}

int run(int argc, char** argv) {
  CLI::App app{"Randomized subsampling for fast approximate least squares"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset to CSV");
  DataSourceOptions gen_opt;
  std::uint64_t gen_seed = 42;
  std::string gen_output;
  bool gen_no_header = false;
  add_synthetic_options(gen, gen_opt);
  gen->add_option("--seed", gen_seed, "Master seed");
  gen->add_option("-o,--output", gen_output, "Output CSV path")->required();
  gen->add_flag("--no-header", gen_no_header, "Omit the header row");

  // solve
  auto* solve = app.add_subcommand("solve", "Full least squares on a CSV dataset");
  DataSourceOptions solve_opt;
  add_input_options(solve, solve_opt);
  solve->get_option("--input")->required();

  // sample-solve
  auto* ss = app.add_subcommand(
      "sample-solve", "One subsampled solve: prints the estimate and its bound");
  DataSourceOptions ss_opt;
  add_input_options(ss, ss_opt);
  add_synthetic_options(ss, ss_opt);
  std::string ss_method = "gradient";
  std::string ss_scheme = "poisson";
  double ss_r = 1000.0;
  double ss_r0 = 0.0;
  double ss_delta = 0.1;
  std::uint64_t ss_seed = 42;
  bool ss_redistribute = false;
  Eigen::Index ss_sketch = 0;
  ss->add_option("--method", ss_method,
                 "uniform, leverage, approx_leverage, gradient, residual_oracle");
  ss->add_option("--scheme", ss_scheme, "poisson or replacement");
  ss->add_option("--r", ss_r, "Expected subsample size")->required();
  ss->add_option("--r0", ss_r0, "Pilot size for gradient (default: r)");
  ss->add_option("--delta", ss_delta, "Bound failure probability");
  ss->add_option("--seed", ss_seed, "Master seed");
  ss->add_flag("--redistribute", ss_redistribute,
               "Rescale capped inclusion probabilities to keep sum p = min(r, n)");
  ss->add_option("--sketch-rows", ss_sketch, "Sketch rows for approx_leverage");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a config-driven method sweep");
  std::string exp_config;
  std::string exp_output;
  std::uint64_t exp_seed = 0;
  int exp_threads = -1;
  exp->add_option("--config", exp_config, "Config file path")->required();
  exp->add_option("--output", exp_output, "Override report output path");
  auto* exp_seed_opt = exp->add_option("--seed", exp_seed, "Override master seed");
  exp->add_option("--threads", exp_threads, "Override worker thread count");

  // bench
  auto* bench = app.add_subcommand("bench", "Stage timings across sample sizes");
  std::vector<Eigen::Index> bench_n;
  Eigen::Index bench_d = 50;
  std::string bench_method = "gradient";
  double bench_r = 1000.0;
  int bench_reps = 3;
  std::uint64_t bench_seed = 42;
  bench->add_option("--n-list", bench_n, "Sample sizes (comma separated)")
      ->required()
      ->delimiter(',');
  bench->add_option("--d", bench_d, "Dimension");
  bench->add_option("--method", bench_method, "Probability method");
  bench->add_option("--r", bench_r, "Expected subsample size");
  bench->add_option("--reps", bench_reps, "Trials per stage (best is kept)");
  bench->add_option("--seed", bench_seed, "Master seed");

  // bound
  auto* bound = app.add_subcommand("bound", "Error-bound diagnostics for one dataset");
  DataSourceOptions bound_opt;
  add_input_options(bound, bound_opt);
  add_synthetic_options(bound, bound_opt);
  std::string bound_method = "gradient";
  double bound_r = 1000.0;
  double bound_r0 = 0.0;
  double bound_delta = 0.1;
  std::uint64_t bound_seed = 42;
  Eigen::Index bound_sketch = 0;
  bound->add_option("--method", bound_method, "Probability method for the constants");
  bound->add_option("--r", bound_r, "Expected subsample size");
  bound->add_option("--r0", bound_r0, "Pilot size for gradient (default: r)");
  bound->add_option("--delta", bound_delta, "Bound failure probability");
  bound->add_option("--seed", bound_seed, "Master seed");
  bound->add_option("--sketch-rows", bound_sketch, "Sketch rows for approx_leverage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (gen->parsed()) {
    const Dataset data =
        make_synthetic_dataset(synthetic_spec(gen_opt), RngSeed{gen_seed});
    write_dataset_csv(data, gen_output, !gen_no_header);
    std::printf("wrote %lld rows, %lld predictors to %s\n",
                static_cast<long long>(data.n()), static_cast<long long>(data.d()),
                gen_output.c_str());
    return 0;
  }

  if (solve->parsed()) {
    const Dataset data =
        load_csv_auto(solve_opt.input, solve_opt.y_column, !solve_opt.no_header);
    const LsSolution sol = solve_full(data);
    std::printf("n %lld  d %lld\n", static_cast<long long>(data.n()),
                static_cast<long long>(data.d()));
    for (Eigen::Index j = 0; j < sol.beta.size(); ++j) {
      std::printf("beta[%lld] = %.17g\n", static_cast<long long>(j), sol.beta(j));
    }
    std::printf("residual_norm %.17g\n", sol.residual_norm);
    std::printf("gram_min_eigenvalue %.17g\n", sol.gram_min_eigenvalue);
    return 0;
  }

  if (ss->parsed()) {
    const RngSeed seed{ss_seed};
    const Dataset data = resolve_dataset(ss_opt, seed);
    const LsSolution full = solve_full(data);
    const ProbMethod method = detail::parse_method(ss_method);
    const DrawScheme scheme = detail::parse_scheme(ss_scheme);
    const Eigen::Index r0 =
        static_cast<Eigen::Index>(std::llround(ss_r0 > 0.0 ? ss_r0 : ss_r));
    const ProbabilityVector pi =
        compute_probs(data, full, method, r0, ss_sketch, seed);

    SubsampleDraw draw;
    if (scheme == DrawScheme::poisson) {
      const InclusionProbabilities inc = to_inclusion(pi, ss_r, ss_redistribute);
      draw = poisson_sample(inc, pi, ss_r, derive_seed(seed, 3));
    } else {
      draw = replacement_sample(
          pi,
          std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(ss_r))),
          derive_seed(seed, 3));
    }
    const LsSolution sol = solve_weighted(data, draw);

    std::printf("method %s  scheme %s  r %.17g  realized %lld\n",
                to_string(method), to_string(scheme), ss_r,
                static_cast<long long>(draw.realized_size));
    for (Eigen::Index j = 0; j < sol.beta.size(); ++j) {
      std::printf("beta[%lld] = %.17g\n", static_cast<long long>(j), sol.beta(j));
    }
    const double err = (sol.beta - full.beta).norm();
    std::printf("excess_error %.17g\n", err);
    const BoundReport rep = make_bound_report(data, full.beta, pi, ss_delta, ss_r,
                                              full.gram_min_eigenvalue);
    print_bound_report(rep, ss_r);
    std::printf("within_bound %s\n", err <= rep.bound_at_r ? "yes" : "no");
    return 0;
  }

  if (exp->parsed()) {
    ExperimentConfig cfg = parse_experiment_config(exp_config);
    if (exp_seed_opt->count() > 0) cfg.master_seed = RngSeed{exp_seed};
    if (exp_threads >= 0) cfg.threads = exp_threads;
    if (!exp_output.empty()) cfg.output_path = exp_output;
    const ExperimentReport report = run_experiment(cfg);
    if (cfg.output_path.empty()) {
      emit_report_csv(report, std::cout);
    } else {
      emit_report(report, cfg.format, cfg.output_path);
      std::printf("wrote %zu records to %s\n", report.records.size(),
                  cfg.output_path.c_str());
    }
    return 0;
  }

  if (bench->parsed()) {
    const auto rows =
        timing_benchmark(bench_n, bench_d, detail::parse_method(bench_method),
                         bench_r, RngSeed{bench_seed}, bench_reps);
    std::printf("n,d1_ms,pilot_ms,d2_ms\n");
    for (const auto& row : rows) {
      std::printf("%lld,%.6f,%.6f,%.6f\n", static_cast<long long>(row.n),
                  row.d1_ms, row.pilot_ms, row.d2_ms);
    }
    return 0;
  }

  if (bound->parsed()) {
    const RngSeed seed{bound_seed};
    const Dataset data = resolve_dataset(bound_opt, seed);
    const LsSolution full = solve_full(data);
    const ProbMethod method = detail::parse_method(bound_method);
    const Eigen::Index r0 =
        static_cast<Eigen::Index>(std::llround(bound_r0 > 0.0 ? bound_r0 : bound_r));
    const ProbabilityVector pi =
        compute_probs(data, full, method, r0, bound_sketch, seed);
    const BoundReport rep = make_bound_report(data, full.beta, pi, bound_delta,
                                              bound_r, full.gram_min_eigenvalue);
    std::printf("method %s  n %lld  d %lld\n", to_string(method),
                static_cast<long long>(data.n()), static_cast<long long>(data.d()));
    print_bound_report(rep, bound_r);
    const DispersionSummary disp = probability_dispersion(pi);
    std::printf("log_pi quartiles %.6g %.6g %.6g %.6g %.6g  variance %.6g"
                "  zeros %lld\n",
                disp.min, disp.q1, disp.median, disp.q3, disp.max, disp.variance,
                static_cast<long long>(disp.zero_count));
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ExcessiveFailures& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const SingularGram& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const EmptyDraw& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const DegenerateGradients& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const DivisionByZeroProb& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const DimensionMismatch& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
