#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gradsamp/bounds.hpp"
#include "gradsamp/csv.hpp"
#include "gradsamp/errors.hpp"
#include "gradsamp/linalg.hpp"
#include "gradsamp/numeric.hpp"
#include "gradsamp/probabilities.hpp"
#include "gradsamp/rng.hpp"
#include "gradsamp/sampling.hpp"
#include "gradsamp/synthesis.hpp"

namespace gradsamp {

struct MethodChoice {
  ProbMethod method = ProbMethod::gradient;
  DrawScheme scheme = DrawScheme::poisson;
};

enum class R0Policy { fixed, fraction };
enum class OutputFormat { csv, json };

struct SyntheticSpec {
  Eigen::Index n = 20000;
  Eigen::Index d = 100;
  MixtureSpec mixture{};
  ResponseSpec response{};
};

struct ExperimentConfig {
  bool synthetic = true;
  SyntheticSpec synth{};
  std::string csv_path;
  std::string y_column = "y";
  bool csv_header = true;

  std::vector<MethodChoice> methods = {
      {ProbMethod::uniform, DrawScheme::poisson},
      {ProbMethod::leverage, DrawScheme::poisson},
      {ProbMethod::gradient, DrawScheme::poisson},
  };
  std::vector<double> r_values;  // absolute expected sizes
  std::vector<double> r_ratios;  // fractions of n, appended after r_values

  R0Policy r0_policy = R0Policy::fraction;
  double r0_value = 1.0;  // fraction of r, or absolute count when fixed

  int replications = 1000;
  RngSeed master_seed{42};
  double delta = 0.1;
  bool redistribute = false;
  Eigen::Index sketch_rows = 0;  // 0 resolves to 20*d
  int threads = 0;               // 0 resolves to GRADSAMP_THREADS, else 1
  int max_retries = 10;

  std::string output_path;
  OutputFormat format = OutputFormat::csv;
};

// Aggregated results for one (method, scheme, r) cell.
struct MethodRecord {
  std::string method;
  std::string scheme;
  double r = 0.0;
  double mse = 0.0;
  double mse_se = 0.0;
  double coverage = 0.0;
  double mean_realized_size = 0.0;
  int failure_count = 0;
  int replications = 0;
  double d1_ms = 0.0;     // weight-stage wall clock (includes pilot)
  double d2_ms = 0.0;     // subsample-solve wall clock
  double pilot_ms = 0.0;  // pilot share of d1 (gradient only)
};

struct ExperimentReport {
  std::vector<MethodRecord> records;
};

// MSE = B^-1 sum_b ||btilde_b - bhat||^2.
inline double empirical_mse(const std::vector<Eigen::VectorXd>& beta_hats,
                            const Eigen::VectorXd& beta_full) {
  if (beta_hats.empty()) {
    throw std::invalid_argument("empirical_mse: empty estimate list");
  }
  std::vector<double> sq(beta_hats.size());
  for (std::size_t b = 0; b < beta_hats.size(); ++b) {
    if (beta_hats[b].size() != beta_full.size()) {
      throw DimensionMismatch("empirical_mse: estimate length mismatch");
    }
    sq[b] = (beta_hats[b] - beta_full).squaredNorm();
  }
  return mean(sq);
}

// Five-number summary and population variance of log pi over the strictly
// positive entries; zero entries are excluded and counted.
struct DispersionSummary {
  Eigen::Index zero_count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double variance = 0.0;
};

inline DispersionSummary probability_dispersion(const ProbabilityVector& pi) {
  DispersionSummary s;
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(pi.size()));
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (pi[i] > 0.0) {
      logs.push_back(std::log(pi[i]));
    } else {
      ++s.zero_count;
    }
  }
  std::sort(logs.begin(), logs.end());
  s.min = logs.front();
  s.q1 = sorted_quantile(logs, 0.25);
  s.median = sorted_quantile(logs, 0.5);
  s.q3 = sorted_quantile(logs, 0.75);
  s.max = logs.back();
  const double m = mean(logs);
  double ss = 0.0;
  for (double v : logs) ss += (v - m) * (v - m);
  s.variance = ss / static_cast<double>(logs.size());
  return s;
}

namespace detail {

// Stream tags for seed derivation; fixed so that every consumer of a master
// seed sees the same substreams.
inline constexpr std::uint64_t kDesignStream = 1;
inline constexpr std::uint64_t kCoefStream = 2;
inline constexpr std::uint64_t kNoiseStream = 3;
inline constexpr std::uint64_t kCellStreamBase = 0x100;

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   t0)
      .count();
}

template <typename Fn>
void parallel_for(int nthreads, int count, Fn&& fn) {
  if (nthreads <= 1) {
    for (int b = 0; b < count; ++b) fn(b);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (int b = next.fetch_add(1); b < count; b = next.fetch_add(1)) {
        try {
          fn(b);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct RepOutcome {
  bool ok = false;
  double sq_err = 0.0;
  double realized = 0.0;
  bool covered = false;
  double d1_ms = 0.0;
  double d2_ms = 0.0;
  double pilot_ms = 0.0;
  bool timed_d1 = false;  // true when this replication computed probabilities
};

}  // namespace detail

inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GRADSAMP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.replications < 1) {
    throw std::invalid_argument("config: replications must be >= 1");
  }
  if (cfg.methods.empty()) {
    throw std::invalid_argument("config: at least one method required");
  }
  if (cfg.r_values.empty() && cfg.r_ratios.empty()) {
    throw std::invalid_argument("config: need r or r_ratio");
  }
  for (double r : cfg.r_values) {
    if (!(r > 0.0)) throw std::invalid_argument("config: r values must be > 0");
  }
  for (double q : cfg.r_ratios) {
    if (!(q > 0.0 && q <= 1.0)) {
      throw std::invalid_argument("config: r ratios must lie in (0, 1]");
    }
  }
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw std::invalid_argument("config: delta must lie in (0, 1)");
  }
  if (cfg.r0_policy == R0Policy::fraction &&
      !(cfg.r0_value > 0.0 && cfg.r0_value <= 1.0)) {
    throw std::invalid_argument("config: fractional r0 must lie in (0, 1]");
  }
  if (cfg.r0_policy == R0Policy::fixed && !(cfg.r0_value >= 1.0)) {
    throw std::invalid_argument("config: fixed r0 must be >= 1");
  }
  if (!cfg.synthetic && cfg.csv_path.empty()) {
    throw std::invalid_argument("config: csv dataset needs csv_path");
  }
  if (cfg.synthetic && (cfg.synth.n < 1 || cfg.synth.d < 1)) {
    throw std::invalid_argument("config: synthetic n, d must be >= 1");
  }
}

// Design, coefficients and noise use independent substreams of the master
// seed, so e.g. regenerating responses never perturbs the design.
inline Dataset make_synthetic_dataset(const SyntheticSpec& spec, RngSeed master) {
  DenseMatrix x = generate_design(spec.n, spec.d, spec.mixture,
                                  derive_seed(master, detail::kDesignStream));
  const Eigen::VectorXd beta =
      draw_coefficients(spec.d, derive_seed(master, detail::kCoefStream));
  Eigen::VectorXd y = generate_response(x, beta, spec.response,
                                        derive_seed(master, detail::kNoiseStream));
  return Dataset(std::move(x), std::move(y));
}

// y_column accepts a 0-based index or a header name.
inline Dataset load_csv_auto(const std::string& path, const std::string& y_column,
                             bool header) {
  if (!y_column.empty() &&
      y_column.find_first_not_of("0123456789") == std::string::npos) {
    return load_csv(path, static_cast<Eigen::Index>(std::stoll(y_column)), header);
  }
  return load_csv(path, y_column, header);
}

inline Dataset materialize_dataset(const ExperimentConfig& cfg) {
  if (cfg.synthetic) return make_synthetic_dataset(cfg.synth, cfg.master_seed);
  return load_csv_auto(cfg.csv_path, cfg.y_column, cfg.csv_header);
}

namespace detail {

inline Eigen::Index resolve_r0(const ExperimentConfig& cfg, double r,
                               Eigen::Index d) {
  double raw = cfg.r0_policy == R0Policy::fixed ? cfg.r0_value : cfg.r0_value * r;
  const Eigen::Index r0 = static_cast<Eigen::Index>(std::llround(raw));
  if (r0 < d) {
    throw std::invalid_argument(
        "config: pilot size r0 = " + std::to_string(r0) + " is below d = " +
        std::to_string(d) + " at r = " + std::to_string(r));
  }
  return r0;
}

struct CellContext {
  const ExperimentConfig* cfg = nullptr;
  const Dataset* data = nullptr;
  const LsSolution* full = nullptr;
  MethodChoice choice;
  double r = 0.0;
  Eigen::Index r0 = 0;
  Eigen::Index sketch_rows = 0;
  double lambda_min = 0.0;
  const ProbabilityVector* fixed_pi = nullptr;  // null for per-rep probabilities
  const BoundReport* fixed_bound = nullptr;
};

inline RepOutcome run_replication(const CellContext& ctx, RngSeed rep_seed) {
  const ExperimentConfig& cfg = *ctx.cfg;
  const Dataset& data = *ctx.data;

  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    const RngSeed attempt_seed = derive_seed(rep_seed, 100 + attempt);
    try {
      RepOutcome out;
      std::optional<ProbabilityVector> local_pi;
      const ProbabilityVector* pi = ctx.fixed_pi;

      if (pi == nullptr) {
        const auto t0 = std::chrono::steady_clock::now();
        if (ctx.choice.method == ProbMethod::gradient) {
          const auto tp = std::chrono::steady_clock::now();
          const LsSolution pilot =
              pilot_estimate(data, ctx.r0, derive_seed(attempt_seed, 1));
          out.pilot_ms = elapsed_ms(tp);
          local_pi = gradient_probs(data, pilot.beta);
        } else {  // approx_leverage
          local_pi = approx_leverage_probs(data.x, ctx.sketch_rows,
                                           derive_seed(attempt_seed, 2));
        }
        out.d1_ms = elapsed_ms(t0);
        out.timed_d1 = true;
        pi = &*local_pi;
      }

      SubsampleDraw draw;
      if (ctx.choice.scheme == DrawScheme::poisson) {
        const InclusionProbabilities inc =
            to_inclusion(*pi, ctx.r, cfg.redistribute);
        draw = poisson_sample(inc, *pi, ctx.r, derive_seed(attempt_seed, 3));
      } else {
        const Eigen::Index rr =
            std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(ctx.r)));
        draw = replacement_sample(*pi, rr, derive_seed(attempt_seed, 3));
      }

      const auto t2 = std::chrono::steady_clock::now();
      const LsSolution sol = solve_weighted(data, draw);
      out.d2_ms = elapsed_ms(t2);

      out.sq_err = (sol.beta - ctx.full->beta).squaredNorm();
      out.realized = static_cast<double>(draw.realized_size);

      try {
        const BoundReport* bound = ctx.fixed_bound;
        BoundReport local_bound;
        if (bound == nullptr) {
          local_bound = bound_constants(data, ctx.full->beta, *pi, cfg.delta,
                                        ctx.lambda_min);
          bound = &local_bound;
        }
        out.covered = std::sqrt(out.sq_err) <= error_bound(*bound, ctx.r);
      } catch (const DivisionByZeroProb&) {
        out.covered = false;  // bound constants undefined for this pi
      }

      out.ok = true;
      return out;
    } catch (const EmptyDraw&) {
    } catch (const SingularGram&) {
    } catch (const DegenerateGradients&) {
    }
  }
  return RepOutcome{};  // recorded as a failure
}

}  // namespace detail

// Runs the full sweep: for every (method, scheme) and every r, draw
// `replications` subsamples, solve, and aggregate MSE / coverage / timing.
// Replications execute in parallel but are seeded and reduced by replication
// index, so reports are identical at any thread count.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       const Dataset& data,
                                       const LsSolution& full) {
  validate_config(cfg);
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  const int nthreads = resolve_thread_count(cfg.threads);
  const Eigen::Index sketch_rows =
      cfg.sketch_rows > 0 ? cfg.sketch_rows : 20 * d;
  const double lambda_min = full.gram_min_eigenvalue;

  std::vector<double> rs = cfg.r_values;
  for (double q : cfg.r_ratios) rs.push_back(q * static_cast<double>(n));

  ExperimentReport report;
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const MethodChoice choice = cfg.methods[mi];

    // Probabilities that do not depend on the replication are computed once.
    std::optional<ProbabilityVector> fixed_pi;
    double fixed_d1_ms = 0.0;
    {
      const auto t0 = std::chrono::steady_clock::now();
      switch (choice.method) {
        case ProbMethod::uniform:
          fixed_pi = uniform_probs(n);
          break;
        case ProbMethod::leverage:
          fixed_pi = leverage_probs(data.x);
          break;
        case ProbMethod::residual_oracle:
          fixed_pi = residual_oracle_probs(data, full.beta);
          break;
        default:
          break;
      }
      if (fixed_pi) fixed_d1_ms = detail::elapsed_ms(t0);
    }
    std::optional<BoundReport> fixed_bound;
    if (fixed_pi) {
      try {
        fixed_bound =
            bound_constants(data, full.beta, *fixed_pi, cfg.delta, lambda_min);
      } catch (const DivisionByZeroProb&) {
        // coverage stays undefined for this method; replications handle it
      }
    }

    const RngSeed method_seed =
        derive_seed(cfg.master_seed, detail::kCellStreamBase + mi);

    for (std::size_t ri = 0; ri < rs.size(); ++ri) {
      const double r = rs[ri];
      detail::CellContext ctx;
      ctx.cfg = &cfg;
      ctx.data = &data;
      ctx.full = &full;
      ctx.choice = choice;
      ctx.r = r;
      ctx.r0 = choice.method == ProbMethod::gradient ? detail::resolve_r0(cfg, r, d)
                                                     : 0;
      ctx.sketch_rows = sketch_rows;
      ctx.lambda_min = lambda_min;
      ctx.fixed_pi = fixed_pi ? &*fixed_pi : nullptr;
      ctx.fixed_bound = fixed_bound ? &*fixed_bound : nullptr;

      const RngSeed cell_seed = derive_seed(method_seed, ri);
      const int B = cfg.replications;
      std::vector<detail::RepOutcome> outcomes(static_cast<std::size_t>(B));
      detail::parallel_for(nthreads, B, [&](int b) {
        outcomes[static_cast<std::size_t>(b)] = detail::run_replication(
            ctx, derive_seed(cell_seed, static_cast<std::uint64_t>(b)));
      });

      MethodRecord rec;
      rec.method = to_string(choice.method);
      rec.scheme = to_string(choice.scheme);
      rec.r = r;
      rec.replications = B;

      std::vector<double> errs;
      errs.reserve(static_cast<std::size_t>(B));
      int covered = 0;
      int timed = 0;
      double realized_sum = 0.0;
      double d1_sum = 0.0, d2_sum = 0.0, pilot_sum = 0.0;
      for (const auto& out : outcomes) {
        if (!out.ok) {
          ++rec.failure_count;
          continue;
        }
        errs.push_back(out.sq_err);
        covered += out.covered ? 1 : 0;
        realized_sum += out.realized;
        d2_sum += out.d2_ms;
        if (out.timed_d1) {
          ++timed;
          d1_sum += out.d1_ms;
          pilot_sum += out.pilot_ms;
        }
      }
      if (rec.failure_count * 2 > B) {
        throw ExcessiveFailures(
            "run_experiment: " + std::to_string(rec.failure_count) + " of " +
            std::to_string(B) + " replications failed for method " + rec.method);
      }
      const auto ok_count = static_cast<double>(errs.size());
      rec.mse = mean(errs);
      rec.mse_se = standard_error(errs);
      rec.coverage = ok_count > 0 ? covered / ok_count : 0.0;
      rec.mean_realized_size = ok_count > 0 ? realized_sum / ok_count : 0.0;
      rec.d2_ms = ok_count > 0 ? d2_sum / ok_count : 0.0;
      rec.d1_ms = timed > 0 ? d1_sum / timed : fixed_d1_ms;
      rec.pilot_ms = timed > 0 ? pilot_sum / timed : 0.0;
      report.records.push_back(std::move(rec));
    }
  }
  return report;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const Dataset data = materialize_dataset(cfg);
  const LsSolution full = solve_full(data);
  return run_experiment(cfg, data, full);
}

// CSV columns: method, scheme, r, mse, mse_se, coverage, d1_ms, d2_ms.
// The two timing columns come last so byte-level comparisons can strip them.
inline void emit_report_csv(const ExperimentReport& report, std::ostream& out) {
  out << "method,scheme,r,mse,mse_se,coverage,d1_ms,d2_ms\n";
  for (const auto& rec : report.records) {
    out << rec.method << ',' << rec.scheme << ',' << detail::format_double(rec.r)
        << ',' << detail::format_double(rec.mse) << ','
        << detail::format_double(rec.mse_se) << ','
        << detail::format_double(rec.coverage) << ','
        << detail::format_double(rec.d1_ms) << ','
        << detail::format_double(rec.d2_ms) << '\n';
  }
}

inline nlohmann::json report_to_json(const ExperimentReport& report) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& rec : report.records) {
    recs.push_back({
        {"method", rec.method},
        {"scheme", rec.scheme},
        {"r", rec.r},
        {"mse", rec.mse},
        {"mse_se", rec.mse_se},
        {"coverage", rec.coverage},
        {"mean_realized_size", rec.mean_realized_size},
        {"failure_count", rec.failure_count},
        {"replications", rec.replications},
        {"d1_ms", rec.d1_ms},
        {"d2_ms", rec.d2_ms},
        {"pilot_ms", rec.pilot_ms},
    });
  }
  return nlohmann::json{{"records", recs}};
}

inline void emit_report(const ExperimentReport& report, OutputFormat format,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("emit_report: cannot open '" + path + "'");
  if (format == OutputFormat::csv) {
    emit_report_csv(report, out);
  } else {
    out << report_to_json(report).dump(2) << '\n';
  }
  if (!out) throw IoError("emit_report: write failed for '" + path + "'");
}

// Stage timings for the complexity comparison: D1 = computing the sampling
// weights (pilot included for the gradient method), D2 = solving on the
// subsample. Runs serially; reports the best of `repeats` trials per stage.
struct BenchRow {
  Eigen::Index n = 0;
  double d1_ms = 0.0;
  double pilot_ms = 0.0;
  double d2_ms = 0.0;
};

inline std::vector<BenchRow> timing_benchmark(
    const std::vector<Eigen::Index>& n_values, Eigen::Index d, ProbMethod method,
    double r, RngSeed seed, int repeats = 3) {
  if (n_values.size() < 2) {
    throw std::invalid_argument("timing_benchmark: need at least two n values");
  }
  if (repeats < 1) throw std::invalid_argument("timing_benchmark: repeats >= 1");

  std::vector<BenchRow> rows;
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    const Eigen::Index n = n_values[k];
    SyntheticSpec spec;
    spec.n = n;
    spec.d = d;
    spec.mixture = MixtureSpec::ga();
    const Dataset data = make_synthetic_dataset(spec, derive_seed(seed, k));
    const Eigen::Index r0 =
        std::max(d, static_cast<Eigen::Index>(std::llround(r)));

    BenchRow row;
    row.n = n;
    row.d1_ms = std::numeric_limits<double>::infinity();
    row.d2_ms = std::numeric_limits<double>::infinity();

    // The oracle method needs the full solution; that cost is not part of
    // its weight stage.
    Eigen::VectorXd beta_full;
    if (method == ProbMethod::residual_oracle) beta_full = solve_full(data).beta;

    // rep -1 is an untimed warm-up so first-touch page faults and cold
    // caches do not contaminate the stage costs
    std::optional<ProbabilityVector> pi;
    for (int rep = -1; rep < repeats; ++rep) {
      const RngSeed rep_seed =
          derive_seed(derive_seed(seed, 1000 + k),
                      static_cast<std::uint64_t>(rep + 1));
      const auto t0 = std::chrono::steady_clock::now();
      double pilot_ms = 0.0;
      switch (method) {
        case ProbMethod::uniform:
          pi = uniform_probs(n);
          break;
        case ProbMethod::leverage:
          pi = leverage_probs(data.x);
          break;
        case ProbMethod::approx_leverage:
          pi = approx_leverage_probs(data.x, 20 * d, rep_seed);
          break;
        case ProbMethod::gradient: {
          const auto tp = std::chrono::steady_clock::now();
          const LsSolution pilot = pilot_estimate(data, r0, rep_seed);
          pilot_ms = detail::elapsed_ms(tp);
          pi = gradient_probs(data, pilot.beta);
          break;
        }
        case ProbMethod::residual_oracle:
          pi = residual_oracle_probs(data, beta_full);
          break;
      }
      const double d1 = detail::elapsed_ms(t0);
      if (rep >= 0 && d1 < row.d1_ms) {
        row.d1_ms = d1;
        row.pilot_ms = pilot_ms;
      }
    }

    const InclusionProbabilities inc = to_inclusion(*pi, r, false);
    for (int rep = -1; rep < repeats; ++rep) {
      const SubsampleDraw draw = poisson_sample(
          inc, *pi, r,
          derive_seed(derive_seed(seed, 2000 + k),
                      static_cast<std::uint64_t>(rep + 1)));
      const auto t0 = std::chrono::steady_clock::now();
      const LsSolution sol = solve_weighted(data, draw);
      const double d2 = detail::elapsed_ms(t0);
      if (rep >= 0) row.d2_ms = std::min(row.d2_ms, d2);
      (void)sol;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gradsamp
