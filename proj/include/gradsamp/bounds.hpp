#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "gradsamp/errors.hpp"
#include "gradsamp/linalg.hpp"
#include "gradsamp/numeric.hpp"
#include "gradsamp/probabilities.hpp"

namespace gradsamp {

// Computable constants of the excess-risk bound ||btilde - bhat|| <= C r^-1/2
// that holds with probability 1 - delta, plus the sharper two-term variant
// C1 r^-1/2 + C2 r^-1 from which the single constant is derived.
struct BoundReport {
  double sigma_sq_Sigma = 0.0;   // n^-2 sum pi_i^-1 ||x_i||^4
  double sigma_sq_b = 0.0;       // n^-2 sum pi_i^-1 ||x_i||^2 e_i^2
  double max_sq_row_norm = 0.0;  // R = max_i ||x_i||^2
  double lambda_min = 0.0;       // smallest eigenvalue of X'X/n
  double delta = 0.0;
  double C = 0.0;                // 3 sigma_b / (lambda_min delta)
  double C1 = 0.0;               // 2 sigma_b / (lambda_min delta)
  double C2 = 0.0;               // 2 sqrt(2 log d) sigma_Sigma sigma_b / (lambda_min delta)^2
  std::optional<double> r_min;   // nullopt = infeasible at this delta
  double bound_at_r = std::numeric_limits<double>::quiet_NaN();
};

// Fills the computable constants for a given sampling distribution.
// Rows with pi_i = 0 and ||x_i|| = 0 contribute nothing; a zero probability
// on a row with ||x_i|| > 0 makes the sums undefined.
// lambda_min_hint, when nonnegative, skips the eigenvalue recomputation
// (it depends on the design only, not on pi).
inline BoundReport bound_constants(const Dataset& data,
                                   const Eigen::VectorXd& beta_full,
                                   const ProbabilityVector& pi, double delta,
                                   double lambda_min_hint = -1.0) {
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  if (pi.size() != n) {
    throw DimensionMismatch("bound_constants: pi length mismatch");
  }
  if (beta_full.size() != d) {
    throw DimensionMismatch("bound_constants: beta length mismatch");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("bound_constants: delta must lie in (0,1)");
  }

  const Eigen::VectorXd sq_norms = data.x.mat().rowwise().squaredNorm();
  const Eigen::VectorXd e = data.y - data.x.mat() * beta_full;

  Eigen::VectorXd terms_sigma(n);
  Eigen::VectorXd terms_b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pi[i] == 0.0) {
      if (sq_norms(i) > 0.0) {
        throw DivisionByZeroProb("bound_constants: pi_i = 0 with ||x_i|| > 0 at row " +
                                 std::to_string(i));
      }
      terms_sigma(i) = 0.0;
      terms_b(i) = 0.0;
    } else {
      terms_sigma(i) = sq_norms(i) * sq_norms(i) / pi[i];
      terms_b(i) = sq_norms(i) * e(i) * e(i) / pi[i];
    }
  }

  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  BoundReport rep;
  rep.sigma_sq_Sigma = kahan_sum(terms_sigma) / n2;
  rep.sigma_sq_b = kahan_sum(terms_b) / n2;
  rep.max_sq_row_norm = sq_norms.maxCoeff();
  rep.lambda_min =
      lambda_min_hint >= 0.0 ? lambda_min_hint : gram_min_eigenvalue(data.x);
  rep.delta = delta;

  const double sigma_b = std::sqrt(rep.sigma_sq_b);
  const double sigma_Sigma = std::sqrt(rep.sigma_sq_Sigma);
  rep.C = 3.0 * sigma_b / (rep.lambda_min * delta);
  rep.C1 = 2.0 * sigma_b / (rep.lambda_min * delta);
  rep.C2 = 2.0 * std::sqrt(2.0 * std::log(static_cast<double>(d))) *
           sigma_Sigma * sigma_b / (rep.lambda_min * rep.lambda_min * delta * delta);
  return rep;
}

// Minimum expected subsample size for the bound to hold:
//   r > 2 sigma_Sigma^2 log d / (delta^2 (lambda_min/2 - R log d / (3 n delta))^2).
// Requires the inner term to be positive, which is exactly the feasibility
// condition delta > 2 R log d / (3 n lambda_min); smaller delta is reported
// as infeasible. d = 1 makes the condition vacuous and returns 0.
inline std::optional<double> min_subsample_size(const BoundReport& report,
                                                Eigen::Index d, Eigen::Index n) {
  if (d < 1 || n < 1) {
    throw std::invalid_argument("min_subsample_size: d and n must be >= 1");
  }
  if (d == 1) return 0.0;
  const double log_d = std::log(static_cast<double>(d));
  const double inner =
      report.lambda_min / 2.0 -
      report.max_sq_row_norm * log_d / (3.0 * static_cast<double>(n) * report.delta);
  if (inner <= 0.0) return std::nullopt;
  return 2.0 * report.sigma_sq_Sigma * log_d /
         (report.delta * report.delta * inner * inner);
}

// The excess-risk bound C r^-1/2.
inline double error_bound(const BoundReport& report, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("error_bound: r must be > 0");
  if (!(report.lambda_min > 0.0)) {
    throw std::invalid_argument("error_bound: lambda_min must be > 0");
  }
  return report.C / std::sqrt(r);
}

// Two-term bound C1 r^-1/2 + C2 r^-1; tighter than C r^-1/2 whenever the
// minimum-size condition holds.
inline double two_term_error_bound(const BoundReport& report, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("two_term_error_bound: r must be > 0");
  return report.C1 / std::sqrt(r) + report.C2 / r;
}

// Expectation bound for the matrix Bernoulli series Delta = Sigma_n - Sigma_s:
//   E lambda_max(Delta) <= r^-1/2 sigma_Sigma sqrt(2 log d) + R log d / (3n).
// log 1 = 0 makes the bound vacuous at d = 1, returned as 0.
inline double bernstein_expectation_bound(const BoundReport& report, double r,
                                          Eigen::Index n, Eigen::Index d) {
  if (!(r > 0.0)) {
    throw std::invalid_argument("bernstein_expectation_bound: r must be > 0");
  }
  if (d < 1 || n < 1) {
    throw std::invalid_argument("bernstein_expectation_bound: d and n must be >= 1");
  }
  const double log_d = std::log(static_cast<double>(d));
  return std::sqrt(report.sigma_sq_Sigma * 2.0 * log_d / r) +
         report.max_sq_row_norm * log_d / (3.0 * static_cast<double>(n));
}

// Gap between the bound constant realized by gradient probabilities at pilot
// beta0 and its minimum over all distributions (attained at the residual
// oracle). Uses the closed forms
//   sigma_b^2(pi^0) = (n^-1 sum ||x_i|| |e0_i|) (n^-1 sum ||x_i|| e_i^2 / |e0_i|)
//   sigma_b^2(pi^e) = (n^-1 sum ||x_i|| |e_i|)^2
// with e = full-sample residuals and e0 = residuals at beta0. Rows where
// e0_i = 0 but ||x_i|| e_i^2 > 0 contribute +infinity, so the gap is
// +infinity. Reported at delta = 1; other deltas scale the gap by 1/delta.
inline double corollary_gap(const Dataset& data,
                            const Eigen::VectorXd& beta_full,
                            const Eigen::VectorXd& beta0) {
  const Eigen::Index n = data.n();
  if (beta_full.size() != data.d() || beta0.size() != data.d()) {
    throw DimensionMismatch("corollary_gap: beta length mismatch");
  }

  const Eigen::VectorXd norms = data.x.mat().rowwise().norm();
  const Eigen::VectorXd e = (data.y - data.x.mat() * beta_full).cwiseAbs();
  const Eigen::VectorXd e0 = (data.y - data.x.mat() * beta0).cwiseAbs();

  Eigen::VectorXd w_oracle(n);   // ||x_i|| |e_i|
  Eigen::VectorXd w_pilot(n);    // ||x_i|| |e0_i|
  Eigen::VectorXd ratio_terms(n);
  bool infinite = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    w_oracle(i) = norms(i) * e(i);
    w_pilot(i) = norms(i) * e0(i);
    if (w_oracle(i) == 0.0) {
      ratio_terms(i) = 0.0;
    } else if (e0(i) == 0.0) {
      infinite = true;
      ratio_terms(i) = std::numeric_limits<double>::infinity();
    } else {
      ratio_terms(i) = w_oracle(i) * (e(i) / e0(i));
    }
  }

  const double dn = static_cast<double>(n);
  const double first = kahan_sum(w_pilot) / dn;
  const double minimum = kahan_sum(w_oracle) / dn;
  if (first == 0.0) {
    throw DegenerateGradients("corollary_gap: all pilot residuals vanish");
  }

  const double lambda_min = gram_min_eigenvalue(data.x);
  if (infinite) return std::numeric_limits<double>::infinity();
  const double second = kahan_sum(ratio_terms) / dn;
  const double sigma_b_pilot =
      (first == second) ? first : std::sqrt(first * second);
  return (3.0 / lambda_min) * (sigma_b_pilot - minimum);
}

// Convenience: all error-bound diagnostics for one (data, pi, delta, r).
inline BoundReport make_bound_report(const Dataset& data,
                                     const Eigen::VectorXd& beta_full,
                                     const ProbabilityVector& pi, double delta,
                                     double r,
                                     double lambda_min_hint = -1.0) {
  BoundReport rep = bound_constants(data, beta_full, pi, delta, lambda_min_hint);
  rep.r_min = min_subsample_size(rep, data.d(), data.n());
  rep.bound_at_r = error_bound(rep, r);
  return rep;
}

}  // namespace gradsamp
