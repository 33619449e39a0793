#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "gradsamp/errors.hpp"
#include "gradsamp/linalg.hpp"
#include "gradsamp/rng.hpp"

namespace gradsamp {

// Entry distribution for synthetic designs: the even mixture
// 0.5 N(-mu, sigma_x^2) + 0.5 N(mu, theta_mg^2 sigma_x^2).
struct MixtureSpec {
  double mu = 0.0;
  double theta_mg = 1.0;
  double sigma_x = 1.0;

  static MixtureSpec ga() { return {0.0, 1.0, 1.0}; }   // plain Gaussian
  static MixtureSpec mg1() { return {0.0, 2.0, 1.0}; }  // small/large variance mix
  static MixtureSpec mg2() { return {0.0, 5.0, 1.0}; }  // small/huge variance mix
  static MixtureSpec mg3() { return {5.0, 1.0, 1.0}; }  // two symmetric peaks

  void validate() const {
    if (!(theta_mg >= 0.0)) throw std::invalid_argument("MixtureSpec: theta_mg < 0");
    if (!(sigma_x > 0.0)) throw std::invalid_argument("MixtureSpec: sigma_x <= 0");
  }
};

enum class Misspec {
  none,
  heteroscedastic,       // hidden predictor folded into the error (Type I)
  ar_errors,             // AR(1)-dependent errors (Type II)
  error_predictor_corr,  // error variance scales with the first predictor (Type III)
};

inline const char* to_string(Misspec m) {
  switch (m) {
    case Misspec::none: return "none";
    case Misspec::heteroscedastic: return "heteroscedastic";
    case Misspec::ar_errors: return "ar_errors";
    case Misspec::error_predictor_corr: return "error_predictor_corr";
  }
  return "unknown";
}

// Noise model for generate_response. rho is the misspecification strength
// (rho1/rho2/rho3 depending on the type); hidden is the law of the Type I
// hidden predictor, by default the same family as the visible design.
struct ResponseSpec {
  double sigma_eps = 10.0;
  Misspec misspec = Misspec::none;
  double rho = 0.0;
  MixtureSpec hidden{};

  void validate() const {
    if (!(sigma_eps > 0.0)) throw std::invalid_argument("ResponseSpec: sigma_eps <= 0");
    if (misspec == Misspec::ar_errors && !(rho >= 0.0 && rho < 1.0)) {
      throw std::invalid_argument("ResponseSpec: ar_errors needs rho in [0,1)");
    }
  }
};

namespace detail {

inline double mixture_draw(Rng& rng, const MixtureSpec& spec) {
  const bool second = rng.uniform() < 0.5;
  const double z = rng.normal();
  return second ? spec.mu + spec.theta_mg * spec.sigma_x * z
                : -spec.mu + spec.sigma_x * z;
}

// Stream tag for the Type I hidden column, so that the main noise stream is
// unaffected by whether a hidden predictor is drawn.
inline constexpr std::uint64_t kHiddenColumnStream = 0x68696464U;  // "hidd"

}  // namespace detail

// n x d design with i.i.d. mixture-Gaussian entries, filled in row-major
// order.
inline DenseMatrix generate_design(Eigen::Index n, Eigen::Index d,
                                   const MixtureSpec& spec, RngSeed seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("generate_design: n, d must be >= 1");
  spec.validate();
  Rng rng(seed);
  RowMatrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = detail::mixture_draw(rng, spec);
  return DenseMatrix(std::move(m));
}

// Linear response y = X beta + eps under the selected noise model:
//   none:                 eps_i ~ N(0, sigma^2), i.i.d.
//   heteroscedastic:      eps_i = rho h_i + N(0, sigma^2) with a hidden
//                         predictor column h excluded from the design
//   ar_errors:            eps_i = rho eps_{i-1} + sqrt(1-rho^2) N(0, sigma^2),
//                         eps_0 = 0
//   error_predictor_corr: eps_i = (1 + rho x_i1) N(0, sigma^2)
// The base normal stream is consumed one draw per row in every mode, so
// rho = 0 reproduces `none` draw-for-draw; the hidden column uses a derived
// seed of its own.
inline Eigen::VectorXd generate_response(const DenseMatrix& x,
                                         const Eigen::VectorXd& beta,
                                         const ResponseSpec& spec, RngSeed seed) {
  const Eigen::Index n = x.rows();
  if (beta.size() != x.cols()) {
    throw DimensionMismatch("generate_response: beta length " +
                            std::to_string(beta.size()) + " != d = " +
                            std::to_string(x.cols()));
  }
  spec.validate();

  Eigen::VectorXd y = x.mat() * beta;
  Rng rng(seed);
  const double sigma = spec.sigma_eps;

  switch (spec.misspec) {
    case Misspec::none: {
      for (Eigen::Index i = 0; i < n; ++i) y(i) += sigma * rng.normal();
      break;
    }
    case Misspec::heteroscedastic: {
      Rng hidden_rng(derive_seed(seed, detail::kHiddenColumnStream));
      for (Eigen::Index i = 0; i < n; ++i) {
        const double hidden = detail::mixture_draw(hidden_rng, spec.hidden);
        y(i) += spec.rho * hidden + sigma * rng.normal();
      }
      break;
    }
    case Misspec::ar_errors: {
      const double innovation_scale = std::sqrt(1.0 - spec.rho * spec.rho);
      double prev = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double eps = spec.rho * prev + innovation_scale * (sigma * rng.normal());
        y(i) += eps;
        prev = eps;
      }
      break;
    }
    case Misspec::error_predictor_corr: {
      for (Eigen::Index i = 0; i < n; ++i) {
        y(i) += (1.0 + spec.rho * x(i, 0)) * (sigma * rng.normal());
      }
      break;
    }
  }
  return y;
}

// d i.i.d. standard normal coefficients, drawn once and held fixed across
// the replications of an experiment.
inline Eigen::VectorXd draw_coefficients(Eigen::Index d, RngSeed seed) {
  if (d < 1) throw std::invalid_argument("draw_coefficients: d must be >= 1");
  Rng rng(seed);
  Eigen::VectorXd beta(d);
  for (Eigen::Index j = 0; j < d; ++j) beta(j) = rng.normal();
  return beta;
}

}  // namespace gradsamp
