#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gradsamp/errors.hpp"
#include "gradsamp/linalg.hpp"
#include "gradsamp/numeric.hpp"
#include "gradsamp/rng.hpp"

namespace gradsamp {

enum class ProbMethod {
  uniform,
  leverage,
  approx_leverage,
  gradient,
  residual_oracle,
};

inline const char* to_string(ProbMethod m) {
  switch (m) {
    case ProbMethod::uniform: return "uniform";
    case ProbMethod::leverage: return "leverage";
    case ProbMethod::approx_leverage: return "approx_leverage";
    case ProbMethod::gradient: return "gradient";
    case ProbMethod::residual_oracle: return "residual_oracle";
  }
  return "unknown";
}

// Length-n sampling distribution: nonnegative, sums to 1 within 1e-12.
// capped_indices is populated by to_inclusion when a row's inclusion
// probability hits 1.
class ProbabilityVector {
 public:
  ProbabilityVector(Eigen::VectorXd pi, ProbMethod tag,
                    std::vector<Eigen::Index> capped = {})
      : pi_(std::move(pi)), tag_(tag), capped_(std::move(capped)) {
    if (pi_.size() < 1) {
      throw std::invalid_argument("ProbabilityVector: empty");
    }
    if ((pi_.array() < 0.0).any()) {
      throw std::invalid_argument("ProbabilityVector: negative entry");
    }
    const double sum = kahan_sum(pi_);
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("ProbabilityVector: sums to " +
                                  std::to_string(sum) + ", not 1");
    }
    for (Eigen::Index i : capped_) {
      if (i < 0 || i >= pi_.size()) {
        throw std::invalid_argument("ProbabilityVector: capped index out of range");
      }
    }
  }

  // Normalizes nonnegative scores to a distribution. The caller guarantees a
  // strictly positive total.
  static ProbabilityVector from_scores(const Eigen::VectorXd& scores,
                                       ProbMethod tag) {
    const double total = kahan_sum(scores);
    return ProbabilityVector(scores / total, tag);
  }

  Eigen::Index size() const { return pi_.size(); }
  const Eigen::VectorXd& pi() const { return pi_; }
  double operator[](Eigen::Index i) const { return pi_(i); }
  ProbMethod method() const { return tag_; }
  const std::vector<Eigen::Index>& capped_indices() const { return capped_; }

 private:
  Eigen::VectorXd pi_;
  ProbMethod tag_;
  std::vector<Eigen::Index> capped_;
};

// Per-row Bernoulli inclusion probabilities p_i = r*pi_i, capped at 1.
struct InclusionProbabilities {
  Eigen::VectorXd p;
  double expected_size = 0.0;
  std::vector<Eigen::Index> capped_indices;
};

// pi_i = 1/n.
inline ProbabilityVector uniform_probs(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("uniform_probs: n must be >= 1");
  return ProbabilityVector(
      Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)),
      ProbMethod::uniform);
}

namespace detail {

// h_i = ||R^-T x_i||^2 computed blockwise, where R^T R = (SX)^T SX. With
// S = I these are the exact leverage scores x_i' (X'X)^-1 x_i.
inline Eigen::VectorXd scores_from_factor(const DenseMatrix& x,
                                          const Eigen::MatrixXd& r_factor) {
  const Eigen::Index n = x.rows();
  constexpr Eigen::Index kBlock = 4096;
  Eigen::VectorXd h(n);
  const auto rt = r_factor.triangularView<Eigen::Upper>().transpose();
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index len = std::min(kBlock, n - start);
    Eigen::MatrixXd z = rt.solve(
        Eigen::MatrixXd(x.mat().middleRows(start, len).transpose()));
    h.segment(start, len) = z.colwise().squaredNorm();
  }
  return h;
}

inline Eigen::MatrixXd qr_factor(const Eigen::MatrixXd& a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::Index k = std::min(a.rows(), a.cols());
  return qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

}  // namespace detail

// Exact leverage-score probabilities pi_i = h_i / d with
// h_i = x_i' (X'X)^-1 x_i. The hat diagonals sum to d, so the normalization
// constant equals d up to rounding.
inline ProbabilityVector leverage_probs(const DenseMatrix& x) {
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd r = detail::qr_factor(x.mat());
  const GramEigenExtremes ext =
      detail::gram_extremes_from_factor(r, d, static_cast<double>(x.rows()));
  detail::throw_if_singular(ext, "leverage_probs");
  return ProbabilityVector::from_scores(detail::scores_from_factor(x, r),
                                        ProbMethod::leverage);
}

// Sketch-based approximation of leverage probabilities: scores
// ||x_i' R^-1||^2 where R is the triangular factor of a Gaussian projection
// S X with sketch_rows rows. sketch_rows >= n uses S = I, reproducing the
// exact scores.
inline ProbabilityVector approx_leverage_probs(const DenseMatrix& x,
                                               Eigen::Index sketch_rows,
                                               RngSeed seed) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (sketch_rows < d) {
    throw std::invalid_argument("approx_leverage_probs: sketch_rows must be >= d");
  }

  Eigen::MatrixXd r;
  if (sketch_rows >= n) {
    r = detail::qr_factor(x.mat());
  } else {
    // Accumulate S X = sum over row blocks G_blk X_blk without materializing
    // the full sketch_rows x n projection.
    const double scale = 1.0 / std::sqrt(static_cast<double>(sketch_rows));
    Rng rng(seed);
    Eigen::MatrixXd sx = Eigen::MatrixXd::Zero(sketch_rows, d);
    constexpr Eigen::Index kBlock = 4096;
    Eigen::MatrixXd g(sketch_rows, kBlock);
    for (Eigen::Index start = 0; start < n; start += kBlock) {
      const Eigen::Index len = std::min(kBlock, n - start);
      for (Eigen::Index c = 0; c < len; ++c)
        for (Eigen::Index rix = 0; rix < sketch_rows; ++rix)
          g(rix, c) = scale * rng.normal();
      sx.noalias() += g.leftCols(len) * x.mat().middleRows(start, len);
    }
    r = detail::qr_factor(sx);
  }

  const GramEigenExtremes ext = detail::gram_extremes_from_factor(
      r, d, static_cast<double>(std::min(sketch_rows, n)));
  if (ext.max <= 0.0 || ext.min <= detail::kSingularRelTol * ext.max) {
    throw SingularGram("approx_leverage_probs: rank-deficient sketch; increase sketch_rows");
  }
  return ProbabilityVector::from_scores(detail::scores_from_factor(x, r),
                                        ProbMethod::approx_leverage);
}

namespace detail {

inline ProbabilityVector gradient_scores(const Dataset& data,
                                         const Eigen::VectorXd& beta,
                                         ProbMethod tag,
                                         const char* context) {
  if (beta.size() != data.d()) {
    throw std::invalid_argument(std::string(context) + ": beta length mismatch");
  }
  const Eigen::Index n = data.n();
  Eigen::VectorXd scores(n);
  // single pass per row: each row stays cache-resident for both reductions
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = data.x.row(i);
    const double resid = data.y(i) - row.dot(beta);
    scores(i) = row.norm() * std::abs(resid);
  }
  if (kahan_sum(scores) == 0.0) {
    throw DegenerateGradients(std::string(context) +
                              ": all per-row gradients vanish");
  }
  return ProbabilityVector::from_scores(scores, tag);
}

}  // namespace detail

// Gradient-based probabilities pi_i proportional to ||x_i|| |y_i - x_i'b0|,
// the norm of the per-row loss gradient at the pilot estimate. Costs O(nd).
inline ProbabilityVector gradient_probs(const Dataset& data,
                                        const Eigen::VectorXd& beta0) {
  return detail::gradient_scores(data, beta0, ProbMethod::gradient,
                                 "gradient_probs");
}

// Oracle probabilities pi_i proportional to ||e_i x_i|| with full-sample
// residuals e_i = y_i - x_i' beta_full; minimizes sigma_b^2 over all
// distributions.
inline ProbabilityVector residual_oracle_probs(const Dataset& data,
                                               const Eigen::VectorXd& beta_full) {
  return detail::gradient_scores(data, beta_full, ProbMethod::residual_oracle,
                                 "residual_oracle_probs");
}

// Converts a sampling distribution into Bernoulli inclusion probabilities at
// expected size r. With redistribute off, p_i = min(1, r*pi_i) (so the
// expected size can fall below r when rows cap). With redistribute on, capped
// mass is iteratively reassigned to the uncapped rows until
// sum p_i = min(r, n).
inline InclusionProbabilities to_inclusion(const ProbabilityVector& pi,
                                           double r, bool redistribute) {
  if (!(r > 0.0)) throw std::invalid_argument("to_inclusion: r must be > 0");
  const Eigen::Index n = pi.size();
  InclusionProbabilities out;
  out.p.resize(n);

  if (!redistribute) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double raw = r * pi[i];
      if (raw >= 1.0) {
        out.p(i) = 1.0;
        out.capped_indices.push_back(i);
      } else {
        out.p(i) = raw;
      }
    }
  } else {
    const double target = std::min(r, static_cast<double>(n));
    std::vector<bool> capped(static_cast<std::size_t>(n), false);
    double mult = r;
    for (;;) {
      bool newly_capped = false;
      double uncapped_mass = 0.0;
      double carry = 0.0;
      Eigen::Index capped_count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (capped[i]) {
          ++capped_count;
          continue;
        }
        if (mult * pi[i] >= 1.0) {
          capped[i] = true;
          newly_capped = true;
          ++capped_count;
          continue;
        }
        const double y = pi[i] - carry;
        const double t = uncapped_mass + y;
        carry = (t - uncapped_mass) - y;
        uncapped_mass = t;
      }
      if (!newly_capped) break;
      const double remaining = target - static_cast<double>(capped_count);
      if (uncapped_mass <= 0.0 || remaining <= 0.0) break;
      mult = remaining / uncapped_mass;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (capped[i]) {
        out.p(i) = 1.0;
        out.capped_indices.push_back(i);
      } else {
        out.p(i) = std::min(1.0, mult * pi[i]);
      }
    }
  }

  out.expected_size = kahan_sum(out.p);
  return out;
}

}  // namespace gradsamp
