#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gradsamp/errors.hpp"
#include "gradsamp/linalg.hpp"
#include "gradsamp/probabilities.hpp"
#include "gradsamp/rng.hpp"

namespace gradsamp {

enum class DrawScheme { poisson, with_replacement };

inline const char* to_string(DrawScheme s) {
  return s == DrawScheme::poisson ? "poisson" : "replacement";
}

// A realized subsample: selected row indices (distinct and increasing for
// Poisson draws, multiplicities allowed for replacement draws) with their
// importance weights 1/(r pi_i), or 1 for rows whose inclusion probability
// was capped at 1.
struct SubsampleDraw {
  std::vector<Eigen::Index> indices;
  std::vector<double> weights;
  Eigen::Index realized_size = 0;
  DrawScheme scheme = DrawScheme::poisson;
};

// Weighted subsample least squares, Phi_s = diag{r pi_i} on the drawn rows.
inline LsSolution solve_weighted(const Dataset& data, const SubsampleDraw& draw) {
  return weighted_least_squares(data, draw.indices, draw.weights);
}

// Independent per-row Bernoulli selection at probabilities p. The realized
// size is Poisson-binomial with mean sum p_i and variance sum p_i (1 - p_i).
// Every row consumes exactly one uniform, so a draw is a pure function of
// (p, seed).
inline SubsampleDraw poisson_sample(const InclusionProbabilities& p,
                                    const ProbabilityVector& pi, double r,
                                    RngSeed seed) {
  const Eigen::Index n = pi.size();
  if (p.p.size() != n) {
    throw DimensionMismatch("poisson_sample: inclusion/probability size mismatch");
  }
  if (!(r > 0.0)) throw std::invalid_argument("poisson_sample: r must be > 0");

  Rng rng(seed);
  SubsampleDraw draw;
  draw.scheme = DrawScheme::poisson;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const double pi_incl = p.p(i);
    if (u < pi_incl) {
      draw.indices.push_back(i);
      draw.weights.push_back(pi_incl >= 1.0 ? 1.0 : 1.0 / pi_incl);
    }
  }
  if (draw.indices.empty()) {
    throw EmptyDraw("poisson_sample: no rows selected (expected size " +
                    std::to_string(p.expected_size) + ")");
  }
  draw.realized_size = static_cast<Eigen::Index>(draw.indices.size());
  return draw;
}

// Exactly r independent categorical draws from pi by inverse-CDF lookup;
// duplicates allowed, each draw weighted 1/(r pi_i).
inline SubsampleDraw replacement_sample(const ProbabilityVector& pi,
                                        Eigen::Index r, RngSeed seed) {
  if (r < 1) throw std::invalid_argument("replacement_sample: r must be >= 1");
  const Eigen::Index n = pi.size();

  std::vector<double> cum(static_cast<std::size_t>(n));
  double running = 0.0;
  Eigen::Index last_positive = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    running += pi[i];
    cum[static_cast<std::size_t>(i)] = running;
    if (pi[i] > 0.0) last_positive = i;
  }
  if (last_positive < 0) {
    throw std::invalid_argument("replacement_sample: all probabilities zero");
  }

  Rng rng(seed);
  SubsampleDraw draw;
  draw.scheme = DrawScheme::with_replacement;
  draw.indices.reserve(static_cast<std::size_t>(r));
  draw.weights.reserve(static_cast<std::size_t>(r));
  const double total = cum.back();
  for (Eigen::Index k = 0; k < r; ++k) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    Eigen::Index i = (it == cum.end()) ? last_positive
                                       : static_cast<Eigen::Index>(it - cum.begin());
    if (pi[i] <= 0.0) i = last_positive;
    draw.indices.push_back(i);
    draw.weights.push_back(1.0 / (static_cast<double>(r) * pi[i]));
  }
  draw.realized_size = r;
  return draw;
}

// Pilot estimate from a uniform Poisson subsample of expected size r0.
inline LsSolution pilot_estimate(const Dataset& data, Eigen::Index r0,
                                 RngSeed seed) {
  if (r0 < data.d()) {
    throw std::invalid_argument("pilot_estimate: r0 must be >= d (got r0 = " +
                                std::to_string(r0) + ", d = " +
                                std::to_string(data.d()) + ")");
  }
  const ProbabilityVector pi = uniform_probs(data.n());
  const double r = static_cast<double>(r0);
  const InclusionProbabilities p = to_inclusion(pi, r, /*redistribute=*/false);
  const SubsampleDraw draw = poisson_sample(p, pi, r, seed);
  return solve_weighted(data, draw);
}

}  // namespace gradsamp
