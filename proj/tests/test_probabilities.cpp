#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gradsamp/gradsamp.hpp"
#include "oracles.hpp"

using namespace gradsamp;

namespace {

Dataset gaussian_dataset(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                         double sigma_eps = 1.0) {
  SyntheticSpec spec;
  spec.n = n;
  spec.d = d;
  spec.mixture = MixtureSpec::ga();
  spec.response.sigma_eps = sigma_eps;
  return make_synthetic_dataset(spec, RngSeed{seed});
}

}  // namespace

TEST_CASE("uniform_probs basics") {
  const ProbabilityVector p4 = uniform_probs(4);
  for (Eigen::Index i = 0; i < 4; ++i) REQUIRE(p4[i] == 0.25);

  const ProbabilityVector p1 = uniform_probs(1);
  REQUIRE(p1[0] == 1.0);

  const ProbabilityVector p3 = uniform_probs(3);
  REQUIRE(std::abs(kahan_sum(p3.pi()) - 1.0) <= 1e-15);

  REQUIRE_THROWS_AS(uniform_probs(0), std::invalid_argument);
}

TEST_CASE("leverage_probs closed forms") {
  const ProbabilityVector ortho = leverage_probs(DenseMatrix(2, 2, {1, 0, 0, 1}));
  REQUIRE(ortho[0] == Catch::Approx(0.5).margin(1e-14));
  REQUIRE(ortho[1] == Catch::Approx(0.5).margin(1e-14));

  const ProbabilityVector column = leverage_probs(DenseMatrix(2, 1, {1.0, 2.0}));
  REQUIRE(column[0] == Catch::Approx(0.2).margin(1e-14));
  REQUIRE(column[1] == Catch::Approx(0.8).margin(1e-14));
}

TEST_CASE("leverage_probs matches the explicit hat-matrix oracle") {
  const Dataset data = gaussian_dataset(100, 3, 7);
  const ProbabilityVector pi = leverage_probs(data.x);
  const Eigen::VectorXd h = oracles::hat_diagonal(data.x);

  // trace identity: hat diagonals sum to d
  REQUIRE(h.sum() == Catch::Approx(3.0).margin(1e-8));
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    REQUIRE(pi[i] == Catch::Approx(h(i) / 3.0).epsilon(1e-10));
  }
}

TEST_CASE("leverage_probs rejects rank-deficient designs") {
  REQUIRE_THROWS_AS(leverage_probs(DenseMatrix(3, 2, {1, 2, 2, 4, 3, 6})),
                    SingularGram);
}

TEST_CASE("approx_leverage with a full-size sketch equals exact leverage") {
  const Dataset data = gaussian_dataset(500, 4, 13);
  const ProbabilityVector exact = leverage_probs(data.x);
  const ProbabilityVector approx =
      approx_leverage_probs(data.x, data.n(), RngSeed{5});
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    REQUIRE(approx[i] == Catch::Approx(exact[i]).epsilon(1e-10));
  }
}

TEST_CASE("approx_leverage concentrates on symmetric rows") {
  const DenseMatrix x(2, 2, {1.0, 0.0, 0.0, 1.0});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ProbabilityVector pi = approx_leverage_probs(x, 40, RngSeed{seed});
    REQUIRE(std::abs(pi[0] - 0.5) <= 0.25);
    REQUIRE(std::abs(pi[1] - 0.5) <= 0.25);
  }
}

TEST_CASE("approx_leverage mean relative error stays moderate") {
  const Dataset data = gaussian_dataset(500, 4, 29);
  const ProbabilityVector exact = leverage_probs(data.x);
  double total_rel_err = 0.0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    const ProbabilityVector approx = approx_leverage_probs(
        data.x, 20 * data.d(), RngSeed{static_cast<std::uint64_t>(1000 + s)});
    double rel = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      rel += std::abs(approx[i] - exact[i]) / exact[i];
    }
    total_rel_err += rel / static_cast<double>(data.n());
  }
  REQUIRE(total_rel_err / seeds <= 0.5);
}

TEST_CASE("approx_leverage validates sketch_rows") {
  const Dataset data = gaussian_dataset(50, 4, 3);
  REQUIRE_THROWS_AS(approx_leverage_probs(data.x, 3, RngSeed{1}),
                    std::invalid_argument);
}

TEST_CASE("gradient_probs direct arithmetic") {
  Dataset data(DenseMatrix(2, 2, {1.0, 0.0, 0.0, 2.0}), Eigen::Vector2d(1.0, 4.0));
  const ProbabilityVector pi = gradient_probs(data, Eigen::Vector2d(0.0, 0.0));
  // gradient norms (1, 8)
  REQUIRE(pi[0] == Catch::Approx(1.0 / 9.0).epsilon(1e-14));
  REQUIRE(pi[1] == Catch::Approx(8.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("gradient_probs is uniform under symmetric rows and residuals") {
  Dataset data(DenseMatrix(4, 1, {1.0, -1.0, 1.0, -1.0}),
               Eigen::Vector4d(2.0, -2.0, 2.0, -2.0));
  const ProbabilityVector pi = gradient_probs(data, Eigen::VectorXd::Zero(1));
  for (Eigen::Index i = 0; i < 4; ++i) {
    REQUIRE(pi[i] == Catch::Approx(0.25).epsilon(1e-14));
  }
}

TEST_CASE("gradient_probs reproduces the illustration setup") {
  // 12 points x = +-3, +-2.5, ..., +-0.5; y = x + noise; pilot slope 0.5.
  std::vector<double> xs;
  for (double v : {3.0, 2.5, 2.0, 1.5, 1.0, 0.5}) {
    xs.push_back(v);
    xs.push_back(-v);
  }
  Rng noise(RngSeed{314});
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) y(i) = xs[i] + 0.5 * noise.normal();
  Dataset data(DenseMatrix(12, 1, xs), y);

  const Eigen::VectorXd beta0 = Eigen::VectorXd::Constant(1, 0.5);
  const ProbabilityVector pi = gradient_probs(data, beta0);

  // independent scalar recomputation of |x_i| |y_i - 0.5 x_i|
  long double total = 0.0L;
  std::vector<long double> scores(12);
  for (int i = 0; i < 12; ++i) {
    scores[i] = std::abs(xs[i]) * std::abs(y(i) - 0.5 * xs[i]);
    total += scores[i];
  }
  for (int i = 0; i < 12; ++i) {
    REQUIRE(pi[i] == Catch::Approx(static_cast<double>(scores[i] / total))
                         .epsilon(1e-12));
  }
}

TEST_CASE("gradient_probs rejects an interpolating pilot") {
  Dataset data(DenseMatrix(2, 1, {1.0, 2.0}), Eigen::Vector2d(3.0, 6.0));
  REQUIRE_THROWS_AS(gradient_probs(data, Eigen::VectorXd::Constant(1, 3.0)),
                    DegenerateGradients);
}

TEST_CASE("residual_oracle_probs closed form and coincidence with gradient") {
  Dataset data(DenseMatrix(2, 1, {1.0, 1.0}), Eigen::Vector2d(0.0, 2.0));
  const LsSolution full = solve_full(data);
  REQUIRE(full.beta(0) == Catch::Approx(1.0).margin(1e-14));
  const ProbabilityVector pi = residual_oracle_probs(data, full.beta);
  REQUIRE(pi[0] == Catch::Approx(0.5).margin(1e-14));
  REQUIRE(pi[1] == Catch::Approx(0.5).margin(1e-14));

  const Dataset big = gaussian_dataset(150, 4, 77, 2.0);
  const LsSolution sol = solve_full(big);
  const ProbabilityVector oracle = residual_oracle_probs(big, sol.beta);
  const ProbabilityVector grad = gradient_probs(big, sol.beta);
  for (Eigen::Index i = 0; i < big.n(); ++i) {
    REQUIRE(std::abs(oracle[i] - grad[i]) <= 1e-15);
  }
}

TEST_CASE("gradient_probs permutation equivariance") {
  const Dataset data = gaussian_dataset(40, 3, 91, 2.0);
  const Eigen::VectorXd beta0 = Eigen::Vector3d(0.3, -1.0, 0.5);
  const ProbabilityVector pi = gradient_probs(data, beta0);

  std::vector<Eigen::Index> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  Rng shuffle_rng(RngSeed{8});
  for (Eigen::Index i = 39; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(shuffle_rng.bits() %
                                             static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }

  RowMatrix xp(40, 3);
  Eigen::VectorXd yp(40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    xp.row(i) = data.x.row(perm[i]);
    yp(i) = data.y(perm[i]);
  }
  const ProbabilityVector pp =
      gradient_probs(Dataset(DenseMatrix(std::move(xp)), yp), beta0);
  for (Eigen::Index i = 0; i < 40; ++i) {
    REQUIRE(pp[i] == Catch::Approx(pi[perm[i]]).epsilon(1e-14));
  }
}

TEST_CASE("gradient_probs is invariant to residual scale") {
  const Dataset data = gaussian_dataset(60, 3, 23, 2.0);
  const Eigen::VectorXd beta0 = Eigen::Vector3d(0.1, 0.2, -0.3);
  const ProbabilityVector base = gradient_probs(data, beta0);

  const double c = 7.25;
  Dataset scaled(data.x, c * data.y);
  const ProbabilityVector pi = gradient_probs(scaled, c * beta0);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    REQUIRE(pi[i] == Catch::Approx(base[i]).epsilon(1e-12));
  }
}

TEST_CASE("to_inclusion literal capping") {
  SECTION("no capping") {
    const InclusionProbabilities p =
        to_inclusion(uniform_probs(4), 2.0, false);
    for (Eigen::Index i = 0; i < 4; ++i) REQUIRE(p.p(i) == 0.5);
    REQUIRE(p.expected_size == Catch::Approx(2.0).margin(1e-15));
    REQUIRE(p.capped_indices.empty());
  }
  SECTION("plain cap leaves expected size below r") {
    Eigen::Vector3d raw(0.6, 0.2, 0.2);
    const ProbabilityVector pi(raw, ProbMethod::uniform);
    const InclusionProbabilities p = to_inclusion(pi, 2.0, false);
    REQUIRE(p.p(0) == 1.0);
    REQUIRE(p.p(1) == Catch::Approx(0.4).margin(1e-15));
    REQUIRE(p.p(2) == Catch::Approx(0.4).margin(1e-15));
    REQUIRE(p.expected_size == Catch::Approx(1.8).margin(1e-12));
    REQUIRE(p.capped_indices == std::vector<Eigen::Index>{0});
  }
  SECTION("redistribute restores the expected size") {
    Eigen::Vector3d raw(0.6, 0.2, 0.2);
    const ProbabilityVector pi(raw, ProbMethod::uniform);
    const InclusionProbabilities p = to_inclusion(pi, 2.0, true);
    REQUIRE(p.p(0) == 1.0);
    REQUIRE(p.p(1) == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(p.p(2) == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(p.expected_size == Catch::Approx(2.0).margin(1e-12));
  }
}

TEST_CASE("to_inclusion redistribute invariant on random distributions") {
  Rng rng(RngSeed{66});
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 50;
    Eigen::VectorXd raw(n);
    for (Eigen::Index i = 0; i < n; ++i) raw(i) = 0.05 + rng.uniform();
    const ProbabilityVector pi =
        ProbabilityVector::from_scores(raw, ProbMethod::uniform);
    const double r = 1.0 + rng.uniform() * 80.0;  // sometimes above n
    const InclusionProbabilities p = to_inclusion(pi, r, true);
    REQUIRE(p.p.maxCoeff() <= 1.0);
    REQUIRE(p.expected_size ==
            Catch::Approx(std::min(r, static_cast<double>(n))).margin(1e-10));
  }
}

TEST_CASE("probability vectors sum to one and stay nonnegative") {
  const Dataset data = gaussian_dataset(300, 4, 101, 3.0);
  const LsSolution full = solve_full(data);
  const Eigen::VectorXd pilot = 0.5 * full.beta;

  const ProbabilityVector candidates[] = {
      uniform_probs(data.n()),
      leverage_probs(data.x),
      approx_leverage_probs(data.x, 80, RngSeed{4}),
      gradient_probs(data, pilot),
      residual_oracle_probs(data, full.beta),
  };
  for (const auto& pi : candidates) {
    REQUIRE(pi.pi().minCoeff() >= 0.0);
    REQUIRE(std::abs(kahan_sum(pi.pi()) - 1.0) <= 1e-12);
  }
}

TEST_CASE("ProbabilityVector constructor validates") {
  Eigen::Vector2d bad(-0.5, 1.5);
  REQUIRE_THROWS_AS(ProbabilityVector(bad, ProbMethod::uniform),
                    std::invalid_argument);
  Eigen::Vector2d off(0.5, 0.6);
  REQUIRE_THROWS_AS(ProbabilityVector(off, ProbMethod::uniform),
                    std::invalid_argument);
}
