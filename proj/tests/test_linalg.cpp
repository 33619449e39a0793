#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

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

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

}  // namespace

TEST_CASE("solve_full fits a constant column") {
  Dataset data(DenseMatrix(2, 1, {1.0, 1.0}), Eigen::Vector2d(2.0, 2.0));
  const LsSolution sol = solve_full(data);
  REQUIRE(sol.beta.size() == 1);
  REQUIRE(sol.beta(0) == Catch::Approx(2.0).margin(1e-14));
  REQUIRE(sol.residual_norm == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(sol.effective_sample_size == 2);
}

TEST_CASE("solve_full recovers a consistent system exactly") {
  Dataset data(DenseMatrix(2, 2, {1.0, 0.0, 0.0, 1.0}), Eigen::Vector2d(3.0, -1.0));
  const LsSolution sol = solve_full(data);
  REQUIRE(sol.beta(0) == Catch::Approx(3.0).margin(1e-14));
  REQUIRE(sol.beta(1) == Catch::Approx(-1.0).margin(1e-14));
}

TEST_CASE("solve_full matches the normal-equations oracle") {
  const Dataset data = gaussian_dataset(50, 3, 11);
  const LsSolution sol = solve_full(data);
  const Eigen::VectorXd expected = oracles::normal_equations_full(data);
  REQUIRE((sol.beta - expected).norm() <= 1e-10 * expected.norm());
}

TEST_CASE("solve_full reports orthogonal residuals") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const Dataset data = gaussian_dataset(120, 6, seed, 5.0);
    const LsSolution sol = solve_full(data);
    const Eigen::VectorXd grad =
        data.x.mat().transpose() * (data.y - data.x.mat() * sol.beta);
    REQUIRE(grad.norm() <= 1e-8 * (data.x.mat().transpose() * data.y).norm());
  }
}

TEST_CASE("solve_full rejects rank-deficient designs") {
  // second column is twice the first
  Dataset data(DenseMatrix(4, 2, {1, 2, 2, 4, 3, 6, 4, 8}),
               Eigen::Vector4d(1, 2, 3, 4));
  REQUIRE_THROWS_AS(solve_full(data), SingularGram);
}

TEST_CASE("solve_weighted over all rows with unit weights reduces to solve_full") {
  const Dataset data = gaussian_dataset(80, 4, 21);
  const LsSolution full = solve_full(data);

  SubsampleDraw draw;
  draw.indices = all_rows(data.n());
  draw.weights.assign(draw.indices.size(), 1.0);
  draw.realized_size = data.n();
  const LsSolution sub = solve_weighted(data, draw);

  REQUIRE((sub.beta - full.beta).norm() <= 1e-12 * full.beta.norm());
  REQUIRE(sub.gram_min_eigenvalue ==
          Catch::Approx(full.gram_min_eigenvalue).epsilon(1e-12));
}

TEST_CASE("solve_weighted interpolates a single point regardless of weight") {
  Dataset data(DenseMatrix(3, 1, {2.0, 1.0, 5.0}), Eigen::Vector3d(6.0, 0.0, 0.0));
  SubsampleDraw draw;
  draw.indices = {0};
  draw.weights = {0.37};
  draw.realized_size = 1;
  const LsSolution sol = solve_weighted(data, draw);
  REQUIRE(sol.beta(0) == Catch::Approx(3.0).margin(1e-14));
}

TEST_CASE("solve_weighted matches the weighted normal-equations oracle") {
  const Dataset data = gaussian_dataset(200, 5, 33, 2.0);
  const ProbabilityVector pi = uniform_probs(data.n());
  const InclusionProbabilities inc = to_inclusion(pi, 60.0, false);
  const SubsampleDraw draw = poisson_sample(inc, pi, 60.0, RngSeed{99});

  const LsSolution sol = solve_weighted(data, draw);
  const Eigen::VectorXd expected =
      oracles::normal_equations(data, draw.indices, draw.weights);
  REQUIRE((sol.beta - expected).norm() <= 1e-10 * expected.norm());
  REQUIRE(sol.effective_sample_size == draw.realized_size);
}

TEST_CASE("solve_weighted error paths") {
  const Dataset data = gaussian_dataset(30, 3, 5);
  SubsampleDraw draw;
  SECTION("empty draw") {
    REQUIRE_THROWS_AS(solve_weighted(data, draw), EmptyDraw);
  }
  SECTION("subsample smaller than d is singular") {
    draw.indices = {0, 1};
    draw.weights = {1.0, 1.0};
    draw.realized_size = 2;
    REQUIRE_THROWS_AS(solve_weighted(data, draw), SingularGram);
  }
  SECTION("nonpositive weight rejected") {
    draw.indices = {0, 1, 2, 3};
    draw.weights = {1.0, 1.0, -1.0, 1.0};
    draw.realized_size = 4;
    REQUIRE_THROWS_AS(solve_weighted(data, draw), std::invalid_argument);
  }
  SECTION("index out of range rejected") {
    draw.indices = {0, 1, 2, 99};
    draw.weights = {1.0, 1.0, 1.0, 1.0};
    draw.realized_size = 4;
    REQUIRE_THROWS_AS(solve_weighted(data, draw), std::invalid_argument);
  }
}

TEST_CASE("gram_min_eigenvalue closed forms") {
  DenseMatrix identity_rows(2, 2, {1.0, 0.0, 0.0, 1.0});
  REQUIRE(gram_min_eigenvalue(identity_rows) == Catch::Approx(0.5).margin(1e-14));

  DenseMatrix column(2, 1, {1.0, 2.0});
  REQUIRE(gram_min_eigenvalue(column) == Catch::Approx(2.5).margin(1e-12));
}

TEST_CASE("gram_min_eigenvalue matches the symmetric eigensolver oracle") {
  const Dataset data = gaussian_dataset(100, 4, 17);
  const double got = gram_min_eigenvalue(data.x);
  const double expected = oracles::gram_min_eigenvalue(data.x);
  REQUIRE(got == Catch::Approx(expected).epsilon(1e-10));
}

TEST_CASE("scale equivariance of the full solve") {
  const Dataset base = gaussian_dataset(60, 4, 44, 3.0);
  const LsSolution sol = solve_full(base);
  const double c = 3.7;

  Dataset scaled_y(base.x, c * base.y);
  const LsSolution sol_y = solve_full(scaled_y);
  REQUIRE((sol_y.beta - c * sol.beta).norm() <= 1e-12 * sol.beta.norm() * c);

  RowMatrix xs = base.x.mat();
  xs.col(2) *= c;
  Dataset scaled_x(DenseMatrix(std::move(xs)), base.y);
  const LsSolution sol_x = solve_full(scaled_x);
  Eigen::VectorXd expected = sol.beta;
  expected(2) /= c;
  REQUIRE((sol_x.beta - expected).norm() <= 1e-12 * expected.norm());
}

TEST_CASE("mean subsample Gram is unbiased for the full Gram") {
  const Dataset data = gaussian_dataset(40, 3, 55, 2.0);
  const ProbabilityVector pi = leverage_probs(data.x);
  const double r = 10.0;
  const InclusionProbabilities inc = to_inclusion(pi, r, false);
  const Eigen::MatrixXd full_gram =
      data.x.mat().transpose() * data.x.mat() / static_cast<double>(data.n());

  const int b_draws = 2000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 3);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(3, 3);
  for (int b = 0; b < b_draws; ++b) {
    Eigen::MatrixXd gram;
    try {
      const SubsampleDraw draw =
          poisson_sample(inc, pi, r, derive_seed(RngSeed{900}, b));
      gram = oracles::subsample_gram(data, draw);
    } catch (const EmptyDraw&) {
      gram = Eigen::MatrixXd::Zero(3, 3);  // empty Horvitz-Thompson sum
    }
    sum += gram;
    sum_sq += gram.cwiseProduct(gram);
  }
  const Eigen::MatrixXd mean = sum / b_draws;
  const Eigen::MatrixXd var =
      (sum_sq / b_draws - mean.cwiseProduct(mean)) * (b_draws / (b_draws - 1.0));
  for (Eigen::Index a = 0; a < 3; ++a) {
    for (Eigen::Index c = 0; c < 3; ++c) {
      const double se = std::sqrt(var(a, c) / b_draws);
      REQUIRE(std::abs(mean(a, c) - full_gram(a, c)) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("DenseMatrix and Dataset construction invariants") {
  REQUIRE_THROWS_AS(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), DimensionMismatch);
  REQUIRE_THROWS_AS(
      DenseMatrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      Dataset(DenseMatrix(2, 1, {1.0, 2.0}), Eigen::Vector3d(1, 2, 3)),
      DimensionMismatch);
}
