#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gradsamp/errors.hpp"

namespace gradsamp {

// Row-major storage so that row views used by the samplers are contiguous.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense design matrix. Construction rejects NaN/Inf entries.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  explicit DenseMatrix(RowMatrix m) : m_(std::move(m)) { validate(); }

  DenseMatrix(Eigen::Index rows, Eigen::Index cols,
              const std::vector<double>& row_major_data)
      : m_(rows, cols) {
    if (static_cast<Eigen::Index>(row_major_data.size()) != rows * cols) {
      throw DimensionMismatch("DenseMatrix: data length " +
                              std::to_string(row_major_data.size()) +
                              " does not equal rows*cols = " +
                              std::to_string(rows * cols));
    }
    m_ = Eigen::Map<const RowMatrix>(row_major_data.data(), rows, cols);
    validate();
  }

  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }
  const RowMatrix& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  auto row(Eigen::Index i) const { return m_.row(i); }

 private:
  void validate() const {
    if (!m_.allFinite()) {
      throw std::invalid_argument("DenseMatrix: non-finite entry");
    }
  }

  RowMatrix m_;
};

// Design matrix plus response vector. n >= 1, d >= 1; the intended regime is
// n >> d but that is not enforced.
struct Dataset {
  DenseMatrix x;
  Eigen::VectorXd y;

  Dataset(DenseMatrix design, Eigen::VectorXd response)
      : x(std::move(design)), y(std::move(response)) {
    if (x.rows() < 1 || x.cols() < 1) {
      throw DimensionMismatch("Dataset: empty design matrix");
    }
    if (y.size() != x.rows()) {
      throw DimensionMismatch("Dataset: y length " + std::to_string(y.size()) +
                              " does not match rows " + std::to_string(x.rows()));
    }
    if (!y.allFinite()) {
      throw std::invalid_argument("Dataset: non-finite response entry");
    }
  }

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index d() const { return x.cols(); }
};

// Least-squares coefficients with solve diagnostics. residual_norm is the
// Euclidean norm of the (weighted, where applicable) residual on the rows
// used by the solve.
struct LsSolution {
  Eigen::VectorXd beta;
  double gram_min_eigenvalue = 0.0;
  double residual_norm = 0.0;
  Eigen::Index effective_sample_size = 0;
};

struct GramEigenExtremes {
  double min = 0.0;
  double max = 0.0;
};

namespace detail {

// Relative eigenvalue threshold below which a Gram matrix is declared
// singular.
inline constexpr double kSingularRelTol = 1e-12;

// Eigenvalue extremes of (A^T A)/denom from the triangular factor of A = QR.
// Singular values of R equal those of A, so the d x d SVD is exact and cheap.
inline GramEigenExtremes gram_extremes_from_factor(const Eigen::MatrixXd& r,
                                                   Eigen::Index full_cols,
                                                   double denom) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  const auto& s = svd.singularValues();
  GramEigenExtremes out;
  if (s.size() > 0) {
    out.max = s(0) * s(0) / denom;
    out.min = s(s.size() - 1) * s(s.size() - 1) / denom;
  }
  // Fewer rows than columns: the Gram is rank-deficient regardless of s.
  if (r.rows() < full_cols) out.min = 0.0;
  return out;
}

inline void throw_if_singular(const GramEigenExtremes& ext,
                              const std::string& context) {
  if (ext.max <= 0.0 || ext.min <= kSingularRelTol * ext.max) {
    throw SingularGram(context + ": smallest Gram eigenvalue " +
                       std::to_string(ext.min) + " below tolerance");
  }
}

}  // namespace detail

// Eigenvalue extremes of X^T X / n.
inline GramEigenExtremes gram_eigenvalue_extremes(const DenseMatrix& x) {
  if (x.rows() < 1 || x.cols() < 1) {
    throw std::invalid_argument("gram_eigenvalue_extremes: empty matrix");
  }
  const Eigen::Index d = x.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x.mat());
  const Eigen::Index k = std::min(x.rows(), d);
  Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return detail::gram_extremes_from_factor(r, d, static_cast<double>(x.rows()));
}

// Smallest eigenvalue of X^T X / n.
inline double gram_min_eigenvalue(const DenseMatrix& x) {
  return gram_eigenvalue_extremes(x).min;
}

// Full-sample least squares via Householder QR of the design. The Gram
// matrix is never inverted explicitly.
inline LsSolution solve_full(const Dataset& data) {
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(data.x.mat());
  const Eigen::Index k = std::min(n, d);
  Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const GramEigenExtremes ext =
      detail::gram_extremes_from_factor(r, d, static_cast<double>(n));
  detail::throw_if_singular(ext, "solve_full");

  LsSolution sol;
  sol.beta = qr.solve(data.y);
  sol.gram_min_eigenvalue = ext.min;
  sol.residual_norm = (data.y - data.x.mat() * sol.beta).norm();
  sol.effective_sample_size = n;
  return sol;
}

// Weighted least squares on selected rows: minimizes sum_j w_j (y_j - x_j'b)^2
// by QR of the row-scaled design. The reported Gram eigenvalue is taken with
// the full-sample 1/n normalization, matching the subsample Gram the weights
// are designed to estimate.
inline LsSolution weighted_least_squares(const Dataset& data,
                                         std::span<const Eigen::Index> indices,
                                         std::span<const double> weights) {
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  const Eigen::Index m = static_cast<Eigen::Index>(indices.size());
  if (m == 0) throw EmptyDraw("weighted_least_squares: no rows selected");
  if (indices.size() != weights.size()) {
    throw DimensionMismatch("weighted_least_squares: indices/weights length mismatch");
  }

  Eigen::MatrixXd a(m, d);
  Eigen::VectorXd b(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index i = indices[j];
    if (i < 0 || i >= n) {
      throw std::invalid_argument("weighted_least_squares: row index out of range");
    }
    const double w = weights[j];
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("weighted_least_squares: weights must be positive");
    }
    const double s = std::sqrt(w);
    a.row(j) = s * data.x.row(i);
    b(j) = s * data.y(i);
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::Index k = std::min(m, d);
  Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const GramEigenExtremes ext =
      detail::gram_extremes_from_factor(r, d, static_cast<double>(n));
  detail::throw_if_singular(ext, "weighted_least_squares");

  LsSolution sol;
  sol.beta = qr.solve(b);
  sol.gram_min_eigenvalue = ext.min;
  sol.residual_norm = (b - a * sol.beta).norm();
  sol.effective_sample_size = m;
  return sol;
}

}  // namespace gradsamp
