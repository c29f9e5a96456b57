#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace detopt {

/// Hadamard bound: |det(M)| <= prod_i ||row_i||_2. Used as the scale for
/// relative zero tests on determinants.
inline double hadamard_bound(const Eigen::MatrixXd& m) {
  double bound = 1.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    bound *= m.row(i).norm();
  }
  return bound;
}

/// Determinant by partially pivoted LU elimination.
inline double determinant(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("determinant: matrix is not square");
  }
  if (m.rows() == 0) return 1.0;
  return m.partialPivLu().determinant();
}

struct RankDeficiencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Nullspace vector of a square matrix whose numerical rank deficiency is
/// exactly one: the smallest singular value must be at most rel_tol times the
/// largest, and the second smallest must lie above that threshold. Returns a
/// unit vector oriented so that its first nonzero coordinate is positive.
inline Eigen::VectorXd nullspace_vector(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument("nullspace_vector: matrix must be square and nonempty");
  }
  const Eigen::Index n = m.rows();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const Eigen::VectorXd& sigma = svd.singularValues();  // descending
  const double threshold = rel_tol * sigma(0);
  if (!(sigma(n - 1) <= threshold)) {
    throw RankDeficiencyError("nullspace_vector: matrix is numerically nonsingular (smallest singular value " +
                              std::to_string(sigma(n - 1)) + " above threshold)");
  }
  if (n >= 2 && !(sigma(n - 2) > threshold)) {
    throw RankDeficiencyError("nullspace_vector: rank deficiency exceeds one");
  }
  Eigen::VectorXd v = svd.matrixV().col(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0) v = -v;
      break;
    }
  }
  return v;
}

}  // namespace detopt
