#pragma once

#include <vector>

#include "carnot/linalg_skew.hpp"
#include "carnot/rng.hpp"

namespace carnot::testutil {

inline MatrixXd random_skew(Rng& rng, int m, double scale = 1.0) {
  MatrixXd M = MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k) {
      M(j, k) = scale * rng.gaussian();
      M(k, j) = -M(j, k);
    }
  }
  return M;
}

inline MatrixXd basis_matrix(const std::vector<VectorXd>& basis) {
  if (basis.empty()) return MatrixXd(0, 0);
  MatrixXd B(basis[0].size(), basis.size());
  for (size_t i = 0; i < basis.size(); ++i) B.col(static_cast<int>(i)) = basis[i];
  return B;
}

/// Distance between the spans of two orthonormal bases (0 iff equal spans).
inline double span_gap(const MatrixXd& A, const MatrixXd& B) {
  if (A.cols() != B.cols()) return 1.0;
  if (A.cols() == 0) return 0.0;
  const MatrixXd PA = A * A.transpose();
  const MatrixXd PB = B * B.transpose();
  return (PA - PB).norm();
}

inline bool spans_vector(const std::vector<VectorXd>& basis, const VectorXd& v,
                         double tol = 1e-9) {
  VectorXd r = v;
  for (const auto& b : basis) r -= b.dot(v) * b;
  return r.norm() <= tol * std::max(1.0, v.norm());
}

}  // namespace carnot::testutil
