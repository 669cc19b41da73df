#include "carnot/linalg_skew.hpp"

#include <algorithm>
#include <cmath>

namespace carnot {

SkewMatrix::SkewMatrix(const MatrixXd& raw) {
  if (raw.rows() != raw.cols()) {
    throw std::invalid_argument("SkewMatrix: matrix must be square");
  }
  mat_ = 0.5 * (raw - raw.transpose());
}

SkewMatrix SkewMatrix::zero(int dim) {
  return SkewMatrix(MatrixXd::Zero(dim, dim));
}

MatrixXd PlaneDecomposition::reassemble() const {
  MatrixXd M = MatrixXd::Zero(dim, dim);
  for (const auto& p : planes) {
    M += p.lambda * (p.v_perp * p.v.transpose() - p.v * p.v_perp.transpose());
  }
  return M;
}

PlaneDecomposition skew_spectral(const SkewMatrix& M) {
  const int m = M.dim();
  PlaneDecomposition dec;
  dec.dim = m;

  if (M.norm() == 0.0) {
    for (int i = 0; i < m; ++i) dec.kernel_basis.push_back(VectorXd::Unit(m, i));
    return dec;
  }

  // -M^2 = M^T M is symmetric PSD with eigenvalue lambda^2 on each plane.
  const MatrixXd S = -(M.matrix() * M.matrix());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  const double rate_max = std::sqrt(std::max(es.eigenvalues()(m - 1), 0.0));

  // Eigenvalues come sorted ascending; split off the kernel. The membership
  // test applies M directly: sqrt of the eigensolver noise on S would sit
  // around 1e-8 * rate_max, far above the actual kernel response.
  constexpr double kKernelTol = 1e-10;
  int n_kernel = 0;
  while (n_kernel < m &&
         (M.matrix() * es.eigenvectors().col(n_kernel)).norm() <=
             kKernelTol * rate_max) {
    dec.kernel_basis.push_back(es.eigenvectors().col(n_kernel));
    ++n_kernel;
  }

  // Extract planes from the non-kernel block: v from the smallest remaining
  // rate, v_perp = Mv/|Mv| (which lies in the same eigenspace of M^T M), then
  // project the pair out. Surviving columns keep norm ~ 1, consumed ones drop
  // to ~ 0, so an absolute 0.5 filter separates them.
  MatrixXd block = es.eigenvectors().rightCols(m - n_kernel);
  while (block.cols() >= 2) {
    const VectorXd v = block.col(0).normalized();
    const VectorXd w = M.matrix() * v;
    const double lambda = w.norm();
    const VectorXd v_perp = w / lambda;
    dec.planes.push_back({lambda, v, v_perp});

    MatrixXd rest = block.rightCols(block.cols() - 1);
    rest -= v * (v.transpose() * rest);
    rest -= v_perp * (v_perp.transpose() * rest);
    // Surviving columns stay inside their own eigenspaces (the projection
    // only removes span{v, v_perp}); renormalizing keeps them orthonormal to
    // working precision without mixing eigenspaces.
    MatrixXd kept(m, rest.cols());
    int n_kept = 0;
    for (int c = 0; c < rest.cols(); ++c) {
      if (rest.col(c).norm() > 0.5) kept.col(n_kept++) = rest.col(c).normalized();
    }
    block = kept.leftCols(n_kept);
  }
  if (block.cols() == 1) {
    // A lone non-kernel direction cannot carry a rotation; it is kernel-level
    // leakage through the threshold.
    dec.kernel_basis.push_back(block.col(0).normalized());
  }

  std::stable_sort(dec.planes.begin(), dec.planes.end(),
                   [](const SpectralPlane& a, const SpectralPlane& b) {
                     return a.lambda < b.lambda;
                   });
  return dec;
}

VectorXd exp_apply(const PlaneDecomposition& dec, const VectorXd& x, double scale) {
  VectorXd y = x;
  for (const auto& p : dec.planes) {
    const double c1 = p.v.dot(x);
    const double c2 = p.v_perp.dot(x);
    const double ang = scale * p.lambda;
    const double co = std::cos(ang);
    const double si = std::sin(ang);
    y += (co - 1.0) * (c1 * p.v + c2 * p.v_perp) + si * (c1 * p.v_perp - c2 * p.v);
  }
  return y;
}

VectorXd skew_exp_apply(const SkewMatrix& M, const VectorXd& x) {
  if (M.dim() != x.size()) {
    throw std::invalid_argument("skew_exp_apply: dimension mismatch");
  }
  return exp_apply(skew_spectral(M), x);
}

Bivector::Bivector(int dim) : dim_(dim), c_(VectorXd::Zero(coeff_count(dim))) {}

Bivector::Bivector(int dim, VectorXd coeffs) : dim_(dim), c_(std::move(coeffs)) {
  if (c_.size() != coeff_count(dim)) {
    throw std::invalid_argument("Bivector: wrong coefficient count");
  }
}

int Bivector::flat_index(int dim, int j, int k) {
  // Lexicographic position of (j,k), 0-based, j < k.
  return j * dim - j * (j + 1) / 2 + (k - j - 1);
}

double Bivector::coeff(int j, int k) const {
  if (j == k) return 0.0;
  if (j < k) return c_(flat_index(dim_, j, k));
  return -c_(flat_index(dim_, k, j));
}

void Bivector::set_coeff(int j, int k, double value) {
  if (j < k) {
    c_(flat_index(dim_, j, k)) = value;
  } else {
    c_(flat_index(dim_, k, j)) = -value;
  }
}

SkewMatrix Bivector::to_skew() const {
  MatrixXd M = MatrixXd::Zero(dim_, dim_);
  for (int j = 0; j < dim_; ++j) {
    for (int k = j + 1; k < dim_; ++k) {
      M(j, k) = coeff(j, k);
      M(k, j) = -coeff(j, k);
    }
  }
  return SkewMatrix(M);
}

Bivector Bivector::operator+(const Bivector& other) const {
  if (other.dim_ != dim_) throw std::invalid_argument("Bivector: dimension mismatch");
  return Bivector(dim_, c_ + other.c_);
}

Bivector Bivector::operator*(double s) const { return Bivector(dim_, c_ * s); }

Bivector wedge(const VectorXd& x, const VectorXd& y) {
  if (x.size() != y.size()) throw std::invalid_argument("wedge: dimension mismatch");
  const int m = static_cast<int>(x.size());
  Bivector z(m);
  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k) {
      z.set_coeff(j, k, x(j) * y(k) - x(k) * y(j));
    }
  }
  return z;
}

double dot(const Bivector& a, const Bivector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dot: dimension mismatch");
  return a.coeffs().dot(b.coeffs());
}

BivectorSupport bivector_support(const Bivector& z, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("bivector_support: tol must be > 0");
  BivectorSupport out;
  const double zn = z.norm();
  if (zn == 0.0) return out;
  PlaneDecomposition dec = skew_spectral(z.to_skew());
  for (const auto& p : dec.planes) {
    if (p.lambda <= tol * zn) continue;
    out.rank += 1;
    out.basis.push_back(p.v);
    out.basis.push_back(p.v_perp);
  }
  return out;
}

std::vector<VectorXd> vandermonde_span(const std::vector<VectorXd>& vs,
                                       const std::vector<double>& lambdas) {
  const int p = static_cast<int>(vs.size());
  if (static_cast<int>(lambdas.size()) != p) {
    throw std::invalid_argument("vandermonde_span: |vs| != |lambdas|");
  }
  if (p == 0) return {};
  const int m = static_cast<int>(vs[0].size());
  for (const auto& v : vs) {
    if (v.size() != m) throw std::invalid_argument("vandermonde_span: mixed dimensions");
  }
  for (int i = 0; i < p; ++i) {
    if (!(lambdas[i] > 0.0)) {
      throw std::invalid_argument("vandermonde_span: lambdas must be positive");
    }
    for (int j = i + 1; j < p; ++j) {
      if (std::abs(lambdas[i] - lambdas[j]) <=
          1e-9 * std::max(lambdas[i], lambdas[j])) {
        throw DuplicateFrequencyError("vandermonde_span: duplicate lambda");
      }
    }
  }

  MatrixXd W(m, p);
  for (int j = 0; j < p; ++j) {
    VectorXd w = VectorXd::Zero(m);
    for (int k = 0; k < p; ++k) {
      w += std::pow(lambdas[k], 2 * j + 1) * vs[k];
    }
    W.col(j) = w;
  }
  const MatrixXd Q = orthonormal_columns(W, 1e-10);
  std::vector<VectorXd> basis;
  basis.reserve(Q.cols());
  for (int j = 0; j < Q.cols(); ++j) basis.push_back(Q.col(j));
  return basis;
}

MatrixXd orthonormal_columns(const MatrixXd& A, double tol) {
  if (A.cols() == 0 || A.norm() == 0.0) return MatrixXd(A.rows(), 0);
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeThinU);
  const double smax = svd.singularValues()(0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > tol * smax) ++rank;
  }
  return svd.matrixU().leftCols(rank);
}

}  // namespace carnot
