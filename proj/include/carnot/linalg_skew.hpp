#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace carnot {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Thrown by vandermonde_span when two frequencies agree within the merge
/// tolerance, so the Vandermonde argument does not apply.
struct DuplicateFrequencyError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Real skew-symmetric m x m matrix. The constructor antisymmetrizes its
/// argument as (M - M^T)/2, after which entries(j,k) == -entries(k,j) holds
/// bit-for-bit (IEEE negation is exact).
class SkewMatrix {
 public:
  explicit SkewMatrix(const MatrixXd& raw);
  static SkewMatrix zero(int dim);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const MatrixXd& matrix() const { return mat_; }
  double operator()(int j, int k) const { return mat_(j, k); }
  double norm() const { return mat_.norm(); }

 private:
  MatrixXd mat_;
};

/// One invariant rotation plane of a skew matrix:
///   M v = lambda v_perp,   M v_perp = -lambda v,
/// with {v, v_perp} orthonormal and lambda > 0.
struct SpectralPlane {
  double lambda = 0.0;
  VectorXd v;
  VectorXd v_perp;
};

/// Plane decomposition of a skew matrix: rotation planes sorted by ascending
/// rate plus an orthonormal kernel basis. Always
/// 2*planes.size() + kernel_basis.size() == dim.
struct PlaneDecomposition {
  std::vector<SpectralPlane> planes;
  std::vector<VectorXd> kernel_basis;
  int dim = 0;

  /// Rebuilds the matrix as sum_h lambda_h (v_perp v^T - v v_perp^T).
  MatrixXd reassemble() const;
};

/// Spectral decomposition into rotation planes. Rates within relative 1e-9
/// are treated as one cluster; the plane partner is always chosen as
/// v_perp = M v / lambda, which fixes all sign ambiguities.
PlaneDecomposition skew_spectral(const SkewMatrix& M);

/// e^{scale * M} x through the plane formula: rotation by scale*lambda_h in
/// each plane, identity on the kernel. Preserves the Euclidean norm of x.
VectorXd exp_apply(const PlaneDecomposition& dec, const VectorXd& x,
                   double scale = 1.0);
VectorXd skew_exp_apply(const SkewMatrix& M, const VectorXd& x);

/// Element of the second exterior power of R^m, stored as dense coefficients
/// z_jk for 1 <= j < k <= m in lexicographic order. The basis {e_j ^ e_k} is
/// orthonormal for the inner product used throughout.
class Bivector {
 public:
  explicit Bivector(int dim);
  Bivector(int dim, VectorXd coeffs);

  static int coeff_count(int dim) { return dim * (dim - 1) / 2; }
  static int flat_index(int dim, int j, int k);  // requires j < k

  int dim() const { return dim_; }
  const VectorXd& coeffs() const { return c_; }
  double coeff(int j, int k) const;  // antisymmetric in (j, k)
  void set_coeff(int j, int k, double value);
  double norm() const { return c_.norm(); }

  /// The skew matrix M with M(j,k) = z_jk above the diagonal.
  SkewMatrix to_skew() const;

  Bivector operator+(const Bivector& other) const;
  Bivector operator*(double s) const;

 private:
  int dim_;
  VectorXd c_;
};

/// Elementary bivector x ^ y with coefficients x_j y_k - x_k y_j.
Bivector wedge(const VectorXd& x, const VectorXd& y);

/// Inner product; on elementary bivectors this equals
/// <x,xi><y,eta> - <x,eta><y,xi>.
double dot(const Bivector& a, const Bivector& b);

struct BivectorSupport {
  int rank = 0;                  // number of rotation planes
  std::vector<VectorXd> basis;   // orthonormal, 2*rank vectors
};

/// Rank and support of a bivector via the associated skew matrix; planes
/// with rate below tol * |z| are dropped.
BivectorSupport bivector_support(const Bivector& z, double tol);

/// Orthonormal basis of span{ sum_k lambda_k^(2j-1) v_k : 1 <= j <= p },
/// which equals span{v_1..v_p} for distinct positive rates.
std::vector<VectorXd> vandermonde_span(const std::vector<VectorXd>& vs,
                                       const std::vector<double>& lambdas);

/// Orthonormal basis of the column span of A. Directions with singular value
/// below tol * sigma_max are treated as zero. Returns an m x rank matrix.
MatrixXd orthonormal_columns(const MatrixXd& A, double tol = 1e-10);

}  // namespace carnot
