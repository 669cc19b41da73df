#pragma once

#include <vector>

#include "carnot/groups.hpp"

namespace carnot {

/// Piecewise-constant control on the uniform grid over [0,1]: value(i) holds
/// on [i/N, (i+1)/N). Columns of values are the steps.
struct Control {
  MatrixXd values;  // m x N

  int n_steps() const { return static_cast<int>(values.cols()); }
  int dim() const { return static_cast<int>(values.rows()); }

  double l2_norm_sq() const { return values.squaredNorm() / n_steps(); }
  double l2_norm() const { return std::sqrt(l2_norm_sq()); }

  static Control zero(int m, int n_steps) {
    return {MatrixXd::Zero(m, n_steps)};
  }
  static Control constant(const VectorXd& value, int n_steps) {
    Control u{MatrixXd(value.size(), n_steps)};
    u.values.colwise() = value;
    return u;
  }
  /// Flattened view, column per step: entry i*m + c.
  VectorXd flatten() const;
  static Control from_flat(int m, const VectorXd& flat);

  /// Same control on the doubled grid (exactly the same L^2 function).
  Control refined() const;
};

/// Endpoint map E(u): final point of the trajectory driven by u from the
/// identity, integrated exactly segment by segment (the flow of a constant
/// control is polynomial in all supported systems).
GroupElement endpoint(const StepTwoGroup& G, const Control& u);
GroupElement endpoint(const ModelSystem& M, const Control& u);
GroupElement endpoint(const Group& G, const Control& u);

struct EndpointJacobian {
  MatrixXd matrix;  // state_dim x (N*m); column i*m + c
  int n_steps = 0;
  int control_dim = 0;

  VectorXd apply(const Control& v) const { return matrix * v.flatten(); }
};

/// Exact differential of the (discretized) endpoint map at u. For step-two
/// groups this is the closed form
///   dE(u) v = (int v, int < A(x/2 - int_0^s u), v(s) > ds)
/// evaluated exactly on the grid; for the models it is exact per-segment
/// variational propagation.
EndpointJacobian d_endpoint(const StepTwoGroup& G, const Control& u);
EndpointJacobian d_endpoint(const ModelSystem& M, const Control& u);
EndpointJacobian d_endpoint(const Group& G, const Control& u);

/// dE(u)^T y without materializing the Jacobian (solver hot path).
VectorXd endpoint_vjp(const StepTwoGroup& G, const Control& u, const VectorXd& y);
VectorXd endpoint_vjp(const ModelSystem& M, const Control& u, const VectorXd& y);
VectorXd endpoint_vjp(const Group& G, const Control& u, const VectorXd& y);

struct RankResult {
  int rank = 0;
  MatrixXd image_basis;  // state_dim x rank, orthonormal
  VectorXd singular_values;
};

/// Numerical rank of dE(u): singular values >= tol * sigma_max count.
RankResult endpoint_rank(const Group& G, const Control& u, double tol = 1e-8);

/// True iff dE(u) is not surjective at tolerance tol.
bool is_singular_control(const Group& G, const Control& u, double tol = 1e-8);

/// Left-to-right concatenation with time rescaled onto [0,1/2] and [1/2,1].
Control concatenate(const Control& u, const Control& v);

}  // namespace carnot
