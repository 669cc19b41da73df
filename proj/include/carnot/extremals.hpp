#pragma once

#include <optional>

#include "carnot/controls.hpp"

namespace carnot {

/// One oscillating component of a normal extremal control:
/// cos(lambda s) a + sin(lambda s) a_perp with |a| = |a_perp| > 0 and
/// a, a_perp orthogonal.
struct TrigPair {
  double lambda = 0.0;
  VectorXd a;
  VectorXd a_perp;
};

/// Normal extremal control u(s) = e^{-tau A s} u0 in canonical trigonometric
/// form: pairwise-orthogonal pairs with ascending distinct rates plus the
/// constant kernel component z. Equal rates are merged, so
/// length^2 = |z|^2 + sum |a_k|^2 = |u0|^2.
struct NormalExtremal {
  VectorXd tau;
  VectorXd u0;
  std::vector<TrigPair> pairs;
  VectorXd z;

  int p() const { return static_cast<int>(pairs.size()); }
  double length() const { return u0.norm(); }
  VectorXd value_at(double s) const;
};

NormalExtremal make_extremal(const StepTwoGroup& G, const VectorXd& tau,
                             const VectorXd& u0);

/// Exact endpoint of the extremal trajectory via closed-form integration of
/// the trigonometric products (no time discretization).
GroupElement extremal_endpoint(const StepTwoGroup& G, const NormalExtremal& ext);

/// Midpoint sampling of the extremal control onto the uniform grid.
Control sample_control(const NormalExtremal& ext, int n_steps);

/// Witness of abnormality: a unit vertical covector whose matrix annihilates
/// the whole subspace W = span{a_k, a_k_perp, z}. dim W <= m-2 always holds
/// when a certificate exists.
struct AbnormalityCertificate {
  VectorXd sigma;
  std::vector<VectorXd> W_basis;
};

/// Solves sigma A w = 0 over all basis vectors w of W for sigma; returns a
/// unit solution if the nullspace is nontrivial at relative tolerance tol.
std::optional<AbnormalityCertificate> abnormality_test(const StepTwoGroup& G,
                                                       const NormalExtremal& ext,
                                                       double tol = 1e-10);

struct FreeMembership {
  bool is_abnormal_endpoint = false;
  std::vector<VectorXd> W_min_basis;
};

/// Free groups only: (x,t) is an endpoint of an abnormal curve iff the
/// minimal subspace W with (x,t) in W x Lambda^2 W has dim <= m-2.
FreeMembership abnormal_membership_free(const StepTwoGroup& G,
                                        const GroupElement& g,
                                        double tol = 1e-10);

struct Subspace {
  MatrixXd basis;  // orthonormal columns
  int dim() const { return static_cast<int>(basis.cols()); }
};

/// Image of the endpoint differential at an extremal with subspace W:
/// span{ (xi, <A w, eta>) : w in W, xi, eta in R^m } inside R^{m+ell}.
Subspace image_via_W(const StepTwoGroup& G, const std::vector<VectorXd>& W_basis);

/// W = span{a_k, a_k_perp, z} as an orthonormal basis.
std::vector<VectorXd> extremal_W_basis(const NormalExtremal& ext);

}  // namespace carnot
