#include "carnot/extremals.hpp"

#include <cmath>

namespace carnot {

namespace {

// Primitives for the closed-form endpoint. All accept signed arguments and
// are evaluated by series near zero to avoid cancellation.

// int_0^1 cos(w s) ds = sin(w)/w
double Sc(double w) {
  if (std::abs(w) < 1e-4) {
    const double w2 = w * w;
    return 1.0 - w2 / 6.0 + w2 * w2 / 120.0;
  }
  return std::sin(w) / w;
}

// int_0^1 sin(w s) ds = (1 - cos w)/w
double Vs(double w) {
  if (std::abs(w) < 1e-4) {
    const double w2 = w * w;
    return w * (0.5 - w2 / 24.0 + w2 * w2 / 720.0);
  }
  const double half = std::sin(0.5 * w);
  return 2.0 * half * half / w;
}

// int_0^1 s cos(w s) ds
double Pc(double w) {
  if (std::abs(w) < 1e-3) {
    const double w2 = w * w;
    return 0.5 - w2 / 8.0 + w2 * w2 / 144.0;
  }
  return (std::cos(w) + w * std::sin(w) - 1.0) / (w * w);
}

// int_0^1 s sin(w s) ds
double Ps(double w) {
  if (std::abs(w) < 1e-3) {
    const double w2 = w * w;
    return w * (1.0 / 3.0 - w2 / 30.0 + w2 * w2 / 840.0);
  }
  return (std::sin(w) - w * std::cos(w)) / (w * w);
}

}  // namespace

VectorXd NormalExtremal::value_at(double s) const {
  VectorXd u = z;
  for (const auto& pr : pairs) {
    u += std::cos(pr.lambda * s) * pr.a + std::sin(pr.lambda * s) * pr.a_perp;
  }
  return u;
}

NormalExtremal make_extremal(const StepTwoGroup& G, const VectorXd& tau,
                             const VectorXd& u0) {
  if (tau.size() != G.ell() || u0.size() != G.m()) {
    throw std::invalid_argument("make_extremal: dimension mismatch");
  }
  NormalExtremal ext;
  ext.tau = tau;
  ext.u0 = u0;

  const SkewMatrix M(-G.sigma_A(tau).matrix());
  const PlaneDecomposition dec = skew_spectral(M);

  ext.z = VectorXd::Zero(G.m());
  for (const auto& k : dec.kernel_basis) ext.z += k.dot(u0) * k;

  const double drop_tol = 1e-12 * std::max(u0.norm(), 1e-300);
  size_t i = 0;
  while (i < dec.planes.size()) {
    // skew_spectral merges rates at relative 1e-9; planes sharing a rate
    // cluster collapse to a single pair (the sums keep |a| = |a_perp| and
    // the orthogonality, because distinct planes are orthogonal).
    size_t j = i;
    VectorXd a = VectorXd::Zero(G.m());
    VectorXd a_perp = VectorXd::Zero(G.m());
    const double lambda = dec.planes[i].lambda;
    while (j < dec.planes.size() &&
           dec.planes[j].lambda - lambda <= 1e-9 * dec.planes[j].lambda) {
      const auto& pl = dec.planes[j];
      const double c1 = pl.v.dot(u0);
      const double c2 = pl.v_perp.dot(u0);
      a += c1 * pl.v + c2 * pl.v_perp;
      a_perp += c1 * pl.v_perp - c2 * pl.v;
      ++j;
    }
    if (a.norm() > drop_tol) {
      ext.pairs.push_back({lambda, a, a_perp});
    }
    i = j;
  }
  return ext;
}

GroupElement extremal_endpoint(const StepTwoGroup& G, const NormalExtremal& ext) {
  const int m = G.m();
  const int p = ext.p();

  // x(1) = sum_k [ Sc(l_k) a_k + Vs(l_k) a_k_perp ] + z.
  VectorXd x = ext.z;
  for (const auto& pr : ext.pairs) {
    x += Sc(pr.lambda) * pr.a + Vs(pr.lambda) * pr.a_perp;
  }

  // t_a(1) = <A^a, T>_F / 2 with the moment matrix T = int_0^1 x(s) u(s)^T ds,
  // assembled from the pairwise trigonometric integrals. Writing
  // S_k = sin(l_k s)/l_k and C_k = (1 - cos(l_k s))/l_k for the components of
  // x(s), the needed integrals reduce to Sc/Vs at l_k +- l_j.
  MatrixXd T = MatrixXd::Zero(m, m);
  for (int k = 0; k < p; ++k) {
    const auto& K = ext.pairs[k];
    const double lk = K.lambda;
    for (int j = 0; j < p; ++j) {
      const auto& J = ext.pairs[j];
      const double lj = J.lambda;
      const double i_s_cos = 0.5 / lk * (Vs(lk + lj) + Vs(lk - lj));
      const double i_s_sin = 0.5 / lk * (Sc(lk - lj) - Sc(lk + lj));
      const double i_c_cos = (Sc(lj) - 0.5 * (Sc(lk - lj) + Sc(lk + lj))) / lk;
      const double i_c_sin = (Vs(lj) - 0.5 * (Vs(lk + lj) - Vs(lk - lj))) / lk;
      T += i_s_cos * (K.a * J.a.transpose());
      T += i_s_sin * (K.a * J.a_perp.transpose());
      T += i_c_cos * (K.a_perp * J.a.transpose());
      T += i_c_sin * (K.a_perp * J.a_perp.transpose());
    }
    // x-pair against constant z, and s*z against the pair of u.
    T += (Vs(lk) / lk) * (K.a * ext.z.transpose());
    T += ((1.0 - Sc(lk)) / lk) * (K.a_perp * ext.z.transpose());
    T += Pc(lk) * (ext.z * K.a.transpose());
    T += Ps(lk) * (ext.z * K.a_perp.transpose());
  }
  T += 0.5 * (ext.z * ext.z.transpose());

  VectorXd t(G.ell());
  for (int a = 0; a < G.ell(); ++a) {
    t(a) = 0.5 * (G.structure_matrix(a).matrix().array() * T.array()).sum();
  }
  return {x, t};
}

Control sample_control(const NormalExtremal& ext, int n_steps) {
  Control u{MatrixXd(ext.u0.size(), n_steps)};
  for (int i = 0; i < n_steps; ++i) {
    u.values.col(i) = ext.value_at((i + 0.5) / n_steps);
  }
  return u;
}

std::vector<VectorXd> extremal_W_basis(const NormalExtremal& ext) {
  std::vector<VectorXd> basis;
  for (const auto& pr : ext.pairs) {
    basis.push_back(pr.a.normalized());
    basis.push_back(pr.a_perp.normalized());
  }
  if (ext.z.norm() > 1e-12 * std::max(ext.u0.norm(), 1e-300)) {
    basis.push_back(ext.z.normalized());
  }
  return basis;
}

std::optional<AbnormalityCertificate> abnormality_test(const StepTwoGroup& G,
                                                       const NormalExtremal& ext,
                                                       double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("abnormality_test: tol must be > 0");
  const auto W = extremal_W_basis(ext);
  if (W.empty()) return std::nullopt;  // zero control

  // Stack the linear maps sigma -> (sigma A) w over all basis vectors of W.
  const int m = G.m();
  const int ell = G.ell();
  MatrixXd K(static_cast<int>(W.size()) * m, ell);
  for (size_t b = 0; b < W.size(); ++b) {
    for (int a = 0; a < ell; ++a) {
      K.block(static_cast<int>(b) * m, a, m, 1) = G.structure_matrix(a).matrix() * W[b];
    }
  }
  Eigen::JacobiSVD<MatrixXd> svd(K, Eigen::ComputeFullV);
  const double smax = svd.singularValues()(0);
  VectorXd sigma;
  if (smax == 0.0) {
    sigma = VectorXd::Unit(ell, 0);
  } else {
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i) {
      if (svd.singularValues()(i) > tol * smax) ++rank;
    }
    if (rank >= ell) return std::nullopt;
    sigma = svd.matrixV().col(ell - 1);
  }
  // Deterministic sign: first nonzero component positive.
  for (int i = 0; i < sigma.size(); ++i) {
    if (sigma(i) != 0.0) {
      if (sigma(i) < 0.0) sigma = -sigma;
      break;
    }
  }
  return AbnormalityCertificate{sigma, W};
}

FreeMembership abnormal_membership_free(const StepTwoGroup& G,
                                        const GroupElement& g, double tol) {
  if (!G.is_free()) {
    throw std::invalid_argument("abnormal_membership_free: group is not free");
  }
  const int m = G.m();
  const double scale = std::max(1.0, g.norm());
  std::vector<VectorXd> gens;
  if (g.x.norm() > tol * scale) gens.push_back(g.x);
  const Bivector t = vertical_bivector(G, g);
  const BivectorSupport sup = bivector_support(t, tol);
  for (const auto& v : sup.basis) gens.push_back(v);

  FreeMembership out;
  if (gens.empty()) {
    out.is_abnormal_endpoint = true;  // the identity, W = {0}
    return out;
  }
  MatrixXd A(m, static_cast<int>(gens.size()));
  for (size_t i = 0; i < gens.size(); ++i) A.col(static_cast<int>(i)) = gens[i];
  const MatrixXd Q = orthonormal_columns(A, tol);
  for (int i = 0; i < Q.cols(); ++i) out.W_min_basis.push_back(Q.col(i));
  out.is_abnormal_endpoint = Q.cols() <= m - 2;
  return out;
}

Subspace image_via_W(const StepTwoGroup& G, const std::vector<VectorXd>& W_basis) {
  const int m = G.m();
  const int ell = G.ell();

  // Vertical span {<A w, eta> : w in W, eta in R^m} as columns in R^ell.
  MatrixXd L(ell, static_cast<int>(W_basis.size()) * m);
  for (size_t b = 0; b < W_basis.size(); ++b) {
    for (int a = 0; a < ell; ++a) {
      L.block(a, static_cast<int>(b) * m, 1, m) =
          (G.structure_matrix(a).matrix() * W_basis[b]).transpose();
    }
  }
  const MatrixXd Q = W_basis.empty() ? MatrixXd(ell, 0) : orthonormal_columns(L, 1e-10);

  Subspace img;
  img.basis = MatrixXd::Zero(m + ell, m + Q.cols());
  img.basis.topLeftCorner(m, m).setIdentity();
  img.basis.bottomRightCorner(ell, Q.cols()) = Q;
  return img;
}

}  // namespace carnot
