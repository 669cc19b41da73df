#include "carnot/probes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace carnot {

namespace {

constexpr double kPi = std::numbers::pi;

void check_parameter_floor(double param, double base_distance,
                           const SolverOptions& opts) {
  const double floor = 10.0 * opts.value_rel_acc * std::max(base_distance, 1e-12);
  if (std::abs(param) < floor * (1.0 - 1e-12)) {
    throw std::invalid_argument(
        "probe: parameter " + std::to_string(param) +
        " is below the value-accuracy floor " + std::to_string(floor));
  }
}

ProbeVerdict bound_verdict(const std::vector<ProbePoint>& points,
                           const SolverOptions& opts, std::string& note) {
  bool all_converged = true;
  for (const auto& pt : points) {
    if (!pt.converged) {
      all_converged = false;
      continue;
    }
    if (pt.lower_bound &&
        pt.distance < *pt.lower_bound - combined_tolerance(pt.distance, opts)) {
      note = "certified lower bound breached at parameter " +
             std::to_string(pt.parameter);
      return ProbeVerdict::Violation;
    }
  }
  if (!all_converged) {
    note = "one or more solves did not converge";
    return ProbeVerdict::Inconclusive;
  }
  return ProbeVerdict::Consistent;
}

// Strict growth of quotients as |parameter| decreases, with tolerances
// propagated through the quotient denominators. Points must carry distinct
// |parameter| values already.
bool strictly_increasing_towards_zero(const std::vector<ProbePoint>& pts,
                                      const SolverOptions& opts, double power) {
  std::vector<ProbePoint> sorted = pts;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::abs(a.parameter) > std::abs(b.parameter);
  });
  for (size_t i = 1; i < sorted.size(); ++i) {
    const auto& big = sorted[i - 1];
    const auto& small = sorted[i];
    const double tol = combined_tolerance(big.distance, opts) /
                           std::pow(std::abs(big.parameter), power) +
                       combined_tolerance(small.distance, opts) /
                           std::pow(std::abs(small.parameter), power);
    if (!(small.quotient > big.quotient + tol)) return false;
  }
  return true;
}

}  // namespace

std::string to_string(ProbeVerdict v) {
  switch (v) {
    case ProbeVerdict::Consistent: return "consistent";
    case ProbeVerdict::Violation: return "violation";
    case ProbeVerdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double combined_tolerance(double d, const SolverOptions& opts) {
  return 2.0 * opts.value_rel_acc * std::abs(d) + opts.feas_tol;
}

ProbeReport second_difference(const Group& G, const GroupElement& base,
                              const VectorXd& h, const std::vector<double>& scales,
                              const SolverOptions& opts) {
  const VectorXd base_state = base.state();
  if (base_state.norm() <= 1e-14) {
    throw std::invalid_argument("second_difference: base must not be the identity");
  }
  if (h.size() != base_state.size()) {
    throw std::invalid_argument("second_difference: direction has wrong dimension");
  }
  ProbeReport rep;
  rep.kind = "second_difference";
  rep.opts = opts;

  const double hn2 = h.squaredNorm();
  for (double s : scales) {
    if ((base_state + s * h).norm() < 0.01 * base_state.norm() ||
        (base_state - s * h).norm() < 0.01 * base_state.norm()) {
      throw std::invalid_argument(
          "second_difference: displaced segment passes too close to the identity");
    }
  }

  const DistanceResult d0 = distance(G, base, opts);
  rep.base_distance = d0.value;
  for (double s : scales) {
    ProbePoint pt;
    pt.parameter = s;
    pt.base_distance = d0.value;
    if (hn2 == 0.0 || s == 0.0) {
      pt.distance = d0.value;
      pt.quotient = 0.0;
      pt.converged = d0.converged;
    } else {
      const DistanceResult dp = distance(G, element(G, base_state + s * h), opts);
      const DistanceResult dm = distance(G, element(G, base_state - s * h), opts);
      pt.distance = 0.5 * (dp.value + dm.value);
      pt.quotient = (dp.value + dm.value - 2.0 * d0.value) / (2.0 * s * s * hn2);
      pt.converged = d0.converged && dp.converged && dm.converged;
    }
    rep.points.push_back(pt);
  }
  rep.verdict = bound_verdict(rep.points, opts, rep.note);
  return rep;
}

ProbeReport vertical_cusp_probe(const StepTwoGroup& G, const VectorXd& w,
                                const VectorXd& sigma,
                                const std::vector<double>& betas,
                                const SolverOptions& opts) {
  // Validates unit norms and the orthogonality precondition.
  cusp_lower_bound(G, w, sigma, 0.0, opts);

  ProbeReport rep;
  rep.kind = "vertical_cusp";
  rep.opts = opts;

  const GroupElement base{w, VectorXd::Zero(G.ell())};
  const DistanceResult d0 = distance(Group(G), base, opts);
  rep.base_distance = d0.value;

  for (double beta : betas) check_parameter_floor(beta, d0.value, opts);

  for (double beta : betas) {
    const GroupElement target{w, beta * sigma};
    const DistanceResult d = distance(Group(G), target, opts);
    ProbePoint pt;
    pt.parameter = beta;
    pt.distance = d.value;
    pt.base_distance = d0.value;
    pt.quotient = (d.value - d0.value) / std::abs(beta);
    pt.lower_bound = cusp_lower_bound(G, w, sigma, beta, opts);
    pt.converged = d.converged && d0.converged;
    rep.points.push_back(pt);
  }
  rep.verdict = bound_verdict(rep.points, opts, rep.note);
  return rep;
}

ProbeReport free_vertical_cusp_probe(const StepTwoGroup& G, const GroupElement& g,
                                     const Bivector& sigma,
                                     const std::vector<double>& betas,
                                     const SolverOptions& opts) {
  const FreeMembership mem = abnormal_membership_free(G, g);
  if (!mem.is_abnormal_endpoint) {
    throw std::invalid_argument(
        "free_vertical_cusp_probe: point is not an abnormal endpoint");
  }
  const int m = G.m();

  // V = orthogonal complement of the minimal subspace of (x, t).
  MatrixXd P = MatrixXd::Identity(m, m);
  for (const auto& wv : mem.W_min_basis) P -= wv * wv.transpose();
  const MatrixXd V = orthonormal_columns(P, 1e-10);

  // sigma must live in Lambda^2 V.
  Bivector sigma_rec(m);
  for (int i = 0; i < V.cols(); ++i) {
    for (int j = i + 1; j < V.cols(); ++j) {
      const Bivector vij = wedge(V.col(i), V.col(j));
      sigma_rec = sigma_rec + vij * dot(vij, sigma);
    }
  }
  if ((sigma.coeffs() - sigma_rec.coeffs()).norm() > 1e-10 * std::max(1.0, sigma.norm())) {
    throw std::invalid_argument(
        "free_vertical_cusp_probe: sigma is not supported in the complement of W");
  }

  ProbeReport rep;
  rep.kind = "free_vertical_cusp";
  rep.opts = opts;

  const DistanceResult d0 = distance(Group(G), g, opts);
  rep.base_distance = d0.value;
  for (double beta : betas) check_parameter_floor(beta, d0.value, opts);

  const BivectorSupport sup = bivector_support(sigma, 1e-10);

  for (double beta : betas) {
    const GroupElement target{g.x, g.t + beta * sigma.coeffs()};
    const DistanceResult d = distance(Group(G), target, opts);
    ProbePoint pt;
    pt.parameter = beta;
    pt.distance = d.value;
    pt.base_distance = d0.value;
    pt.quotient = (d.value - d0.value) / std::abs(beta);
    pt.converged = d.converged && d0.converged;
    if (sup.rank == 1) {
      // Rank-one sigma: the V-factor cost is the exact weighted Dido value.
      pt.lower_bound =
          std::sqrt(d0.value * d0.value + 4.0 * kPi * std::abs(beta) * sigma.norm());
    } else if (V.cols() >= 2) {
      // General sigma: solve the V-factor problem in free(dim V).
      VectorXd tau(Bivector::coeff_count(static_cast<int>(V.cols())));
      int idx = 0;
      for (int i = 0; i < V.cols(); ++i) {
        for (int j = i + 1; j < V.cols(); ++j, ++idx) {
          tau(idx) = dot(wedge(V.col(i), V.col(j)), sigma) * beta;
        }
      }
      const StepTwoGroup FV = free_group(static_cast<int>(V.cols()));
      const DistanceResult dsub =
          distance(Group(FV), GroupElement{VectorXd::Zero(V.cols()), tau}, opts);
      if (dsub.converged) {
        pt.lower_bound = std::sqrt(d0.value * d0.value + dsub.value * dsub.value);
      }
    }
    rep.points.push_back(pt);
  }
  rep.verdict = bound_verdict(rep.points, opts, rep.note);
  if (rep.verdict == ProbeVerdict::Consistent) {
    for (const auto& pt : rep.points) {
      if (!(pt.quotient > 0.0)) {
        rep.verdict = ProbeVerdict::Inconclusive;
        rep.note = "nonpositive cusp quotient";
        break;
      }
    }
  }
  return rep;
}

ProbeReport engel_vertical_probe(double x2, const std::vector<double>& lambdas,
                                 const SolverOptions& opts) {
  if (x2 == 0.0) throw std::invalid_argument("engel_vertical_probe: x2 must be nonzero");
  const ModelSystem engel{ModelKind::Engel};

  ProbeReport rep;
  rep.kind = "engel_vertical";
  rep.opts = opts;
  // d(0,x2,0,0) = |x2| exactly: the straight control attains it and the
  // horizontal projection bounds any curve from below.
  rep.base_distance = std::abs(x2);

  for (double l : lambdas) check_parameter_floor(l, rep.base_distance, opts);

  for (double l : lambdas) {
    VectorXd s(4);
    s << 0.0, x2, 0.0, l;
    const DistanceResult d = distance(Group(engel), engel.element(s), opts);
    ProbePoint pt;
    pt.parameter = l;
    pt.distance = d.value;
    pt.base_distance = rep.base_distance;
    pt.quotient = (d.value - rep.base_distance) / std::abs(l);
    pt.converged = d.converged;
    if (std::abs(std::abs(x2) - 1.0) < 1e-14) {
      pt.lower_bound = 2.0 * std::sqrt(0.25 + std::abs(l));
    }
    rep.points.push_back(pt);
  }
  rep.verdict = bound_verdict(rep.points, opts, rep.note);
  return rep;
}

ProbeReport engel_horizontal_probe(double x2, const std::vector<double>& lambdas,
                                   const SolverOptions& opts) {
  if (x2 == 0.0) {
    throw std::invalid_argument("engel_horizontal_probe: x2 must be nonzero");
  }
  const ModelSystem engel{ModelKind::Engel};

  ProbeReport rep;
  rep.kind = "engel_horizontal";
  rep.opts = opts;
  rep.base_distance = std::abs(x2);  // exact, as in the vertical probe

  for (double l : lambdas) {
    if (l == 0.0) {
      throw std::invalid_argument("engel_horizontal_probe: lambda must be nonzero");
    }
    VectorXd s(4);
    s << l, x2, 0.0, 0.0;
    const DistanceResult d = distance(Group(engel), engel.element(s), opts);
    ProbePoint pt;
    pt.parameter = l;
    pt.distance = d.value;
    pt.base_distance = rep.base_distance;
    pt.quotient = (d.value - rep.base_distance) / (l * l);
    pt.converged = d.converged;
    rep.points.push_back(pt);
  }

  bool all_converged = true;
  for (const auto& pt : rep.points) all_converged = all_converged && pt.converged;
  if (!all_converged) {
    rep.verdict = ProbeVerdict::Inconclusive;
    rep.note = "one or more solves did not converge";
    return rep;
  }

  // Pairs +-lambda must agree (the law is invariant under flipping x1, x3).
  std::map<double, std::vector<double>> by_abs;
  for (const auto& pt : rep.points) by_abs[std::abs(pt.parameter)].push_back(pt.quotient);
  std::vector<ProbePoint> ladder;
  for (const auto& [al, qs] : by_abs) {
    double qmin = qs[0], qmax = qs[0], qsum = 0.0;
    for (double q : qs) {
      qmin = std::min(qmin, q);
      qmax = std::max(qmax, q);
      qsum += q;
    }
    double dmax = 0.0;
    for (const auto& pt : rep.points) {
      if (std::abs(std::abs(pt.parameter) - al) < 1e-15) dmax = std::max(dmax, pt.distance);
    }
    if (qmax - qmin > 2.0 * combined_tolerance(dmax, opts) / (al * al)) {
      rep.verdict = ProbeVerdict::Inconclusive;
      rep.note = "asymmetry between +-lambda exceeds tolerance";
      return rep;
    }
    ProbePoint mean;
    mean.parameter = al;
    mean.quotient = qsum / static_cast<double>(qs.size());
    mean.distance = dmax;
    ladder.push_back(mean);
  }

  if (ladder.size() >= 2 && !strictly_increasing_towards_zero(ladder, opts, 2.0)) {
    rep.verdict = ProbeVerdict::Inconclusive;
    rep.note = "quotients do not grow monotonically as lambda decreases";
    return rep;
  }
  rep.verdict = ProbeVerdict::Consistent;
  return rep;
}

ProbeReport horizontal_semiconcavity_probe(const StepTwoGroup& G,
                                           const GroupElement& g,
                                           const std::vector<VectorXd>& ys,
                                           double delta,
                                           const SolverOptions& opts) {
  const FreeMembership mem = abnormal_membership_free(G, g);
  if (!mem.is_abnormal_endpoint) {
    throw std::invalid_argument(
        "horizontal_semiconcavity_probe: point is not an abnormal endpoint");
  }
  for (const auto& y : ys) {
    if (y.size() != G.m()) {
      throw std::invalid_argument("horizontal_semiconcavity_probe: bad direction size");
    }
    if (y.norm() > delta) {
      throw std::invalid_argument("horizontal_semiconcavity_probe: |y| exceeds delta");
    }
  }

  ProbeReport rep;
  rep.kind = "horizontal_semiconcavity";
  rep.opts = opts;
  const DistanceResult d0 = distance(Group(G), g, opts);
  rep.base_distance = d0.value;

  for (const auto& y : ys) {
    ProbePoint pt;
    pt.parameter = y.norm();
    pt.base_distance = d0.value;
    if (y.norm() == 0.0) {
      pt.distance = d0.value;
      pt.quotient = 0.0;
      pt.converged = d0.converged;
    } else {
      const GroupElement zero_t{VectorXd(y), VectorXd::Zero(G.ell())};
      const GroupElement neg{VectorXd(-y), VectorXd::Zero(G.ell())};
      const DistanceResult dp = distance(Group(G), multiply(G, g, zero_t), opts);
      const DistanceResult dm = distance(Group(G), multiply(G, g, neg), opts);
      pt.distance = 0.5 * (dp.value + dm.value);
      pt.quotient = (dp.value + dm.value - 2.0 * d0.value) / y.squaredNorm();
      pt.converged = d0.converged && dp.converged && dm.converged;
    }
    rep.points.push_back(pt);
  }

  rep.verdict = bound_verdict(rep.points, opts, rep.note);
  if (rep.verdict == ProbeVerdict::Consistent) {
    // When all displacements share one norm, a large spread of the quotient
    // hints at a direction dependence the probe cannot certify.
    std::vector<double> qs;
    double norm0 = -1.0;
    bool same_norm = true, positive = true;
    for (const auto& pt : rep.points) {
      if (pt.parameter == 0.0) continue;
      if (norm0 < 0.0) norm0 = pt.parameter;
      same_norm = same_norm && std::abs(pt.parameter - norm0) < 1e-12;
      positive = positive && pt.quotient > 0.0;
      qs.push_back(pt.quotient);
    }
    if (qs.size() >= 2 && same_norm && positive) {
      const double qmax = *std::max_element(qs.begin(), qs.end());
      const double qmin = *std::min_element(qs.begin(), qs.end());
      if (qmax / qmin >= 1.5) {
        rep.verdict = ProbeVerdict::Inconclusive;
        rep.note = "quotient spread over equal-norm directions exceeds 1.5";
      }
    }
  }
  return rep;
}

ProbeReport martinet_vertical_probe(const std::vector<double>& zs,
                                    const SolverOptions& opts) {
  const ModelSystem mart{ModelKind::Martinet};
  ProbeReport rep;
  rep.kind = "martinet_vertical";
  rep.opts = opts;
  rep.base_distance = 1.0;  // d(1,0,0): straight control, projection-exact

  for (double z : zs) check_parameter_floor(z, rep.base_distance, opts);
  for (double z : zs) {
    VectorXd s(3);
    s << 1.0, 0.0, z;
    const DistanceResult d = distance(Group(mart), mart.element(s), opts);
    ProbePoint pt;
    pt.parameter = z;
    pt.distance = d.value;
    pt.base_distance = 1.0;
    pt.quotient = (d.value - 1.0) / std::abs(z);
    pt.converged = d.converged;
    pt.lower_bound = 2.0 * std::sqrt(0.25 + std::abs(z));
    rep.points.push_back(pt);
  }
  rep.verdict = bound_verdict(rep.points, opts, rep.note);
  return rep;
}

ProbeReport martinet_horizontal_probe(const std::vector<double>& ys,
                                      const SolverOptions& opts) {
  const ModelSystem mart{ModelKind::Martinet};
  ProbeReport rep;
  rep.kind = "martinet_horizontal";
  rep.opts = opts;
  rep.base_distance = 1.0;

  for (double y : ys) {
    if (y == 0.0) {
      throw std::invalid_argument("martinet_horizontal_probe: y must be nonzero");
    }
    VectorXd s(3);
    s << 1.0, y, 0.0;
    const DistanceResult d = distance(Group(mart), mart.element(s), opts);
    ProbePoint pt;
    pt.parameter = y;
    pt.distance = d.value;
    pt.base_distance = 1.0;
    pt.quotient = (d.value - 1.0) / (y * y);
    pt.converged = d.converged;
    rep.points.push_back(pt);
  }

  bool all_converged = true;
  for (const auto& pt : rep.points) all_converged = all_converged && pt.converged;
  if (!all_converged) {
    rep.verdict = ProbeVerdict::Inconclusive;
    rep.note = "one or more solves did not converge";
  } else if (rep.points.size() >= 2 &&
             !strictly_increasing_towards_zero(rep.points, opts, 2.0)) {
    rep.verdict = ProbeVerdict::Inconclusive;
    rep.note = "quotients do not grow monotonically as y decreases";
  } else {
    rep.verdict = ProbeVerdict::Consistent;
  }
  return rep;
}

}  // namespace carnot
