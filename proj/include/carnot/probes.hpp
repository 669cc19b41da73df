#pragma once

#include "carnot/distance.hpp"

namespace carnot {

enum class ProbeVerdict { Consistent, Violation, Inconclusive };

std::string to_string(ProbeVerdict v);

struct ProbePoint {
  double parameter = 0.0;
  double distance = 0.0;       // solver value at the displaced point
  double base_distance = 0.0;  // reference distance entering the quotient
  double quotient = 0.0;
  std::optional<double> lower_bound;  // certified bound when one exists
  bool converged = false;
};

/// Outcome of one semiconcavity probe. Verdicts: Violation only when a
/// certified lower bound is breached beyond the combined tolerance;
/// Inconclusive covers solver failures and property checks (monotone growth,
/// rotational spread) that cannot be certified either way.
struct ProbeReport {
  std::string kind;
  std::vector<ProbePoint> points;
  ProbeVerdict verdict = ProbeVerdict::Inconclusive;
  SolverOptions opts;
  double base_distance = 0.0;
  std::string note;
};

/// Combined solver tolerance at value d: 2 * value_rel_acc * d + feas_tol.
double combined_tolerance(double d, const SolverOptions& opts);

/// Euclidean second difference of the distance at base along direction h
/// (full state coordinates): quotient
/// (d(base + s h) + d(base - s h) - 2 d(base)) / (2 s^2 |h|^2).
/// Reports distance = mean of the two displaced values per scale.
ProbeReport second_difference(const Group& G, const GroupElement& base,
                              const VectorXd& h, const std::vector<double>& scales,
                              const SolverOptions& opts = {});

/// Vertical cusp at an abnormal point (w, 0) of a step-two group:
/// quotient (d(w, beta sigma) - d(w, 0)) / |beta| against the certified
/// bound sqrt(1 + d_V(beta)^2) from cusp_lower_bound.
ProbeReport vertical_cusp_probe(const StepTwoGroup& G, const VectorXd& w,
                                const VectorXd& sigma,
                                const std::vector<double>& betas,
                                const SolverOptions& opts = {});

/// Free-group cusp at a general abnormal endpoint (x, t): quotient
/// (d(x, t + beta sigma) - d(x, t)) / |beta| for sigma supported in the
/// orthogonal complement V of the minimal subspace of (x, t).
ProbeReport free_vertical_cusp_probe(const StepTwoGroup& G, const GroupElement& g,
                                     const Bivector& sigma,
                                     const std::vector<double>& betas,
                                     const SolverOptions& opts = {});

/// Engel vertical estimate: quotient (d(0,x2,0,lambda) - |x2|) / |lambda|;
/// for |x2| = 1 the certified bound column is (2 sqrt(1/4+|l|) - 1)/|l|.
ProbeReport engel_vertical_probe(double x2, const std::vector<double>& lambdas,
                                 const SolverOptions& opts = {});

/// Engel horizontal estimate: quotient (d(lambda,x2,0,0) - |x2|) / lambda^2,
/// expected to grow as lambda decreases (divergence proxy).
ProbeReport engel_horizontal_probe(double x2, const std::vector<double>& lambdas,
                                   const SolverOptions& opts = {});

/// Horizontal second difference at an abnormal endpoint g of a free group,
/// displaced by the group products g (y, 0) and g (-y, 0).
ProbeReport horizontal_semiconcavity_probe(const StepTwoGroup& G,
                                           const GroupElement& g,
                                           const std::vector<VectorXd>& ys,
                                           double delta,
                                           const SolverOptions& opts = {});

/// Martinet analogues of the Engel probes at base (1, 0, 0).
ProbeReport martinet_vertical_probe(const std::vector<double>& zs,
                                    const SolverOptions& opts = {});
ProbeReport martinet_horizontal_probe(const std::vector<double>& ys,
                                      const SolverOptions& opts = {});

}  // namespace carnot
