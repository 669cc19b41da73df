#pragma once

#include <cstdint>
#include <optional>

#include "carnot/extremals.hpp"

namespace carnot {

struct OrthogonalityError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct PointNotInSubgroupError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SolverOptions {
  int n_steps = 64;
  int n_starts = 32;
  uint64_t rng_seed = 42;
  double feas_tol = 1e-6;
  double grad_tol = 1e-8;
  int max_outer = 20;
  double penalty_growth = 10.0;
  double init_penalty = 10.0;
  int max_inner_iters = 400;
  /// Estimated relative accuracy of reported values; probes build their
  /// combined tolerances from it.
  double value_rel_acc = 1e-3;

  SolverOptions with_steps(int n) const {
    SolverOptions o = *this;
    o.n_steps = n;
    return o;
  }
  SolverOptions with_starts(int n) const {
    SolverOptions o = *this;
    o.n_starts = n;
    return o;
  }
  SolverOptions with_seed(uint64_t s) const {
    SolverOptions o = *this;
    o.rng_seed = s;
    return o;
  }
};

struct DistanceResult {
  double value = std::numeric_limits<double>::infinity();
  Control control;
  double residual = std::numeric_limits<double>::infinity();
  std::string method = "none";
  int n_starts = 0;
  bool converged = false;
  int best_start = -1;
  /// Present when the value comes from a normal-extremal root (tau, u0); the
  /// residual is then the exact extremal endpoint mismatch and the control is
  /// a grid sampling for reporting.
  std::optional<std::pair<VectorXd, VectorXd>> extremal;
};

/// Augmented-Lagrangian minimization of the control energy subject to
/// E(u) = target, multistart, deterministic given the options. The value is
/// always the L2 norm of an admissible control, hence an upper estimate of
/// the distance.
DistanceResult solve_direct(const Group& G, const GroupElement& target,
                            const SolverOptions& opts = {});

/// Normal-extremal shooting (step-two groups): damped least squares on
/// extremal_endpoint(tau, u0) = target over (tau, u0), multistart. Returns
/// the minimum |u0| over the roots found; tie-broken by smallest |tau|.
DistanceResult solve_shooting(const StepTwoGroup& G, const GroupElement& target,
                              const SolverOptions& opts = {});

/// Best of solve_direct and (step two) solve_shooting.
DistanceResult distance(const Group& G, const GroupElement& target,
                        const SolverOptions& opts = {});

/// Independent cross-check: random search plus coordinate refinement over a
/// coarse grid (n_steps <= 8) on the penalized objective
/// |u|^2 + kappa |E(u)-target|^2. Returns the best penalized length found.
double oracle_bruteforce(const Group& G, const GroupElement& target,
                         long budget = 100000, int n_steps = 6,
                         uint64_t seed = 42);

/// Distance inside the subgroup W x Lambda^2 W of a free group, computed in
/// the free group on dim W generators through the coordinate identification
/// xi_j = <x, w_j>, tau_jk = <w_j ^ w_k, t>. Requires g in the subgroup.
double subgroup_distance_free(const StepTwoGroup& G,
                              const std::vector<VectorXd>& W_basis,
                              const GroupElement& g,
                              const SolverOptions& opts = {});

/// Certified lower bound sqrt(1 + d_V(beta)^2) for d(w, beta sigma) at an
/// abnormal point (w, 0): requires (sigma A) w = 0 and unit w, sigma. d_V is
/// the distance to the vertical level {<t, sigma> = |beta|} inside the
/// restriction to V = w^perp; for dim V == 2 it is the closed form
/// sqrt(4 pi |beta| / c) with c the rotation weight of sigma A on V.
double cusp_lower_bound(const StepTwoGroup& G, const VectorXd& w,
                        const VectorXd& sigma, double beta,
                        const SolverOptions& opts = {});

/// Re-evaluates the endpoint of the result through the route that produced
/// it (grid endpoint for direct, exact extremal endpoint for shooting) and
/// returns the distance to the target state.
double verify_residual(const Group& G, const GroupElement& target,
                       const DistanceResult& res);

}  // namespace carnot
