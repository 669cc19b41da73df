#include "carnot/distance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "carnot/rng.hpp"

namespace carnot {

namespace {

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// L-BFGS with Armijo backtracking (two-loop recursion, memory 10).

template <class F>
void lbfgs_minimize(F&& fg, VectorXd& x, double gtol, int max_iters) {
  constexpr int kMemory = 10;
  const int n = static_cast<int>(x.size());
  std::vector<VectorXd> s_hist, y_hist;
  std::vector<double> rho_hist;

  VectorXd g(n), g_new(n), x_new(n), d(n);
  double fx = fg(x, g);

  for (int iter = 0; iter < max_iters; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= gtol) return;

    d = -g;
    const int k = static_cast<int>(s_hist.size());
    std::vector<double> alpha(k);
    for (int i = k - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(d);
      d -= alpha[i] * y_hist[i];
    }
    if (k > 0) {
      d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    }
    for (int i = 0; i < k; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(d);
      d += (alpha[i] - beta) * s_hist[i];
    }

    double dg = g.dot(d);
    if (!(dg < 0.0)) {
      d = -g;
      dg = g.dot(d);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double step = (k == 0) ? 1.0 / std::max(1.0, g.norm()) : 1.0;
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = x + step * d;
      f_new = fg(x_new, g_new);
      if (f_new <= fx + 1e-4 * step * dg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return;  // no progress possible at working precision

    const VectorXd s = x_new - x;
    const VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == kMemory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
    }
    x = x_new;
    g = g_new;
    fx = f_new;
  }
}

// ---------------------------------------------------------------------------
// Augmented Lagrangian on min |u|_{L2}^2 s.t. C * state(E(u)) = b.
// C == nullptr means the identity (plain endpoint targeting).

struct AlOutcome {
  Control u{MatrixXd()};
  double value = std::numeric_limits<double>::infinity();
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
};

VectorXd constraint_of(const Group& G, const Control& u, const MatrixXd* C,
                       const VectorXd& b) {
  const VectorXd s = endpoint(G, u).state();
  return C ? VectorXd(*C * s - b) : VectorXd(s - b);
}

AlOutcome run_augmented_lagrangian(const Group& G, const MatrixXd* C,
                                   const VectorXd& b, const Control& u_init,
                                   const SolverOptions& opts) {
  const int m = control_dim(G);
  const int N = opts.n_steps;
  const double h = 1.0 / N;

  VectorXd u_flat = u_init.flatten();
  VectorXd mu = VectorXd::Zero(b.size());
  double rho = opts.init_penalty;

  auto objective = [&](const VectorXd& uf, VectorXd& grad) {
    const Control u = Control::from_flat(m, uf);
    const VectorXd c = constraint_of(G, u, C, b);
    const VectorXd y = mu + rho * c;
    const VectorXd y_state = C ? VectorXd(C->transpose() * y) : y;
    grad = 2.0 * h * uf + endpoint_vjp(G, u, y_state);
    return h * uf.squaredNorm() + mu.dot(c) + 0.5 * rho * c.squaredNorm();
  };

  double gtol = 1e-2;
  double c_prev = std::numeric_limits<double>::infinity();
  AlOutcome out;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    lbfgs_minimize(objective, u_flat, gtol, opts.max_inner_iters);
    const Control u = Control::from_flat(m, u_flat);
    const double cn = constraint_of(G, u, C, b).norm();

    if (cn <= opts.feas_tol && gtol <= opts.grad_tol) {
      out.converged = true;
      c_prev = cn;
      break;
    }
    if (cn <= std::max(opts.feas_tol, 0.3 * c_prev)) {
      mu += rho * constraint_of(G, u, C, b);
      gtol = (cn <= opts.feas_tol) ? opts.grad_tol : std::max(opts.grad_tol, 0.1 * gtol);
    } else {
      rho *= opts.penalty_growth;
      gtol = std::max(opts.grad_tol, 0.5 * gtol);
    }
    c_prev = std::min(c_prev, cn);
  }

  out.u = Control::from_flat(m, u_flat);
  out.value = out.u.l2_norm();
  out.residual = constraint_of(G, out.u, C, b).norm();
  out.converged = out.residual <= opts.feas_tol;
  return out;
}

// Multistart wrapper. init_const seeds start 0 as a constant control; the
// remaining starts add seeded gaussian noise, alternating between the
// magnitude of the target data and a dilation-consistent loop amplitude.
DistanceResult solve_constrained(const Group& G, const MatrixXd* C,
                                 const VectorXd& b, const VectorXd& init_const,
                                 double noise_a, double noise_b,
                                 const SolverOptions& opts) {
  const int m = control_dim(G);
  const Rng root(opts.rng_seed);

  DistanceResult best;
  best.method = "direct";
  best.n_starts = opts.n_starts;
  double best_bad_residual = std::numeric_limits<double>::infinity();
  Control best_bad{MatrixXd()};
  int best_bad_start = -1;

  for (int start = 0; start < opts.n_starts; ++start) {
    Control u0 = Control::constant(init_const, opts.n_steps);
    if (start > 0) {
      Rng rng = root.derive(start);
      const double scale = (start % 2 == 1) ? noise_a : noise_b;
      for (int i = 0; i < u0.values.size(); ++i) {
        u0.values.data()[i] += scale * rng.gaussian();
      }
    }
    const AlOutcome r = run_augmented_lagrangian(G, C, b, u0, opts);
    if (r.converged) {
      if (!best.converged || r.value < best.value) {
        best.converged = true;
        best.value = r.value;
        best.control = r.u;
        best.residual = r.residual;
        best.best_start = start;
      }
    } else if (r.residual < best_bad_residual) {
      best_bad_residual = r.residual;
      best_bad = r.u;
      best_bad_start = start;
    }
  }

  if (!best.converged) {
    best.value = best_bad.values.size() > 0 ? best_bad.l2_norm()
                                            : std::numeric_limits<double>::infinity();
    best.control = best_bad;
    best.residual = best_bad_residual;
    best.best_start = best_bad_start;
  }
  return best;
}

double loop_amplitude(double x_norm, double t_norm) {
  return x_norm + std::sqrt(4.0 * kPi * t_norm);
}

}  // namespace

DistanceResult solve_direct(const Group& G, const GroupElement& target,
                            const SolverOptions& opts) {
  if (target.x.size() + target.t.size() != state_dim(G)) {
    throw std::invalid_argument("solve_direct: target has wrong dimension");
  }
  const VectorXd b = target.state();
  const double na = std::max(b.norm(), 0.1);
  const double nb = std::max(loop_amplitude(target.x.norm(), target.t.norm()), 0.1);
  return solve_constrained(G, nullptr, b, target.x, na, nb, opts);
}

// ---------------------------------------------------------------------------
// Shooting: Levenberg-Marquardt on the exact extremal endpoint.

namespace {

struct ShootRoot {
  double value = 0.0;
  double tau_norm = 0.0;
  VectorXd tau, u0;
  double residual = 0.0;
};

bool lm_solve(const StepTwoGroup& G, const VectorXd& target_state, VectorXd& theta,
              double tol_root, int max_iters) {
  const int m = G.m();
  const int ell = G.ell();
  const int n = m + ell;

  auto eval = [&](const VectorXd& th) -> VectorXd {
    const NormalExtremal ext = make_extremal(G, th.head(ell), th.tail(m));
    return extremal_endpoint(G, ext).state() - target_state;
  };

  VectorXd F = eval(theta);
  double lambda = 1e-3;
  for (int iter = 0; iter < max_iters; ++iter) {
    if (F.norm() <= tol_root) return true;

    MatrixXd J(n, n);
    for (int i = 0; i < n; ++i) {
      const double step = 1e-6 * (1.0 + std::abs(theta(i)));
      VectorXd tp = theta, tm = theta;
      tp(i) += step;
      tm(i) -= step;
      J.col(i) = (eval(tp) - eval(tm)) / (2.0 * step);
    }
    const MatrixXd JtJ = J.transpose() * J;
    const VectorXd JtF = J.transpose() * F;
    const double diag_scale = std::max(JtJ.diagonal().maxCoeff(), 1e-12);

    bool stepped = false;
    for (int tries = 0; tries < 25; ++tries) {
      const MatrixXd A = JtJ + lambda * diag_scale * MatrixXd::Identity(n, n);
      const VectorXd delta = A.ldlt().solve(-JtF);
      const VectorXd theta_new = theta + delta;
      const VectorXd F_new = eval(theta_new);
      if (F_new.norm() < F.norm()) {
        theta = theta_new;
        F = F_new;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        break;
      }
      lambda *= 2.5;
      if (lambda > 1e14) break;
    }
    if (!stepped) break;
  }
  return F.norm() <= tol_root;
}

}  // namespace

DistanceResult solve_shooting(const StepTwoGroup& G, const GroupElement& target,
                              const SolverOptions& opts) {
  const int m = G.m();
  const int ell = G.ell();
  const VectorXd target_state = target.state();
  const double tol_root = 1e-9 * (1.0 + target_state.norm());
  const double u_scale = std::max(loop_amplitude(target.x.norm(), target.t.norm()), 0.5);

  const Rng root(opts.rng_seed ^ 0xA5A5A5A5ull);
  std::vector<ShootRoot> roots;
  int root_start = -1;

  for (int start = 0; start < opts.n_starts; ++start) {
    VectorXd theta(ell + m);
    if (start == 0) {
      theta.setZero();
      theta.tail(m) = target.x;
    } else {
      Rng rng = root.derive(start);
      const double tau_scale = kPi * std::pow(2.0, start % 3);
      for (int i = 0; i < ell; ++i) theta(i) = tau_scale * rng.gaussian();
      for (int i = 0; i < m; ++i) theta(ell + i) = target.x(i) + 0.7 * u_scale * rng.gaussian();
    }
    if (lm_solve(G, target_state, theta, tol_root, 120)) {
      const NormalExtremal ext = make_extremal(G, theta.head(ell), theta.tail(m));
      const double res = (extremal_endpoint(G, ext).state() - target_state).norm();
      roots.push_back({theta.tail(m).norm(), theta.head(ell).norm(), theta.head(ell),
                       theta.tail(m), res});
      if (root_start < 0) root_start = start;
    }
  }

  DistanceResult out;
  out.method = "shooting";
  out.n_starts = opts.n_starts;
  if (roots.empty()) return out;  // converged == false: no root found

  const ShootRoot* best = &roots[0];
  for (const auto& r : roots) {
    if (r.value < best->value * (1.0 - 1e-12) ||
        (std::abs(r.value - best->value) <= 1e-9 * std::max(1.0, best->value) &&
         r.tau_norm < best->tau_norm)) {
      best = &r;
    }
  }

  const NormalExtremal ext = make_extremal(G, best->tau, best->u0);
  out.value = best->value;
  out.control = sample_control(ext, opts.n_steps);
  out.residual = best->residual;
  out.converged = true;
  out.best_start = root_start;
  out.extremal = std::make_pair(best->tau, best->u0);
  return out;
}

DistanceResult distance(const Group& G, const GroupElement& target,
                        const SolverOptions& opts) {
  if (target.state().norm() <= 1e-14) {
    DistanceResult out;
    out.value = 0.0;
    out.control = Control::zero(control_dim(G), opts.n_steps);
    out.residual = 0.0;
    out.method = "direct";
    out.n_starts = opts.n_starts;
    out.converged = true;
    out.best_start = 0;
    return out;
  }

  DistanceResult best = solve_direct(G, target, opts);
  if (const auto* g2 = std::get_if<StepTwoGroup>(&G)) {
    DistanceResult shoot = solve_shooting(*g2, target, opts);
    if (shoot.converged && (!best.converged || shoot.value < best.value)) {
      return shoot;
    }
  }
  return best;
}

double verify_residual(const Group& G, const GroupElement& target,
                       const DistanceResult& res) {
  if (res.extremal) {
    const auto& g2 = std::get<StepTwoGroup>(G);
    const NormalExtremal ext = make_extremal(g2, res.extremal->first, res.extremal->second);
    return (extremal_endpoint(g2, ext).state() - target.state()).norm();
  }
  return (endpoint(G, res.control).state() - target.state()).norm();
}

double oracle_bruteforce(const Group& G, const GroupElement& target, long budget,
                         int n_steps, uint64_t seed) {
  if (n_steps > 8 || n_steps < 1) {
    throw std::invalid_argument("oracle_bruteforce: need 1 <= n_steps <= 8");
  }
  const int m = control_dim(G);
  const int dim = m * n_steps;
  const VectorXd target_state = target.state();
  constexpr double kPenalty = 1e4;

  auto phi = [&](const VectorXd& uf) {
    const Control u = Control::from_flat(m, uf);
    const double r2 = (endpoint(G, u).state() - target_state).squaredNorm();
    return u.l2_norm_sq() + kPenalty * r2;
  };

  const double base = std::max(loop_amplitude(target.x.norm(), target.t.norm()), 0.5);
  const VectorXd straight = Control::constant(target.x, n_steps).flatten();

  long used = 0;
  Rng rng(seed);

  // Phase 1: random probes around the straight control at several scales.
  const double scales[4] = {0.25, 0.5, 1.0, 2.0};
  std::vector<std::pair<double, VectorXd>> top;
  auto consider = [&](double f, const VectorXd& u) {
    top.emplace_back(f, u);
    std::sort(top.begin(), top.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (top.size() > 10) top.pop_back();
  };
  consider(phi(straight), straight);
  ++used;
  const long n_random = budget / 2;
  while (used < n_random) {
    const double s = scales[used % 4] * base;
    VectorXd u = straight;
    for (int i = 0; i < dim; ++i) u(i) += s * rng.gaussian();
    consider(phi(u), u);
    ++used;
  }

  // Phase 2: pattern search mixing coordinate moves with random directions
  // (coordinate moves alone lock up in the rotational valleys of loop
  // solutions).
  auto refine = [&](VectorXd& u, double f, double delta0, long quota) {
    double delta = delta0;
    long local = 0;
    while (delta > 1e-6 && local < quota) {
      bool improved = false;
      for (int i = 0; i < dim && local < quota; ++i) {
        for (double sgn : {1.0, -1.0}) {
          VectorXd cand = u;
          cand(i) += sgn * delta;
          const double fc = phi(cand);
          ++local;
          if (fc < f) {
            f = fc;
            u = cand;
            improved = true;
            break;
          }
        }
      }
      for (int r = 0; r < 4 && local < quota; ++r) {
        VectorXd cand = u + delta * rng.gaussian_vector(dim);
        const double fc = phi(cand);
        ++local;
        if (fc < f) {
          f = fc;
          u = cand;
          improved = true;
        }
      }
      if (!improved) delta *= 0.5;
    }
    used += local;
    return f;
  };

  double best = top[0].first;
  const long per_candidate = std::max<long>(1, (budget - used) / (2 * static_cast<long>(top.size())));
  VectorXd champion = top[0].second;
  double champion_f = std::numeric_limits<double>::infinity();
  for (auto& [f0, u] : top) {
    const double f = refine(u, f0, 0.25 * base, per_candidate);
    if (f < champion_f) {
      champion_f = f;
      champion = u;
    }
  }
  // Spend the rest polishing the champion, restarting the step size to hop
  // out of shallow pattern locks.
  while (used < budget) {
    champion_f = refine(champion, champion_f, 0.1 * base,
                        std::min<long>(budget - used, budget / 8 + 1));
  }
  best = std::min(best, champion_f);
  return std::sqrt(best);
}

double subgroup_distance_free(const StepTwoGroup& G,
                              const std::vector<VectorXd>& W_basis,
                              const GroupElement& g, const SolverOptions& opts) {
  if (!G.is_free()) {
    throw std::invalid_argument("subgroup_distance_free: group is not free");
  }
  const int d = static_cast<int>(W_basis.size());
  if (d < 1) throw std::invalid_argument("subgroup_distance_free: empty basis");
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double expect = i == j ? 1.0 : 0.0;
      if (std::abs(W_basis[i].dot(W_basis[j]) - expect) > 1e-9) {
        throw std::invalid_argument("subgroup_distance_free: basis not orthonormal");
      }
    }
  }

  // Membership of the horizontal part.
  VectorXd xi(d);
  VectorXd x_proj = VectorXd::Zero(G.m());
  for (int i = 0; i < d; ++i) {
    xi(i) = g.x.dot(W_basis[i]);
    x_proj += xi(i) * W_basis[i];
  }
  if ((g.x - x_proj).norm() > 1e-10 * std::max(1.0, g.x.norm())) {
    throw PointNotInSubgroupError("subgroup_distance_free: x not in W");
  }

  // Membership of the vertical part via the orthonormal frame w_j ^ w_k.
  const Bivector t = vertical_bivector(G, g);
  Bivector t_rec(G.m());
  VectorXd tau(Bivector::coeff_count(d));
  {
    int idx = 0;
    for (int j = 0; j < d; ++j) {
      for (int k = j + 1; k < d; ++k, ++idx) {
        const Bivector wjk = wedge(W_basis[j], W_basis[k]);
        tau(idx) = dot(wjk, t);
        t_rec = t_rec + wjk * tau(idx);
      }
    }
  }
  if ((t.coeffs() - t_rec.coeffs()).norm() > 1e-10 * std::max(1.0, t.norm())) {
    throw PointNotInSubgroupError("subgroup_distance_free: t not in Lambda^2 W");
  }

  if (d == 1) return std::abs(xi(0));  // a line: no vertical directions

  const StepTwoGroup Fd = free_group(d);
  const GroupElement target{xi, tau};
  return distance(Fd, target, opts).value;
}

double cusp_lower_bound(const StepTwoGroup& G, const VectorXd& w,
                        const VectorXd& sigma, double beta,
                        const SolverOptions& opts) {
  const int m = G.m();
  if (w.size() != m || sigma.size() != G.ell()) {
    throw std::invalid_argument("cusp_lower_bound: dimension mismatch");
  }
  if (std::abs(w.norm() - 1.0) > 1e-10 || std::abs(sigma.norm() - 1.0) > 1e-10) {
    throw std::invalid_argument("cusp_lower_bound: w and sigma must be unit");
  }
  const MatrixXd sA = G.sigma_A(sigma).matrix();
  if ((sA * w).norm() > 1e-10 * std::max(1.0, sA.norm())) {
    throw OrthogonalityError("cusp_lower_bound: <A w, y> is not orthogonal to sigma");
  }
  if (beta == 0.0) return 1.0;
  const double b_abs = std::abs(beta);

  // Orthonormal basis of V = w^perp.
  Eigen::HouseholderQR<MatrixXd> qr(w);
  const MatrixXd Q = qr.householderQ();
  const MatrixXd V = Q.rightCols(m - 1);

  double d_V = 0.0;
  const MatrixXd sAbar = V.transpose() * sA * V;
  if (m - 1 == 2) {
    // Weighted Dido problem: <t, sigma> sweeps c * area, so the optimal loop
    // is a circle of cost sqrt(4 pi |beta| / c).
    const double c = std::abs(sAbar(0, 1));
    if (c <= 1e-14) {
      throw OrthogonalityError("cusp_lower_bound: sigma level unreachable from V");
    }
    d_V = std::sqrt(4.0 * kPi * b_abs / c);
  } else {
    std::vector<SkewMatrix> Abar;
    Abar.reserve(G.ell());
    for (int a = 0; a < G.ell(); ++a) {
      Abar.emplace_back(
          MatrixXd(V.transpose() * G.structure_matrix(a).matrix() * V));
    }
    const StepTwoGroup GV =
        StepTwoGroup::unchecked(std::move(Abar), G.name() + "|V");
    // Constrain x_V(1) = 0 and <t(1), sigma> = |beta| only; the rest of the
    // vertical part is free, which keeps the bound valid.
    MatrixXd C = MatrixXd::Zero(m, m - 1 + G.ell());
    C.topLeftCorner(m - 1, m - 1).setIdentity();
    C.bottomRightCorner(1, G.ell()) = sigma.transpose();
    VectorXd b = VectorXd::Zero(m);
    b(m - 1) = b_abs;
    const double amp = std::max(loop_amplitude(0.0, b_abs), 0.1);
    const DistanceResult r = solve_constrained(
        Group(GV), &C, b, VectorXd::Zero(m - 1), std::max(b_abs, 0.1), amp, opts);
    d_V = r.converged ? r.value : 0.0;  // 0 keeps the bound valid (d >= |w|)
  }
  return std::sqrt(1.0 + d_V * d_V);
}

}  // namespace carnot
