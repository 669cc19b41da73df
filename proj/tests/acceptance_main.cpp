// Acceptance suite: one line per criterion, nonzero exit iff any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "carnot/io.hpp"
#include "carnot/probes.hpp"
#include "carnot/rng.hpp"

using namespace carnot;

namespace {

constexpr double kPi = std::numbers::pi;

int g_failures = 0;

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void report(int id, bool pass, const std::string& what, const std::string& detail,
            double seconds) {
  std::printf("C%02d %s  %s  (%s) [%.1f s]\n", id, pass ? "PASS" : "FAIL",
              what.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void criterion(int id, const std::string& what,
               const std::function<std::pair<bool, std::string>()>& body) {
  const double t0 = now_s();
  std::pair<bool, std::string> r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  report(id, r.first, what, r.second, now_s() - t0);
}

GroupElement el(const Group& G, std::initializer_list<double> coords) {
  VectorXd s(static_cast<int>(coords.size()));
  int i = 0;
  for (double c : coords) s(i++) = c;
  return element(G, s);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

int main() {
  const SolverOptions defaults;  // N=64, 32 starts, seed 42

  criterion(1, "heisenberg central distance = sqrt(4 pi)", [&] {
    const double t0 = now_s();
    const Group H = preset("heisenberg");
    const DistanceResult r = distance(H, el(H, {0, 0, 1}), defaults);
    const double elapsed = now_s() - t0;
    const double target = std::sqrt(4.0 * kPi);
    const bool ok = r.converged && r.value >= 0.98 * target &&
                    r.value <= 1.02 * target && elapsed < 30.0;
    return std::make_pair(ok, "value=" + fmt(r.value) + " target=" + fmt(target) +
                                  " time=" + fmt(elapsed) + "s");
  });

  criterion(2, "h_alpha(2) strict central inequality", [&] {
    const Group G = preset("h_alpha(2)");
    const DistanceResult r = distance(G, el(G, {0, 0, 0, 0, 1}), defaults);
    const double target = std::sqrt(2.0 * kPi);
    const bool ok = r.converged && r.value >= 0.98 * target &&
                    r.value <= 1.02 * target &&
                    r.value < 0.95 * std::sqrt(4.0 * kPi);
    return std::make_pair(ok, "value=" + fmt(r.value) + " target=" + fmt(target));
  });

  criterion(3, "straight-line exactness on every preset step-two group", [&] {
    Rng rng(2026);
    double worst = 0.0;
    std::string worst_at;
    for (const char* name :
         {"heisenberg", "h_times_r", "h_alpha(2)", "free(3)", "free(4)"}) {
      const Group G = preset(name);
      const int m = control_dim(G);
      for (int trial = 0; trial < 10; ++trial) {
        const VectorXd w = rng.unit_vector(m);
        const GroupElement target{w, VectorXd::Zero(state_dim(G) - m)};
        const DistanceResult r = distance(G, target, defaults);
        const double err = std::abs(r.value - 1.0);
        if (err > worst) {
          worst = err;
          worst_at = name;
        }
        if (!r.converged) return std::make_pair(false, std::string("non-convergence on ") + name);
      }
    }
    return std::make_pair(worst < 0.01,
                          "max |d-1| = " + fmt(worst) + " at " + worst_at);
  });

  criterion(4, "engel vertical lower bound 2 sqrt(1/4+|l|)", [&] {
    const Group E = preset("engel");
    std::string detail;
    bool ok = true;
    for (double l : {0.05, 0.1, 0.2}) {
      const DistanceResult r = distance(E, el(E, {0, 1, 0, l}), defaults);
      const double bound = 2.0 * std::sqrt(0.25 + l);
      ok = ok && r.converged && r.value >= bound - 1e-3;
      detail += fmt(r.value) + ">=" + fmt(bound) + " ";
    }
    return std::make_pair(ok, detail);
  });

  criterion(5, "vertical cusp on h_times_r", [&] {
    const auto G = std::get<StepTwoGroup>(preset("h_times_r"));
    const auto rep = vertical_cusp_probe(G, VectorXd::Unit(3, 2), VectorXd::Ones(1),
                                         {0.01, 0.05, 0.1}, defaults);
    bool ok = rep.verdict == ProbeVerdict::Consistent;
    std::string detail = "verdict=" + to_string(rep.verdict);
    for (const auto& pt : rep.points) {
      const double closed_form = std::sqrt(1.0 + 4.0 * kPi * std::abs(pt.parameter));
      ok = ok && pt.converged && pt.distance >= closed_form - 1e-3;
      if (std::abs(pt.parameter - 0.01) < 1e-12) {
        ok = ok && pt.quotient >= 0.9 * 2.0 * kPi;
        detail += " q(0.01)=" + fmt(pt.quotient) + " vs " + fmt(0.9 * 2.0 * kPi);
      }
    }
    return std::make_pair(ok, detail);
  });

  criterion(6, "free(4) cusp at (e1, 0) along e3^e4", [&] {
    const auto F4 = std::get<StepTwoGroup>(preset("free(4)"));
    Bivector sigma(4);
    sigma.set_coeff(2, 3, 1.0);
    const GroupElement g{VectorXd::Unit(4, 0), VectorXd::Zero(6)};
    const auto rep =
        free_vertical_cusp_probe(F4, g, sigma, {0.01, 0.05, 0.1}, defaults);
    bool ok = rep.verdict == ProbeVerdict::Consistent;
    std::string detail;
    // Envelope must not decay as beta shrinks (plus solver tolerance).
    std::vector<ProbePoint> pts = rep.points;
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.parameter > b.parameter; });
    for (size_t i = 0; i < pts.size(); ++i) {
      ok = ok && pts[i].quotient > 0.1;
      if (i > 0) {
        const double tol =
            combined_tolerance(pts[i].distance, defaults) / pts[i].parameter +
            combined_tolerance(pts[i - 1].distance, defaults) / pts[i - 1].parameter;
        ok = ok && pts[i].quotient >= pts[i - 1].quotient - tol;
      }
      detail += "q(" + fmt(pts[i].parameter) + ")=" + fmt(pts[i].quotient) + " ";
    }
    return std::make_pair(ok, detail);
  });

  criterion(7, "engel horizontal quotient divergence ladder", [&] {
    const auto rep = engel_horizontal_probe(1.0, {0.4, 0.2, 0.1}, defaults);
    bool ok = rep.verdict == ProbeVerdict::Consistent;
    std::string detail;
    for (size_t i = 0; i < rep.points.size(); ++i) {
      detail += "q(" + fmt(rep.points[i].parameter) + ")=" + fmt(rep.points[i].quotient) + " ";
      if (i > 0) {
        const auto& big = rep.points[i - 1];
        const auto& small = rep.points[i];
        const double tol =
            combined_tolerance(big.distance, defaults) / (big.parameter * big.parameter) +
            combined_tolerance(small.distance, defaults) /
                (small.parameter * small.parameter);
        ok = ok && small.quotient > big.quotient + tol;
      }
    }
    return std::make_pair(ok, detail);
  });

  criterion(8, "engel rank identity at the abnormal control", [&] {
    const Group E = preset("engel");
    VectorXd u0(2);
    u0 << 0, 1;
    const RankResult r = endpoint_rank(E, Control::constant(u0, 64), 1e-8);
    return std::make_pair(r.rank == 3, "rank=" + std::to_string(r.rank));
  });

  criterion(9, "image_via_W dimension matches the sampled-control rank", [&] {
    Rng rng(99);
    int checked = 0;
    for (const char* name : {"free(4)", "h_times_r"}) {
      const auto G = std::get<StepTwoGroup>(preset(name));
      for (int trial = 0; trial < 25; ++trial) {
        NormalExtremal ext =
            make_extremal(G, 3.0 * rng.gaussian_vector(G.ell()), rng.gaussian_vector(G.m()));
        if (trial % 4 == 0) {
          VectorXd tau = VectorXd::Zero(G.ell());
          tau(0) = 2.0 + rng.uniform();
          VectorXd u0 = VectorXd::Zero(G.m());
          u0(0) = 1.0;
          u0(1) = rng.gaussian();
          ext = make_extremal(G, tau, u0);
        }
        const int dim_img = image_via_W(G, extremal_W_basis(ext)).dim();
        const int rank = endpoint_rank(Group(G), sample_control(ext, 256), 1e-8).rank;
        if (dim_img != rank) {
          return std::make_pair(false, std::string(name) + ": dim " +
                                           std::to_string(dim_img) + " != rank " +
                                           std::to_string(rank));
        }
        ++checked;
      }
    }
    return std::make_pair(true, std::to_string(checked) + " extremals, exact match");
  });

  criterion(10, "metivier classification of the presets", [&] {
    bool ok = true;
    std::string detail;
    const double t0 = now_s();
    for (const auto& [name, expect] :
         std::vector<std::pair<std::string, bool>>{
             {"heisenberg", true}, {"h_times_r", false}, {"free(3)", false}}) {
      const double tg = now_s();
      const auto rep = check_metivier(std::get<StepTwoGroup>(preset(name)));
      const double dt = now_s() - tg;
      const bool decided = rep.verdict != MetivierReport::Verdict::Inconclusive;
      ok = ok && decided && rep.is_metivier() == expect && dt < 5.0;
      detail += name + (rep.is_metivier() ? "=yes " : "=no ");
    }
    (void)t0;
    return std::make_pair(ok, detail);
  });

  criterion(11, "subgroup restriction identity in free(3)", [&] {
    Rng rng(4242);
    const auto F3 = std::get<StepTwoGroup>(preset("free(3)"));
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      // Random two-dimensional subspace and a point of its subgroup.
      const VectorXd w1 = rng.unit_vector(3);
      VectorXd w2 = rng.gaussian_vector(3);
      w2 -= w1.dot(w2) * w1;
      w2.normalize();
      VectorXd xi = rng.gaussian_vector(2);
      xi *= 0.8 / std::max(xi.norm(), 1e-12);
      const double tau = 0.3 * rng.uniform(0.5, 1.0);
      const GroupElement g =
          free_element(F3, xi(0) * w1 + xi(1) * w2, wedge(w1, w2) * tau);
      const double d_sub = subgroup_distance_free(F3, {w1, w2}, g, defaults);
      const double d_full = distance(Group(F3), g, defaults).value;
      worst = std::max(worst, std::abs(d_sub - d_full) / d_full);
    }
    return std::make_pair(worst < 0.02, "max relative gap = " + fmt(worst));
  });

  criterion(12, "jacobian and exponential property suites", [&] {
    Rng rng(123);
    const char* names[] = {"heisenberg", "h_times_r", "free(3)", "engel", "martinet"};
    double worst_fd = 0.0;
    for (int c = 0; c < 50; ++c) {
      const Group G = preset(names[c % 5]);
      const int m = control_dim(G);
      const int N = 8 + static_cast<int>(rng.next_u64() % 9);
      Control u{MatrixXd(m, N)}, v{MatrixXd(m, N)};
      for (int i = 0; i < u.values.size(); ++i) {
        u.values.data()[i] = rng.gaussian();
        v.values.data()[i] = rng.gaussian();
      }
      const VectorXd analytic = d_endpoint(G, u).apply(v);
      const double eps = 1e-6;
      Control up = u, um = u;
      up.values += eps * v.values;
      um.values -= eps * v.values;
      const VectorXd fd =
          (endpoint(G, up).state() - endpoint(G, um).state()) / (2.0 * eps);
      worst_fd = std::max(worst_fd,
                          (analytic - fd).norm() / std::max(1.0, analytic.norm()));
    }

    double worst_exp = 0.0;
    for (int c = 0; c < 10; ++c) {
      const int m = 2 + static_cast<int>(rng.next_u64() % 7);
      MatrixXd raw = MatrixXd::Zero(m, m);
      for (int j = 0; j < m; ++j)
        for (int k = j + 1; k < m; ++k) {
          raw(j, k) = rng.gaussian();
          raw(k, j) = -raw(j, k);
        }
      const SkewMatrix M(raw);
      MatrixXd series = MatrixXd::Identity(m, m), term = series;
      for (int k = 1; k <= 30; ++k) {
        term = (term * M.matrix()) / k;
        series += term;
      }
      const VectorXd x = rng.gaussian_vector(m);
      worst_exp = std::max(
          worst_exp, (skew_exp_apply(M, x) - series * x).norm() / x.norm());
    }
    const bool ok = worst_fd < 1e-6 && worst_exp < 1e-10;
    return std::make_pair(ok, "max fd err = " + fmt(worst_fd) +
                                  ", max series err = " + fmt(worst_exp) +
                                  "; module invariants run under ctest");
  });

  std::printf("%d/12 criteria passed\n", 12 - g_failures);
  return g_failures;
}
