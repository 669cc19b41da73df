#include "carnot/groups.hpp"

#include <algorithm>
#include <cmath>

#include "carnot/rng.hpp"

namespace carnot {

namespace {

int hormander_rank(const std::vector<SkewMatrix>& A, int m) {
  const int ell = static_cast<int>(A.size());
  if (ell == 0) return 0;
  MatrixXd B(ell, m * (m - 1) / 2);
  int idx = 0;
  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k, ++idx) {
      for (int a = 0; a < ell; ++a) B(a, idx) = A[a](j, k);
    }
  }
  if (B.norm() == 0.0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(B);
  const double smax = svd.singularValues()(0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > 1e-10 * smax) ++rank;
  }
  return rank;
}

double smallest_singular_value(const MatrixXd& M) {
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

std::vector<VectorXd> kernel_basis_of(const MatrixXd& M, double tol) {
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullV);
  const double smax = svd.singularValues()(0);
  std::vector<VectorXd> out;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) <= tol * std::max(smax, 1e-300)) {
      out.push_back(svd.matrixV().col(i));
    }
  }
  return out;
}

}  // namespace

VectorXd GroupElement::state() const {
  VectorXd s(x.size() + t.size());
  s << x, t;
  return s;
}

StepTwoGroup::StepTwoGroup(const std::vector<MatrixXd>& A, std::string name) {
  if (A.empty()) throw std::invalid_argument("StepTwoGroup: need at least one matrix");
  m_ = static_cast<int>(A[0].rows());
  ell_ = static_cast<int>(A.size());
  name_ = std::move(name);
  for (const auto& raw : A) {
    if (raw.rows() != m_ || raw.cols() != m_) {
      throw std::invalid_argument("StepTwoGroup: matrices must all be m x m");
    }
    const double dev = (raw + raw.transpose()).norm();
    if (dev > 1e-12 * std::max(raw.norm(), 1e-300)) {
      throw NotSkewError("StepTwoGroup: structure matrix is not skew-symmetric");
    }
    A_.emplace_back(raw);
  }
  if (hormander_rank(A_, m_) != ell_) {
    throw HormanderError(
        "StepTwoGroup: Hormander condition fails (brackets do not span R^ell)");
  }
}

StepTwoGroup StepTwoGroup::unchecked(std::vector<SkewMatrix> A, std::string name) {
  StepTwoGroup G;
  G.m_ = A.empty() ? 0 : A[0].dim();
  G.ell_ = static_cast<int>(A.size());
  G.A_ = std::move(A);
  G.name_ = std::move(name);
  return G;
}

SkewMatrix StepTwoGroup::sigma_A(const VectorXd& sigma) const {
  if (sigma.size() != ell_) throw std::invalid_argument("sigma_A: wrong covector size");
  MatrixXd M = MatrixXd::Zero(m_, m_);
  for (int a = 0; a < ell_; ++a) M += sigma(a) * A_[a].matrix();
  return SkewMatrix(M);
}

VectorXd StepTwoGroup::bracket_form(const VectorXd& x, const VectorXd& xi) const {
  VectorXd out(ell_);
  for (int a = 0; a < ell_; ++a) out(a) = x.dot(A_[a].matrix() * xi);
  return out;
}

GroupElement StepTwoGroup::identity() const {
  return {VectorXd::Zero(m_), VectorXd::Zero(ell_)};
}

GroupElement StepTwoGroup::element(const VectorXd& state) const {
  if (state.size() != state_dim()) {
    throw std::invalid_argument("element: state has wrong dimension");
  }
  return {state.head(m_), state.tail(ell_)};
}

StepTwoGroup make_step_two(const std::vector<MatrixXd>& A, std::string name) {
  return StepTwoGroup(A, std::move(name));
}

StepTwoGroup heisenberg() {
  MatrixXd A(2, 2);
  A << 0, 1, -1, 0;
  return StepTwoGroup({A}, "heisenberg");
}

StepTwoGroup free_group(int m) {
  if (m < 2 || m > 8) throw std::invalid_argument("free_group: need 2 <= m <= 8");
  // A^{jk} x = x_k e_j - x_j e_k, ordered lexicographically, so that
  // <x, A xi> is exactly the flattened bivector x ^ xi.
  std::vector<MatrixXd> A;
  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k) {
      MatrixXd M = MatrixXd::Zero(m, m);
      M(j, k) = 1.0;
      M(k, j) = -1.0;
      A.push_back(M);
    }
  }
  StepTwoGroup G(A, "free(" + std::to_string(m) + ")");
  G.is_free_ = true;
  return G;
}

StepTwoGroup h_times_r() {
  MatrixXd A = MatrixXd::Zero(3, 3);
  A(0, 1) = 1.0;
  A(1, 0) = -1.0;
  return StepTwoGroup({A}, "h_times_r");
}

StepTwoGroup h_alpha(double alpha) {
  if (!(alpha > 1.0)) throw std::invalid_argument("h_alpha: need alpha > 1");
  MatrixXd A = MatrixXd::Zero(4, 4);
  A(0, 1) = 1.0;
  A(1, 0) = -1.0;
  A(2, 3) = alpha;
  A(3, 2) = -alpha;
  return StepTwoGroup({A}, "h_alpha(" + std::to_string(alpha) + ")");
}

GroupElement ModelSystem::identity() const {
  return {VectorXd::Zero(2), VectorXd::Zero(state_dim() - 2)};
}

GroupElement ModelSystem::element(const VectorXd& state) const {
  if (state.size() != state_dim()) {
    throw std::invalid_argument("element: state has wrong dimension");
  }
  return {state.head(2), state.tail(state_dim() - 2)};
}

Group preset(const std::string& name) {
  auto parse_arg = [&](const std::string& prefix) -> std::optional<std::string> {
    if (name.rfind(prefix + "(", 0) == 0 && name.back() == ')') {
      return name.substr(prefix.size() + 1, name.size() - prefix.size() - 2);
    }
    return std::nullopt;
  };
  if (name == "heisenberg") return heisenberg();
  if (name == "h_times_r") return h_times_r();
  if (name == "engel") return ModelSystem{ModelKind::Engel};
  if (name == "martinet") return ModelSystem{ModelKind::Martinet};
  if (auto arg = parse_arg("free")) return free_group(std::stoi(*arg));
  if (auto arg = parse_arg("h_alpha")) return h_alpha(std::stod(*arg));
  throw std::invalid_argument("preset: unknown name '" + name + "'");
}

int state_dim(const Group& G) {
  return std::visit([](const auto& g) { return g.state_dim(); }, G);
}

int control_dim(const Group& G) {
  if (const auto* g = std::get_if<StepTwoGroup>(&G)) return g->m();
  return std::get<ModelSystem>(G).control_dim();
}

GroupElement identity(const Group& G) {
  return std::visit([](const auto& g) { return g.identity(); }, G);
}

GroupElement element(const Group& G, const VectorXd& state) {
  return std::visit([&](const auto& g) { return g.element(state); }, G);
}

std::string group_name(const Group& G) {
  if (const auto* g = std::get_if<StepTwoGroup>(&G)) return g->name();
  return std::get<ModelSystem>(G).name();
}

GroupElement multiply(const StepTwoGroup& G, const GroupElement& g,
                      const GroupElement& h) {
  if (g.x.size() != G.m() || h.x.size() != G.m() || g.t.size() != G.ell() ||
      h.t.size() != G.ell()) {
    throw std::invalid_argument("multiply: dimension mismatch");
  }
  return {g.x + h.x, g.t + h.t + 0.5 * G.bracket_form(g.x, h.x)};
}

GroupElement multiply(const ModelSystem& M, const GroupElement& g,
                      const GroupElement& h) {
  if (M.kind != ModelKind::Engel) {
    throw std::logic_error("multiply: the Martinet system carries no group law");
  }
  const double x1 = g.x(0), x2 = g.x(1), x3 = g.t(0), x4 = g.t(1);
  const double y1 = h.x(0), y2 = h.x(1), y3 = h.t(0), y4 = h.t(1);
  GroupElement out{VectorXd(2), VectorXd(2)};
  out.x << x1 + y1, x2 + y2;
  out.t << x3 + y3 + x1 * y2, x4 + y4 + 0.5 * x1 * x1 * y2 + x1 * y3;
  return out;
}

GroupElement multiply(const Group& G, const GroupElement& g, const GroupElement& h) {
  return std::visit([&](const auto& gg) { return multiply(gg, g, h); }, G);
}

GroupElement inverse(const StepTwoGroup& G, const GroupElement& g) {
  (void)G;
  return {-g.x, -g.t};
}

GroupElement inverse(const ModelSystem& M, const GroupElement& g) {
  if (M.kind != ModelKind::Engel) {
    throw std::logic_error("inverse: the Martinet system carries no group law");
  }
  const double x1 = g.x(0), x2 = g.x(1), x3 = g.t(0), x4 = g.t(1);
  GroupElement out{VectorXd(2), VectorXd(2)};
  out.x << -x1, -x2;
  out.t << -x3 + x1 * x2, -x4 + x1 * x3 - 0.5 * x1 * x1 * x2;
  return out;
}

GroupElement inverse(const Group& G, const GroupElement& g) {
  return std::visit([&](const auto& gg) { return inverse(gg, g); }, G);
}

GroupElement dilate(const StepTwoGroup& G, const GroupElement& g, double r) {
  (void)G;
  if (!(r > 0.0)) throw std::invalid_argument("dilate: need r > 0");
  return {r * g.x, r * r * g.t};
}

GroupElement dilate(const ModelSystem& M, const GroupElement& g, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("dilate: need r > 0");
  GroupElement out = g;
  out.x *= r;
  if (M.kind == ModelKind::Engel) {
    out.t(0) = r * r * g.t(0);
    out.t(1) = r * r * r * g.t(1);
  } else {
    out.t(0) = r * r * r * g.t(0);
  }
  return out;
}

GroupElement dilate(const Group& G, const GroupElement& g, double r) {
  return std::visit([&](const auto& gg) { return dilate(gg, g, r); }, G);
}

MetivierReport check_metivier(const StepTwoGroup& G) {
  const int m = G.m();
  const int ell = G.ell();
  MetivierReport rep;

  double scale = 0.0;
  for (int a = 0; a < ell; ++a) {
    Eigen::JacobiSVD<MatrixXd> svd(G.structure_matrix(a).matrix());
    scale = std::max(scale, svd.singularValues()(0));
  }
  if (scale == 0.0) scale = 1.0;

  auto record_witness = [&](const VectorXd& sigma, double s) {
    rep.verdict = MetivierReport::Verdict::NotMetivier;
    rep.witness_sigma = sigma;
    rep.witness_kernel =
        kernel_basis_of(G.sigma_A(sigma).matrix(), std::max(1e-8, 2.0 * s / scale));
    rep.min_smallest_singular_value = s / scale;
  };

  if (ell == 1) {
    // One ray of covectors: a single singular-value test decides.
    const VectorXd sigma = VectorXd::Ones(1);
    const double s = smallest_singular_value(G.sigma_A(sigma).matrix());
    if (s <= 1e-10 * scale) {
      record_witness(sigma, s);
    } else {
      rep.verdict = MetivierReport::Verdict::Metivier;
      rep.min_smallest_singular_value = s / scale;
    }
    return rep;
  }

  if (m % 2 == 1) {
    // Odd-dimensional skew matrices are singular, so every sigma works.
    int best = 0;
    for (int a = 1; a < ell; ++a) {
      if (G.structure_matrix(a).norm() > G.structure_matrix(best).norm()) best = a;
    }
    record_witness(VectorXd::Unit(ell, best), 0.0);
    rep.min_smallest_singular_value = 0.0;
    return rep;
  }

  // General case: deterministic sphere search. Coordinate covectors are
  // natural singularity candidates, so seed with them before the bulk
  // sampling.
  std::vector<VectorXd> candidates;
  for (int a = 0; a < ell; ++a) candidates.push_back(VectorXd::Unit(ell, a));
  Rng rng(0x5EED5EEDull);
  const int n_samples = 10000;
  for (int i = 0; i < n_samples; ++i) candidates.push_back(rng.unit_vector(ell));

  auto eval = [&](const VectorXd& sigma) {
    return smallest_singular_value(G.sigma_A(sigma).matrix());
  };

  std::vector<std::pair<double, int>> scored(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    scored[i] = {eval(candidates[i]), static_cast<int>(i)};
  }
  std::sort(scored.begin(), scored.end());

  double best_val = scored[0].first;
  VectorXd best_sigma = candidates[scored[0].second];

  // Local refinement from the 10 best: pattern search on the sphere.
  const int n_refine = std::min<size_t>(10, scored.size());
  for (int r = 0; r < n_refine; ++r) {
    VectorXd sigma = candidates[scored[r].second];
    double val = scored[r].first;
    double step = 0.1;
    while (step > 1e-9) {
      bool improved = false;
      for (int a = 0; a < ell; ++a) {
        for (double sgn : {1.0, -1.0}) {
          VectorXd cand = (sigma + sgn * step * VectorXd::Unit(ell, a)).normalized();
          const double v = eval(cand);
          if (v < val) {
            val = v;
            sigma = cand;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (val < best_val) {
      best_val = val;
      best_sigma = sigma;
    }
  }

  rep.min_smallest_singular_value = best_val / scale;
  if (best_val < 1e-8 * scale) {
    record_witness(best_sigma, best_val);
  } else if (best_val > 1e-4 * scale) {
    rep.verdict = MetivierReport::Verdict::Metivier;
  } else {
    rep.verdict = MetivierReport::Verdict::Inconclusive;
  }
  return rep;
}

SkewMatrix j_map(const StepTwoGroup& G, const VectorXd& eta) {
  return G.sigma_A(eta);
}

Bivector vertical_bivector(const StepTwoGroup& G, const GroupElement& g) {
  if (!G.is_free()) {
    throw std::invalid_argument("vertical_bivector: group is not free");
  }
  return Bivector(G.m(), g.t);
}

GroupElement free_element(const StepTwoGroup& G, const VectorXd& x,
                          const Bivector& t) {
  if (!G.is_free()) throw std::invalid_argument("free_element: group is not free");
  if (t.dim() != G.m() || x.size() != G.m()) {
    throw std::invalid_argument("free_element: dimension mismatch");
  }
  return {x, t.coeffs()};
}

}  // namespace carnot
