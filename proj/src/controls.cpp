#include "carnot/controls.hpp"

#include <cmath>
#include <numeric>

namespace carnot {

namespace {

void check_control(int expected_dim, const Control& u) {
  if (u.dim() != expected_dim) {
    throw std::invalid_argument("control has wrong number of components");
  }
  if (u.n_steps() < 1) throw std::invalid_argument("control needs n_steps >= 1");
}

// Per-segment update for the Engel cascade, u constant over a step of
// length h starting from state (x1,x2,x3,x4):
//   x1 += h u1, x2 += h u2,
//   x3 += u2 (x1 h + u1 h^2/2),
//   x4 += u2/2 (x1^2 h + x1 u1 h^2 + u1^2 h^3/3).
struct EngelStep {
  static void advance(Eigen::Vector4d& s, double u1, double u2, double h) {
    const double x1 = s(0);
    s(2) += u2 * (x1 * h + 0.5 * u1 * h * h);
    s(3) += 0.5 * u2 * (x1 * x1 * h + x1 * u1 * h * h + u1 * u1 * h * h * h / 3.0);
    s(0) += h * u1;
    s(1) += h * u2;
  }
  // d(next state)/d(state): identity plus the x1 column of rows 3,4.
  static Eigen::Matrix4d state_jac(double x1, double u1, double u2, double h) {
    Eigen::Matrix4d A = Eigen::Matrix4d::Identity();
    A(2, 0) = h * u2;
    A(3, 0) = u2 * (x1 * h + 0.5 * u1 * h * h);
    return A;
  }
  static Eigen::Matrix<double, 4, 2> input_jac(double x1, double u1, double u2,
                                               double h) {
    Eigen::Matrix<double, 4, 2> B = Eigen::Matrix<double, 4, 2>::Zero();
    B(0, 0) = h;
    B(1, 1) = h;
    B(2, 0) = 0.5 * u2 * h * h;
    B(2, 1) = x1 * h + 0.5 * u1 * h * h;
    B(3, 0) = u2 * (0.5 * x1 * h * h + u1 * h * h * h / 3.0);
    B(3, 1) = 0.5 * (x1 * x1 * h + x1 * u1 * h * h + u1 * u1 * h * h * h / 3.0);
    return B;
  }
};

// Martinet system, state (x, y, z), u1 along Y = dy, u2 along
// X = dx + (y^2/2) dz. Same cascade as Engel's fourth coordinate with
// y playing the role of x1.
struct MartinetStep {
  static void advance(Eigen::Vector3d& s, double u1, double u2, double h) {
    const double y = s(1);
    s(2) += 0.5 * u2 * (y * y * h + y * u1 * h * h + u1 * u1 * h * h * h / 3.0);
    s(0) += h * u2;
    s(1) += h * u1;
  }
  static Eigen::Matrix3d state_jac(double y, double u1, double u2, double h) {
    Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
    A(2, 1) = u2 * (y * h + 0.5 * u1 * h * h);
    return A;
  }
  static Eigen::Matrix<double, 3, 2> input_jac(double y, double u1, double u2,
                                               double h) {
    Eigen::Matrix<double, 3, 2> B = Eigen::Matrix<double, 3, 2>::Zero();
    B(1, 0) = h;
    B(0, 1) = h;
    B(2, 0) = u2 * (0.5 * y * h * h + u1 * h * h * h / 3.0);
    B(2, 1) = 0.5 * (y * y * h + y * u1 * h * h + u1 * u1 * h * h * h / 3.0);
    return B;
  }
};

}  // namespace

VectorXd Control::flatten() const {
  return Eigen::Map<const VectorXd>(values.data(), values.size());
}

Control Control::from_flat(int m, const VectorXd& flat) {
  if (flat.size() % m != 0) throw std::invalid_argument("from_flat: size not divisible by m");
  Control u{MatrixXd(m, flat.size() / m)};
  Eigen::Map<VectorXd>(u.values.data(), flat.size()) = flat;
  return u;
}

Control Control::refined() const {
  Control out{MatrixXd(dim(), 2 * n_steps())};
  for (int i = 0; i < n_steps(); ++i) {
    out.values.col(2 * i) = values.col(i);
    out.values.col(2 * i + 1) = values.col(i);
  }
  return out;
}

GroupElement endpoint(const StepTwoGroup& G, const Control& u) {
  check_control(G.m(), u);
  const int N = u.n_steps();
  const double h = 1.0 / N;
  VectorXd x = VectorXd::Zero(G.m());
  VectorXd t = VectorXd::Zero(G.ell());
  for (int i = 0; i < N; ++i) {
    // Exact: the term linear in s integrates to <u, A u> = 0 by skewness.
    t += 0.5 * h * G.bracket_form(x, u.values.col(i));
    x += h * u.values.col(i);
  }
  return {x, t};
}

GroupElement endpoint(const ModelSystem& M, const Control& u) {
  check_control(M.control_dim(), u);
  const int N = u.n_steps();
  const double h = 1.0 / N;
  if (M.kind == ModelKind::Engel) {
    Eigen::Vector4d s = Eigen::Vector4d::Zero();
    for (int i = 0; i < N; ++i) {
      EngelStep::advance(s, u.values(0, i), u.values(1, i), h);
    }
    return {s.head(2), s.tail(2)};
  }
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  for (int i = 0; i < N; ++i) {
    MartinetStep::advance(s, u.values(0, i), u.values(1, i), h);
  }
  return {s.head(2), s.tail(1)};
}

GroupElement endpoint(const Group& G, const Control& u) {
  return std::visit([&](const auto& g) { return endpoint(g, u); }, G);
}

EndpointJacobian d_endpoint(const StepTwoGroup& G, const Control& u) {
  check_control(G.m(), u);
  const int m = G.m();
  const int ell = G.ell();
  const int N = u.n_steps();
  const double h = 1.0 / N;

  const VectorXd x_final = endpoint(G, u).x;

  EndpointJacobian J;
  J.n_steps = N;
  J.control_dim = m;
  J.matrix = MatrixXd::Zero(m + ell, N * m);

  VectorXd X = VectorXd::Zero(m);  // running integral of u
  for (int i = 0; i < N; ++i) {
    const VectorXd x_mid = X + 0.5 * h * u.values.col(i);
    const VectorXd w = h * (0.5 * x_final - x_mid);
    for (int c = 0; c < m; ++c) J.matrix(c, i * m + c) = h;
    for (int a = 0; a < ell; ++a) {
      J.matrix.block(m + a, i * m, 1, m) =
          (G.structure_matrix(a).matrix() * w).transpose();
    }
    X += h * u.values.col(i);
  }
  return J;
}

VectorXd endpoint_vjp(const StepTwoGroup& G, const Control& u, const VectorXd& y) {
  check_control(G.m(), u);
  const int m = G.m();
  const int N = u.n_steps();
  const double h = 1.0 / N;
  if (y.size() != G.state_dim()) throw std::invalid_argument("endpoint_vjp: bad y");

  const VectorXd y_x = y.head(m);
  const MatrixXd K = G.sigma_A(y.tail(G.ell())).matrix();

  const VectorXd x_final = endpoint(G, u).x;
  VectorXd out(N * m);
  VectorXd X = VectorXd::Zero(m);
  for (int i = 0; i < N; ++i) {
    const VectorXd x_mid = X + 0.5 * h * u.values.col(i);
    const VectorXd w = h * (0.5 * x_final - x_mid);
    out.segment(i * m, m) = h * y_x + K * w;
    X += h * u.values.col(i);
  }
  return out;
}

namespace {

template <class Step, int Dim>
EndpointJacobian model_jacobian(const Control& u) {
  const int N = u.n_steps();
  const double h = 1.0 / N;
  using Mat = Eigen::Matrix<double, Dim, Dim>;
  using State = Eigen::Matrix<double, Dim, 1>;

  // Forward pass: states and per-segment partials.
  std::vector<Eigen::Matrix<double, Dim, 2>> B(N);
  std::vector<Mat> A(N);
  State s = State::Zero();
  for (int i = 0; i < N; ++i) {
    const double u1 = u.values(0, i), u2 = u.values(1, i);
    const double slot = Dim == 4 ? s(0) : s(1);
    A[i] = Step::state_jac(slot, u1, u2, h);
    B[i] = Step::input_jac(slot, u1, u2, h);
    Step::advance(s, u1, u2, h);
  }

  // Backward pass: columns for segment i are (A_{N-1}...A_{i+1}) B_i.
  EndpointJacobian J;
  J.n_steps = N;
  J.control_dim = 2;
  J.matrix = MatrixXd::Zero(Dim, 2 * N);
  Mat psi = Mat::Identity();
  for (int i = N - 1; i >= 0; --i) {
    J.matrix.template block<Dim, 2>(0, 2 * i) = psi * B[i];
    psi = psi * A[i];
  }
  return J;
}

template <class Step, int Dim>
VectorXd model_vjp(const Control& u, const VectorXd& y) {
  const int N = u.n_steps();
  const double h = 1.0 / N;
  using State = Eigen::Matrix<double, Dim, 1>;

  std::vector<double> slot_at(N);
  State s = State::Zero();
  for (int i = 0; i < N; ++i) {
    slot_at[i] = Dim == 4 ? s(0) : s(1);
    Step::advance(s, u.values(0, i), u.values(1, i), h);
  }
  VectorXd out(2 * N);
  State a = y;
  for (int i = N - 1; i >= 0; --i) {
    const double u1 = u.values(0, i), u2 = u.values(1, i);
    out.segment(2 * i, 2) = Step::input_jac(slot_at[i], u1, u2, h).transpose() * a;
    a = Step::state_jac(slot_at[i], u1, u2, h).transpose() * a;
  }
  return out;
}

}  // namespace

EndpointJacobian d_endpoint(const ModelSystem& M, const Control& u) {
  check_control(M.control_dim(), u);
  if (M.kind == ModelKind::Engel) return model_jacobian<EngelStep, 4>(u);
  return model_jacobian<MartinetStep, 3>(u);
}

VectorXd endpoint_vjp(const ModelSystem& M, const Control& u, const VectorXd& y) {
  check_control(M.control_dim(), u);
  if (y.size() != M.state_dim()) throw std::invalid_argument("endpoint_vjp: bad y");
  if (M.kind == ModelKind::Engel) return model_vjp<EngelStep, 4>(u, y);
  return model_vjp<MartinetStep, 3>(u, y);
}

EndpointJacobian d_endpoint(const Group& G, const Control& u) {
  return std::visit([&](const auto& g) { return d_endpoint(g, u); }, G);
}

VectorXd endpoint_vjp(const Group& G, const Control& u, const VectorXd& y) {
  return std::visit([&](const auto& g) { return endpoint_vjp(g, u, y); }, G);
}

RankResult endpoint_rank(const Group& G, const Control& u, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("endpoint_rank: tol must be > 0");
  const EndpointJacobian J = d_endpoint(G, u);
  Eigen::BDCSVD<MatrixXd> svd(J.matrix, Eigen::ComputeThinU);
  RankResult out;
  out.singular_values = svd.singularValues();
  const double smax = out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
  if (smax == 0.0) return out;
  for (int i = 0; i < out.singular_values.size(); ++i) {
    if (out.singular_values(i) >= tol * smax) ++out.rank;
  }
  out.image_basis = svd.matrixU().leftCols(out.rank);
  return out;
}

bool is_singular_control(const Group& G, const Control& u, double tol) {
  return endpoint_rank(G, u, tol).rank < state_dim(G);
}

Control concatenate(const Control& u, const Control& v) {
  if (u.dim() != v.dim()) throw std::invalid_argument("concatenate: dimension mismatch");
  // Both halves must land on one uniform grid.
  const int L = std::lcm(u.n_steps(), v.n_steps());
  Control a = u, b = v;
  while (a.n_steps() < L) a = a.refined();
  while (b.n_steps() < L) b = b.refined();
  if (a.n_steps() != L || b.n_steps() != L) {
    throw std::invalid_argument("concatenate: step counts must be 2^k multiples");
  }
  // Time-rescaling onto half intervals doubles the speed.
  Control out{MatrixXd(u.dim(), 2 * L)};
  out.values << 2.0 * a.values, 2.0 * b.values;
  return out;
}

}  // namespace carnot
