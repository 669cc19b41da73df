#include <doctest.h>

#include "carnot/linalg_skew.hpp"
#include "carnot/rng.hpp"
#include "test_util.hpp"

using namespace carnot;
using testutil::basis_matrix;
using testutil::random_skew;

namespace {

MatrixXd expm_series(const MatrixXd& M, int terms = 30) {
  MatrixXd S = MatrixXd::Identity(M.rows(), M.cols());
  MatrixXd T = S;
  for (int k = 1; k <= terms; ++k) {
    T = (T * M) / k;
    S += T;
  }
  return S;
}

}  // namespace

TEST_CASE("skew matrix construction antisymmetrizes exactly") {
  MatrixXd raw(2, 2);
  raw << 0.5, 3.0, -3.0, -0.5;
  const SkewMatrix M(raw);
  CHECK(M(0, 0) == 0.0);
  CHECK(M(0, 1) == -M(1, 0));
  CHECK_THROWS_AS(SkewMatrix(MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("skew_spectral on the 2x2 rotation generator") {
  MatrixXd raw(2, 2);
  raw << 0, -2, 2, 0;
  const auto dec = skew_spectral(SkewMatrix(raw));
  REQUIRE(dec.planes.size() == 1);
  CHECK(dec.kernel_basis.empty());
  CHECK(dec.planes[0].lambda == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("skew_spectral on the zero matrix") {
  const auto dec = skew_spectral(SkewMatrix::zero(3));
  CHECK(dec.planes.empty());
  REQUIRE(dec.kernel_basis.size() == 3);
  CHECK(testutil::span_gap(basis_matrix(dec.kernel_basis), MatrixXd::Identity(3, 3)) <
        1e-12);
}

TEST_CASE("skew_spectral on the cross-product matrix of e3") {
  MatrixXd raw(3, 3);
  raw << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  const auto dec = skew_spectral(SkewMatrix(raw));
  REQUIRE(dec.planes.size() == 1);
  REQUIRE(dec.kernel_basis.size() == 1);
  CHECK(dec.planes[0].lambda == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(dec.kernel_basis[0](2)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(dec.planes[0].v(2)) < 1e-12);
  CHECK(std::abs(dec.planes[0].v_perp(2)) < 1e-12);
}

TEST_CASE("plane relations and reassembly on random skew matrices") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + static_cast<int>(rng.next_u64() % 7);  // dims 2..8
    const SkewMatrix M(random_skew(rng, m));
    const auto dec = skew_spectral(M);
    CHECK(2 * dec.planes.size() + dec.kernel_basis.size() == static_cast<size_t>(m));

    for (const auto& p : dec.planes) {
      CHECK(p.lambda > 0.0);
      CHECK((M.matrix() * p.v - p.lambda * p.v_perp).norm() < 1e-10 * M.norm());
      CHECK((M.matrix() * p.v_perp + p.lambda * p.v).norm() < 1e-10 * M.norm());
    }
    for (const auto& k : dec.kernel_basis) {
      CHECK((M.matrix() * k).norm() < 1e-10 * M.norm());
    }
    CHECK((dec.reassemble() - M.matrix()).norm() < 1e-10 * M.norm());

    // Ascending rates.
    for (size_t i = 1; i < dec.planes.size(); ++i) {
      CHECK(dec.planes[i].lambda >= dec.planes[i - 1].lambda);
    }
  }
}

TEST_CASE("skew_spectral handles exactly repeated frequencies") {
  MatrixXd raw = MatrixXd::Zero(4, 4);
  raw(0, 1) = 3.0;
  raw(1, 0) = -3.0;
  raw(2, 3) = 3.0;
  raw(3, 2) = -3.0;
  const SkewMatrix M(raw);
  const auto dec = skew_spectral(M);
  REQUIRE(dec.planes.size() == 2);
  CHECK((dec.reassemble() - M.matrix()).norm() < 1e-12 * M.norm());
  // Cross-plane orthogonality survives the shared eigenvalue.
  const auto& a = dec.planes[0];
  const auto& b = dec.planes[1];
  CHECK(std::abs(a.v.dot(b.v)) < 1e-12);
  CHECK(std::abs(a.v.dot(b.v_perp)) < 1e-12);
  CHECK(std::abs(a.v_perp.dot(b.v)) < 1e-12);
  CHECK(std::abs(a.v_perp.dot(b.v_perp)) < 1e-12);
}

TEST_CASE("quarter rotation") {
  const double theta = std::numbers::pi / 2;
  MatrixXd raw(2, 2);
  raw << 0, -theta, theta, 0;
  VectorXd x(2);
  x << 1, 0;
  const VectorXd y = skew_exp_apply(SkewMatrix(raw), x);
  CHECK(y(0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(y(1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("exponential of zero is the identity") {
  Rng rng(3);
  const VectorXd x = rng.gaussian_vector(4);
  CHECK((skew_exp_apply(SkewMatrix::zero(4), x) - x).norm() == 0.0);
}

TEST_CASE("exponential matches the truncated power series") {
  Rng rng(11);
  const SkewMatrix M(random_skew(rng, 5));
  const MatrixXd E = expm_series(M.matrix());
  for (int trial = 0; trial < 5; ++trial) {
    const VectorXd x = rng.gaussian_vector(5);
    CHECK((skew_exp_apply(M, x) - E * x).norm() < 1e-10 * x.norm());
  }
}

TEST_CASE("exponential preserves inner products") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + static_cast<int>(rng.next_u64() % 7);
    const SkewMatrix M(random_skew(rng, m, 2.0));
    const auto dec = skew_spectral(M);
    const VectorXd x = rng.gaussian_vector(m);
    const VectorXd y = rng.gaussian_vector(m);
    const VectorXd ex = exp_apply(dec, x);
    const VectorXd ey = exp_apply(dec, y);
    CHECK(std::abs(ex.dot(ey) - x.dot(y)) < 1e-10 * x.norm() * y.norm());
    CHECK(std::abs(ex.norm() - x.norm()) < 1e-12 * x.norm());
  }
}

TEST_CASE("wedge of basis vectors") {
  const VectorXd e1 = VectorXd::Unit(3, 0);
  const VectorXd e2 = VectorXd::Unit(3, 1);
  const Bivector z = wedge(e1, e2);
  CHECK(z.coeff(0, 1) == 1.0);
  CHECK(z.coeff(0, 2) == 0.0);
  CHECK(z.coeff(1, 2) == 0.0);
  CHECK(z.coeff(1, 0) == -1.0);
}

TEST_CASE("wedge is alternating and matches direct expansion") {
  VectorXd x(3), y(3);
  x << 1, 1, 0;
  y << 0, 1, 1;
  CHECK(wedge(x, x).norm() == 0.0);
  const Bivector z = wedge(x, y);
  CHECK(z.coeff(0, 1) == 1.0);
  CHECK(z.coeff(0, 2) == 1.0);
  CHECK(z.coeff(1, 2) == 1.0);
}

TEST_CASE("bivector inner product identity") {
  // Exact on integer inputs: both sides are small-integer sums.
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    VectorXd x(4), y(4), xi(4), eta(4);
    for (int i = 0; i < 4; ++i) {
      x(i) = std::floor(rng.uniform(-4, 4));
      y(i) = std::floor(rng.uniform(-4, 4));
      xi(i) = std::floor(rng.uniform(-4, 4));
      eta(i) = std::floor(rng.uniform(-4, 4));
    }
    const double lhs = dot(wedge(x, y), wedge(xi, eta));
    const double rhs = x.dot(xi) * y.dot(eta) - x.dot(eta) * y.dot(xi);
    CHECK(lhs == rhs);
  }
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + static_cast<int>(rng.next_u64() % 5);
    const VectorXd x = rng.gaussian_vector(m), y = rng.gaussian_vector(m);
    const VectorXd xi = rng.gaussian_vector(m), eta = rng.gaussian_vector(m);
    const double lhs = dot(wedge(x, y), wedge(xi, eta));
    const double rhs = x.dot(xi) * y.dot(eta) - x.dot(eta) * y.dot(xi);
    CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("wedge blocks of an orthogonal split are pairwise orthogonal") {
  // V = span{e1,e2}, W = span{e3,e4} in R^4, rotated by a random orthogonal
  // map to make the test non-axis-aligned.
  Rng rng(19);
  const MatrixXd Q = orthonormal_columns(
      MatrixXd::NullaryExpr(4, 4, [&](int, int) { return rng.gaussian(); }), 1e-12);
  REQUIRE(Q.cols() == 4);
  const VectorXd v1 = Q.col(0), v2 = Q.col(1), w1 = Q.col(2), w2 = Q.col(3);
  CHECK(std::abs(dot(wedge(v1, v2), wedge(w1, w2))) < 1e-12);
  CHECK(std::abs(dot(wedge(v1, v2), wedge(v1, w1))) < 1e-12);
  CHECK(std::abs(dot(wedge(v1, v2), wedge(v2, w2))) < 1e-12);
  CHECK(std::abs(dot(wedge(v1, w1), wedge(w1, w2))) < 1e-12);
}

TEST_CASE("bivector support") {
  const VectorXd e1 = VectorXd::Unit(4, 0), e2 = VectorXd::Unit(4, 1);
  const VectorXd e3 = VectorXd::Unit(4, 2), e4 = VectorXd::Unit(4, 3);

  SUBCASE("elementary") {
    const auto sup = bivector_support(wedge(e1, e2), 1e-10);
    CHECK(sup.rank == 1);
    REQUIRE(sup.basis.size() == 2);
    CHECK(testutil::spans_vector(sup.basis, e1));
    CHECK(testutil::spans_vector(sup.basis, e2));
  }
  SUBCASE("two blocks") {
    const auto sup = bivector_support(wedge(e1, e2) + wedge(e3, e4), 1e-10);
    CHECK(sup.rank == 2);
    CHECK(sup.basis.size() == 4);
  }
  SUBCASE("zero") {
    const auto sup = bivector_support(Bivector(4), 1e-10);
    CHECK(sup.rank == 0);
    CHECK(sup.basis.empty());
  }
}

TEST_CASE("vandermonde span") {
  const VectorXd e1 = VectorXd::Unit(3, 0), e2 = VectorXd::Unit(3, 1);

  SUBCASE("two directions") {
    const auto basis = vandermonde_span({e1, e2}, {1.0, 2.0});
    REQUIRE(basis.size() == 2);
    CHECK(testutil::spans_vector(basis, e1));
    CHECK(testutil::spans_vector(basis, e2));
  }
  SUBCASE("single vector") {
    VectorXd v(3);
    v << 1, 2, -1;
    const auto basis = vandermonde_span({v}, {3.0});
    REQUIRE(basis.size() == 1);
    CHECK(testutil::spans_vector(basis, v));
  }
  SUBCASE("rank matches the direct oracle") {
    Rng rng(23);
    std::vector<VectorXd> vs;
    for (int i = 0; i < 4; ++i) vs.push_back(rng.gaussian_vector(6));
    vs[3] = vs[0] + vs[1];  // force a rank drop
    const auto basis = vandermonde_span(vs, {1.0, 2.0, 3.0, 4.0});
    MatrixXd V(6, 4);
    for (int i = 0; i < 4; ++i) V.col(i) = vs[i];
    CHECK(static_cast<int>(basis.size()) == orthonormal_columns(V, 1e-10).cols());
  }
  SUBCASE("duplicate lambdas are rejected") {
    CHECK_THROWS_AS(vandermonde_span({e1, e2}, {2.0, 2.0 * (1.0 + 1e-12)}),
                    DuplicateFrequencyError);
  }
  SUBCASE("joint permutation invariance") {
    Rng rng(29);
    std::vector<VectorXd> vs;
    for (int i = 0; i < 3; ++i) vs.push_back(rng.gaussian_vector(5));
    const auto b1 = vandermonde_span(vs, {1.0, 2.5, 4.0});
    const auto b2 = vandermonde_span({vs[2], vs[0], vs[1]}, {4.0, 1.0, 2.5});
    CHECK(b1.size() == b2.size());
    CHECK(testutil::span_gap(basis_matrix(b1), basis_matrix(b2)) < 1e-8);
  }
}
