#include <doctest.h>

#include "carnot/extremals.hpp"
#include "carnot/rng.hpp"
#include "test_util.hpp"

using namespace carnot;

namespace {

NormalExtremal random_extremal(Rng& rng, const StepTwoGroup& G, double tau_scale = 3.0) {
  return make_extremal(G, tau_scale * rng.gaussian_vector(G.ell()),
                       rng.gaussian_vector(G.m()));
}

}  // namespace

TEST_CASE("zero covector gives a straight line") {
  const StepTwoGroup H = heisenberg();
  VectorXd w(2);
  w << 0.3, -1.2;
  const NormalExtremal ext = make_extremal(H, VectorXd::Zero(1), w);
  CHECK(ext.p() == 0);
  CHECK((ext.z - w).norm() == 0.0);
  const GroupElement e = extremal_endpoint(H, ext);
  CHECK((e.x - w).norm() < 1e-15);
  CHECK(e.t.norm() < 1e-15);
}

TEST_CASE("heisenberg full loop at tau = 2 pi") {
  const StepTwoGroup H = heisenberg();
  const NormalExtremal ext =
      make_extremal(H, 2.0 * std::numbers::pi * VectorXd::Ones(1), VectorXd::Unit(2, 0));
  REQUIRE(ext.p() == 1);
  CHECK(ext.pairs[0].lambda == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-12));
  CHECK((ext.pairs[0].a - VectorXd::Unit(2, 0)).norm() < 1e-12);
  CHECK(ext.z.norm() < 1e-12);
  // Closed horizontal loop.
  const GroupElement e = extremal_endpoint(H, ext);
  CHECK(e.x.norm() < 1e-12);
  CHECK(std::abs(e.t(0)) > 1e-3);  // sweeps area

  // High-resolution discretized endpoint as the oracle.
  const GroupElement num = endpoint(Group(H), sample_control(ext, 4096));
  CHECK((e.state() - num.state()).norm() < 1e-6);
}

TEST_CASE("equal block frequencies merge into one pair") {
  const StepTwoGroup F4 = free_group(4);
  // tau with equal weight on the (1,2) and (3,4) coordinate planes.
  VectorXd tau = VectorXd::Zero(6);
  tau(Bivector::flat_index(4, 0, 1)) = 1.5;
  tau(Bivector::flat_index(4, 2, 3)) = 1.5;
  Rng rng(3);
  const VectorXd u0 = rng.gaussian_vector(4);
  const NormalExtremal ext = make_extremal(F4, tau, u0);
  CHECK(ext.p() == 1);
  CHECK(ext.pairs[0].lambda == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(std::abs(ext.pairs[0].a.norm() - ext.pairs[0].a_perp.norm()) < 1e-12);
}

TEST_CASE("canonical form reproduces the exponential flow") {
  Rng rng(5);
  for (const char* name : {"heisenberg", "h_times_r", "h_alpha(2)", "free(3)", "free(4)"}) {
    const auto G = std::get<StepTwoGroup>(preset(name));
    for (int trial = 0; trial < 4; ++trial) {
      const VectorXd tau = 3.0 * rng.gaussian_vector(G.ell());
      const VectorXd u0 = rng.gaussian_vector(G.m());
      const NormalExtremal ext = make_extremal(G, tau, u0);

      const auto dec = skew_spectral(SkewMatrix(-G.sigma_A(tau).matrix()));
      for (int i = 0; i <= 100; ++i) {
        const double s = i / 100.0;
        const VectorXd direct = exp_apply(dec, u0, s);
        CHECK((ext.value_at(s) - direct).norm() < 1e-10 * std::max(1.0, u0.norm()));
      }

      // Constant speed along the flow.
      for (double s : {0.17, 0.53, 0.99}) {
        CHECK(std::abs(ext.value_at(s).norm() - u0.norm()) < 1e-12 * std::max(1.0, u0.norm()));
      }

      // Length bookkeeping: |z|^2 + sum |a_k|^2 = |u0|^2.
      double acc = ext.z.squaredNorm();
      for (const auto& pr : ext.pairs) acc += pr.a.squaredNorm();
      CHECK(acc == doctest::Approx(u0.squaredNorm()).epsilon(1e-12));
    }
  }
}

TEST_CASE("closed-form endpoint matches the discretized oracle") {
  Rng rng(7);
  for (const char* name : {"heisenberg", "h_times_r", "free(3)", "free(4)", "h_alpha(2)"}) {
    const auto G = std::get<StepTwoGroup>(preset(name));
    for (int trial = 0; trial < 3; ++trial) {
      const NormalExtremal ext = random_extremal(rng, G);
      const GroupElement exact = extremal_endpoint(G, ext);
      const GroupElement num = endpoint(Group(G), sample_control(ext, 4096));
      CHECK((exact.state() - num.state()).norm() <
            1e-6 * std::max(1.0, exact.state().norm()));
    }
  }
  // Single pair without drift, lambda = pi.
  const StepTwoGroup H = heisenberg();
  const NormalExtremal ext =
      make_extremal(H, std::numbers::pi * VectorXd::Ones(1), VectorXd::Unit(2, 1));
  const GroupElement exact = extremal_endpoint(H, ext);
  // Finer grid here: the oracle's own midpoint error must sit below 1e-8.
  const GroupElement num = endpoint(Group(H), sample_control(ext, 16384));
  CHECK((exact.state() - num.state()).norm() < 1e-8);
}

TEST_CASE("abnormality certificates") {
  SUBCASE("h_times_r: drift along e3") {
    const StepTwoGroup G = h_times_r();
    const NormalExtremal ext = make_extremal(G, VectorXd::Zero(1), VectorXd::Unit(3, 2));
    const auto cert = abnormality_test(G, ext);
    REQUIRE(cert.has_value());
    CHECK(std::abs(std::abs(cert->sigma(0)) - 1.0) < 1e-12);
    REQUIRE(cert->W_basis.size() == 1);
    CHECK(testutil::spans_vector(cert->W_basis, VectorXd::Unit(3, 2)));
  }
  SUBCASE("heisenberg extremals are never abnormal") {
    Rng rng(11);
    const StepTwoGroup H = heisenberg();
    for (int trial = 0; trial < 5; ++trial) {
      const auto cert = abnormality_test(H, random_extremal(rng, H));
      CHECK_FALSE(cert.has_value());
    }
  }
  SUBCASE("free(4): planar extremal with W = span{e1, e2}") {
    const StepTwoGroup F4 = free_group(4);
    VectorXd tau = VectorXd::Zero(6);
    tau(Bivector::flat_index(4, 0, 1)) = 2.0;  // rotation in the (e1,e2) plane
    const NormalExtremal ext = make_extremal(F4, tau, VectorXd::Unit(4, 0));
    const auto cert = abnormality_test(F4, ext);
    REQUIRE(cert.has_value());
    CHECK(cert->W_basis.size() == 2);
    // sigma A annihilates W.
    const MatrixXd sA = F4.sigma_A(cert->sigma).matrix();
    for (const auto& w : cert->W_basis) CHECK((sA * w).norm() < 1e-9);
  }
}

TEST_CASE("abnormal membership in free groups") {
  const StepTwoGroup F3 = free_group(3);
  SUBCASE("horizontal point") {
    const auto mem =
        abnormal_membership_free(F3, {VectorXd::Unit(3, 0), VectorXd::Zero(3)});
    CHECK(mem.is_abnormal_endpoint);
    CHECK(mem.W_min_basis.size() == 1);
  }
  SUBCASE("pure bivector of full planar support") {
    const GroupElement g =
        free_element(F3, VectorXd::Zero(3), wedge(VectorXd::Unit(3, 0), VectorXd::Unit(3, 1)));
    const auto mem = abnormal_membership_free(F3, g);
    CHECK_FALSE(mem.is_abnormal_endpoint);
    CHECK(mem.W_min_basis.size() == 2);
  }
  SUBCASE("free(4): aligned point and plane") {
    const StepTwoGroup F4 = free_group(4);
    const GroupElement g = free_element(
        F4, VectorXd::Unit(4, 0),
        wedge(VectorXd::Unit(4, 0), VectorXd::Unit(4, 1)) * 0.7);
    const auto mem = abnormal_membership_free(F4, g);
    CHECK(mem.is_abnormal_endpoint);
    CHECK(mem.W_min_basis.size() == 2);
  }
  SUBCASE("rejects non-free groups") {
    CHECK_THROWS_AS(
        abnormal_membership_free(h_times_r(), {VectorXd::Zero(3), VectorXd::Zero(1)}),
        std::invalid_argument);
  }
}

TEST_CASE("image of the differential through W") {
  SUBCASE("h_times_r drift misses the vertical") {
    const StepTwoGroup G = h_times_r();
    const auto img = image_via_W(G, {VectorXd::Unit(3, 2)});
    CHECK(img.dim() == 3);
  }
  SUBCASE("heisenberg: any direction fills the space") {
    const auto img = image_via_W(heisenberg(), {VectorXd::Unit(2, 0)});
    CHECK(img.dim() == 3);
  }
}

TEST_CASE("image_via_W dimension equals the sampled-control rank") {
  Rng rng(13);
  for (const char* name : {"free(4)", "h_times_r"}) {
    const auto G = std::get<StepTwoGroup>(preset(name));
    for (int trial = 0; trial < 25; ++trial) {
      NormalExtremal ext = random_extremal(rng, G);
      if (trial % 3 == 0) {
        // Mix in singular ones: confine the control to a small subspace.
        VectorXd tau = VectorXd::Zero(G.ell());
        tau(0) = 2.0 + rng.uniform();
        VectorXd u0 = VectorXd::Zero(G.m());
        u0(0) = 1.0 + rng.uniform();
        u0(1) = rng.gaussian();
        ext = make_extremal(G, tau, u0);
      }
      const auto img = image_via_W(G, extremal_W_basis(ext));
      const RankResult rank =
          endpoint_rank(Group(G), sample_control(ext, 256), 1e-8);
      CHECK(img.dim() == rank.rank);

      // Certificate exists iff the rank is deficient.
      const bool deficient = rank.rank < G.state_dim();
      CHECK(abnormality_test(G, ext).has_value() == deficient);

      // Endpoints of certified abnormal extremals pass the membership test.
      if (deficient && G.is_free()) {
        const auto mem = abnormal_membership_free(G, extremal_endpoint(G, ext));
        CHECK(mem.is_abnormal_endpoint);
      }
    }
  }
}
