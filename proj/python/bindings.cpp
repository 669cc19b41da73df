#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "carnot/io.hpp"

namespace py = pybind11;
using namespace carnot;

namespace {

// Python-side group handle; the variant stays an implementation detail.
struct PyGroup {
  Group g;
};

const StepTwoGroup& as_step_two(const PyGroup& G) {
  if (const auto* g = std::get_if<StepTwoGroup>(&G.g)) return *g;
  throw std::invalid_argument("this operation needs a step-two group");
}

// Controls cross the boundary as (n_steps, m) arrays, one row per step.
Control to_control(const PyGroup& G, const MatrixXd& rows) {
  if (rows.cols() != control_dim(G.g)) {
    throw std::invalid_argument("control must have shape (n_steps, m)");
  }
  return Control{rows.transpose()};
}

MatrixXd from_control(const Control& u) { return u.values.transpose(); }

std::vector<VectorXd> columns_of(const MatrixXd& B) {
  std::vector<VectorXd> out;
  out.reserve(B.cols());
  for (int i = 0; i < B.cols(); ++i) out.push_back(B.col(i));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Numerical sub-Riemannian distances on step-two Carnot groups and "
            "the Engel/Martinet models";

  py::class_<SolverOptions>(m, "SolverOptions")
      .def(py::init<>())
      .def_readwrite("n_steps", &SolverOptions::n_steps)
      .def_readwrite("n_starts", &SolverOptions::n_starts)
      .def_readwrite("rng_seed", &SolverOptions::rng_seed)
      .def_readwrite("feas_tol", &SolverOptions::feas_tol)
      .def_readwrite("grad_tol", &SolverOptions::grad_tol)
      .def_readwrite("max_outer", &SolverOptions::max_outer)
      .def_readwrite("penalty_growth", &SolverOptions::penalty_growth)
      .def_readwrite("value_rel_acc", &SolverOptions::value_rel_acc);

  py::class_<PyGroup>(m, "Group")
      .def_property_readonly("name", [](const PyGroup& G) { return group_name(G.g); })
      .def_property_readonly("state_dim", [](const PyGroup& G) { return state_dim(G.g); })
      .def_property_readonly("control_dim", [](const PyGroup& G) { return control_dim(G.g); })
      .def_property_readonly("is_step_two",
                             [](const PyGroup& G) { return std::holds_alternative<StepTwoGroup>(G.g); })
      .def_property_readonly("m", [](const PyGroup& G) { return as_step_two(G).m(); })
      .def_property_readonly("ell", [](const PyGroup& G) { return as_step_two(G).ell(); })
      .def_property_readonly("is_free", [](const PyGroup& G) {
        const auto* g = std::get_if<StepTwoGroup>(&G.g);
        return g != nullptr && g->is_free();
      })
      .def("structure_matrix",
           [](const PyGroup& G, int a) { return as_step_two(G).structure_matrix(a).matrix(); })
      .def("identity", [](const PyGroup& G) { return identity(G.g).state(); })
      .def("multiply",
           [](const PyGroup& G, const VectorXd& a, const VectorXd& b) {
             return multiply(G.g, element(G.g, a), element(G.g, b)).state();
           })
      .def("inverse",
           [](const PyGroup& G, const VectorXd& a) {
             return inverse(G.g, element(G.g, a)).state();
           })
      .def("dilate",
           [](const PyGroup& G, const VectorXd& a, double r) {
             return dilate(G.g, element(G.g, a), r).state();
           })
      .def("__repr__", [](const PyGroup& G) { return "<carnot.Group " + group_name(G.g) + ">"; });

  m.def("preset", [](const std::string& name) { return PyGroup{preset(name)}; },
        py::arg("name"));
  m.def("make_step_two",
        [](const std::vector<MatrixXd>& A, const std::string& name) {
          return PyGroup{Group(make_step_two(A, name))};
        },
        py::arg("A"), py::arg("name") = "custom");
  m.def("load_group", [](const std::string& path) { return PyGroup{load_group_config(path)}; },
        py::arg("path"));

  // Endpoint maps -------------------------------------------------------
  m.def("endpoint",
        [](const PyGroup& G, const MatrixXd& u) {
          return endpoint(G.g, to_control(G, u)).state();
        },
        py::arg("group"), py::arg("control"),
        "Endpoint of the piecewise-constant control, rows = steps");
  m.def("d_endpoint",
        [](const PyGroup& G, const MatrixXd& u) {
          return d_endpoint(G.g, to_control(G, u)).matrix;
        },
        py::arg("group"), py::arg("control"));
  m.def("endpoint_rank",
        [](const PyGroup& G, const MatrixXd& u, double tol) {
          const RankResult r = endpoint_rank(G.g, to_control(G, u), tol);
          return py::make_tuple(r.rank, r.image_basis, r.singular_values);
        },
        py::arg("group"), py::arg("control"), py::arg("tol") = 1e-8);
  m.def("is_singular_control",
        [](const PyGroup& G, const MatrixXd& u, double tol) {
          return is_singular_control(G.g, to_control(G, u), tol);
        },
        py::arg("group"), py::arg("control"), py::arg("tol") = 1e-8);

  // Extremals -------------------------------------------------------------
  py::class_<NormalExtremal>(m, "NormalExtremal")
      .def_readonly("tau", &NormalExtremal::tau)
      .def_readonly("u0", &NormalExtremal::u0)
      .def_readonly("z", &NormalExtremal::z)
      .def_property_readonly("p", &NormalExtremal::p)
      .def_property_readonly("lambdas",
                             [](const NormalExtremal& e) {
                               std::vector<double> out;
                               for (const auto& pr : e.pairs) out.push_back(pr.lambda);
                               return out;
                             })
      .def_property_readonly("length", &NormalExtremal::length)
      .def("value_at", &NormalExtremal::value_at, py::arg("s"))
      .def("sample", [](const NormalExtremal& e, int n) { return from_control(sample_control(e, n)); },
           py::arg("n_steps"));

  m.def("make_extremal",
        [](const PyGroup& G, const VectorXd& tau, const VectorXd& u0) {
          return make_extremal(as_step_two(G), tau, u0);
        },
        py::arg("group"), py::arg("tau"), py::arg("u0"));
  m.def("extremal_endpoint",
        [](const PyGroup& G, const NormalExtremal& e) {
          return extremal_endpoint(as_step_two(G), e).state();
        },
        py::arg("group"), py::arg("extremal"));
  m.def("abnormality_test",
        [](const PyGroup& G, const NormalExtremal& e, double tol) -> py::object {
          const auto cert = abnormality_test(as_step_two(G), e, tol);
          if (!cert) return py::none();
          py::dict out;
          out["sigma"] = cert->sigma;
          out["W_basis"] = cert->W_basis;
          return out;
        },
        py::arg("group"), py::arg("extremal"), py::arg("tol") = 1e-10);
  m.def("abnormal_membership_free",
        [](const PyGroup& G, const VectorXd& state, double tol) {
          const auto mem =
              abnormal_membership_free(as_step_two(G), element(G.g, state), tol);
          return py::make_tuple(mem.is_abnormal_endpoint, mem.W_min_basis);
        },
        py::arg("group"), py::arg("state"), py::arg("tol") = 1e-10);
  m.def("image_via_W",
        [](const PyGroup& G, const MatrixXd& W_cols) {
          return image_via_W(as_step_two(G), columns_of(W_cols)).basis;
        },
        py::arg("group"), py::arg("W_basis"),
        "W_basis holds orthonormal columns; returns image basis columns");

  // Distances -------------------------------------------------------------
  py::class_<DistanceResult>(m, "DistanceResult")
      .def_readonly("value", &DistanceResult::value)
      .def_readonly("residual", &DistanceResult::residual)
      .def_readonly("method", &DistanceResult::method)
      .def_readonly("converged", &DistanceResult::converged)
      .def_readonly("n_starts", &DistanceResult::n_starts)
      .def_readonly("best_start", &DistanceResult::best_start)
      .def_property_readonly("control",
                             [](const DistanceResult& r) { return from_control(r.control); })
      .def_property_readonly("extremal",
                             [](const DistanceResult& r) -> py::object {
                               if (!r.extremal) return py::none();
                               return py::make_tuple(r.extremal->first, r.extremal->second);
                             })
      .def("__repr__", [](const DistanceResult& r) {
        return "<DistanceResult value=" + format_double(r.value) + " method=" + r.method +
               (r.converged ? " converged>" : " NOT-converged>");
      });

  m.def("solve_direct",
        [](const PyGroup& G, const VectorXd& target, const SolverOptions& opts) {
          return solve_direct(G.g, element(G.g, target), opts);
        },
        py::arg("group"), py::arg("target"), py::arg("opts") = SolverOptions{});
  m.def("solve_shooting",
        [](const PyGroup& G, const VectorXd& target, const SolverOptions& opts) {
          return solve_shooting(as_step_two(G), element(G.g, target), opts);
        },
        py::arg("group"), py::arg("target"), py::arg("opts") = SolverOptions{});
  m.def("distance",
        [](const PyGroup& G, const VectorXd& target, const SolverOptions& opts) {
          return distance(G.g, element(G.g, target), opts);
        },
        py::arg("group"), py::arg("target"), py::arg("opts") = SolverOptions{});
  m.def("oracle_bruteforce",
        [](const PyGroup& G, const VectorXd& target, long budget, int n_steps,
           uint64_t seed) {
          return oracle_bruteforce(G.g, element(G.g, target), budget, n_steps, seed);
        },
        py::arg("group"), py::arg("target"), py::arg("budget") = 100000,
        py::arg("n_steps") = 6, py::arg("seed") = 42);
  m.def("subgroup_distance_free",
        [](const PyGroup& G, const MatrixXd& W_cols, const VectorXd& state,
           const SolverOptions& opts) {
          return subgroup_distance_free(as_step_two(G), columns_of(W_cols),
                                        element(G.g, state), opts);
        },
        py::arg("group"), py::arg("W_basis"), py::arg("state"),
        py::arg("opts") = SolverOptions{});
  m.def("cusp_lower_bound",
        [](const PyGroup& G, const VectorXd& w, const VectorXd& sigma, double beta,
           const SolverOptions& opts) {
          return cusp_lower_bound(as_step_two(G), w, sigma, beta, opts);
        },
        py::arg("group"), py::arg("w"), py::arg("sigma"), py::arg("beta"),
        py::arg("opts") = SolverOptions{});

  // Structure reports ------------------------------------------------------
  m.def("check_metivier", [](const PyGroup& G) {
    const MetivierReport rep = check_metivier(as_step_two(G));
    py::dict out;
    switch (rep.verdict) {
      case MetivierReport::Verdict::Metivier: out["verdict"] = "metivier"; break;
      case MetivierReport::Verdict::NotMetivier: out["verdict"] = "not_metivier"; break;
      case MetivierReport::Verdict::Inconclusive: out["verdict"] = "inconclusive"; break;
    }
    out["is_metivier"] = rep.is_metivier();
    out["min_smallest_singular_value"] = rep.min_smallest_singular_value;
    if (rep.witness_sigma) {
      out["witness_sigma"] = *rep.witness_sigma;
      out["witness_kernel"] = rep.witness_kernel;
    }
    return out;
  });

  // Linear algebra helpers ---------------------------------------------------
  m.def("wedge",
        [](const VectorXd& x, const VectorXd& y) { return wedge(x, y).coeffs(); },
        "Flattened bivector coefficients in lexicographic (j,k) order");
  m.def("bivector_support",
        [](int dim, const VectorXd& coeffs, double tol) {
          const auto sup = bivector_support(Bivector(dim, coeffs), tol);
          return py::make_tuple(sup.rank, sup.basis);
        },
        py::arg("dim"), py::arg("coeffs"), py::arg("tol") = 1e-10);
  m.def("skew_exp_apply", [](const MatrixXd& M, const VectorXd& x) {
    return skew_exp_apply(SkewMatrix(M), x);
  });

  // Probes --------------------------------------------------------------------
  py::class_<ProbePoint>(m, "ProbePoint")
      .def_readonly("parameter", &ProbePoint::parameter)
      .def_readonly("distance", &ProbePoint::distance)
      .def_readonly("base_distance", &ProbePoint::base_distance)
      .def_readonly("quotient", &ProbePoint::quotient)
      .def_property_readonly("lower_bound",
                             [](const ProbePoint& p) -> py::object {
                               if (!p.lower_bound) return py::none();
                               return py::float_(*p.lower_bound);
                             })
      .def_readonly("converged", &ProbePoint::converged);

  py::class_<ProbeReport>(m, "ProbeReport")
      .def_readonly("kind", &ProbeReport::kind)
      .def_readonly("points", &ProbeReport::points)
      .def_readonly("base_distance", &ProbeReport::base_distance)
      .def_readonly("note", &ProbeReport::note)
      .def_property_readonly("verdict",
                             [](const ProbeReport& r) { return to_string(r.verdict); })
      .def("csv", [](const ProbeReport& r) { return probe_csv(r); });

  m.def("engel_vertical_probe", &engel_vertical_probe, py::arg("x2"),
        py::arg("lambdas"), py::arg("opts") = SolverOptions{});
  m.def("engel_horizontal_probe", &engel_horizontal_probe, py::arg("x2"),
        py::arg("lambdas"), py::arg("opts") = SolverOptions{});
  m.def("martinet_vertical_probe", &martinet_vertical_probe, py::arg("zs"),
        py::arg("opts") = SolverOptions{});
  m.def("martinet_horizontal_probe", &martinet_horizontal_probe, py::arg("ys"),
        py::arg("opts") = SolverOptions{});
  m.def("vertical_cusp_probe",
        [](const PyGroup& G, const VectorXd& w, const VectorXd& sigma,
           const std::vector<double>& betas, const SolverOptions& opts) {
          return vertical_cusp_probe(as_step_two(G), w, sigma, betas, opts);
        },
        py::arg("group"), py::arg("w"), py::arg("sigma"), py::arg("betas"),
        py::arg("opts") = SolverOptions{});
  m.def("free_vertical_cusp_probe",
        [](const PyGroup& G, const VectorXd& state, const VectorXd& sigma_coeffs,
           const std::vector<double>& betas, const SolverOptions& opts) {
          const auto& g2 = as_step_two(G);
          return free_vertical_cusp_probe(g2, element(G.g, state),
                                          Bivector(g2.m(), sigma_coeffs), betas, opts);
        },
        py::arg("group"), py::arg("state"), py::arg("sigma"), py::arg("betas"),
        py::arg("opts") = SolverOptions{});
  m.def("second_difference",
        [](const PyGroup& G, const VectorXd& base, const VectorXd& h,
           const std::vector<double>& scales, const SolverOptions& opts) {
          return second_difference(G.g, element(G.g, base), h, scales, opts);
        },
        py::arg("group"), py::arg("base"), py::arg("direction"), py::arg("scales"),
        py::arg("opts") = SolverOptions{});
  m.def("horizontal_semiconcavity_probe",
        [](const PyGroup& G, const VectorXd& state, const std::vector<VectorXd>& ys,
           double delta, const SolverOptions& opts) {
          return horizontal_semiconcavity_probe(as_step_two(G), element(G.g, state),
                                                ys, delta, opts);
        },
        py::arg("group"), py::arg("state"), py::arg("ys"), py::arg("delta"),
        py::arg("opts") = SolverOptions{});

  m.attr("__version__") = "0.1.0";
}
