#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "carnot/io.hpp"

namespace {

using namespace carnot;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;
constexpr int kExitInconclusive = 3;
constexpr int kExitNotConverged = 4;

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) out.push_back(std::stod(cell));
  }
  return out;
}

VectorXd parse_vector(const std::string& text) {
  const auto list = parse_list(text);
  VectorXd v(static_cast<int>(list.size()));
  for (size_t i = 0; i < list.size(); ++i) v(static_cast<int>(i)) = list[i];
  return v;
}

std::vector<VectorXd> parse_vector_list(const std::string& text) {
  std::vector<VectorXd> out;
  std::stringstream ss(text);
  std::string chunk;
  while (std::getline(ss, chunk, ';')) {
    if (!chunk.empty()) out.push_back(parse_vector(chunk));
  }
  return out;
}

int verdict_exit_code(ProbeVerdict v) {
  switch (v) {
    case ProbeVerdict::Consistent: return kExitOk;
    case ProbeVerdict::Violation: return kExitViolation;
    case ProbeVerdict::Inconclusive: return kExitInconclusive;
  }
  return kExitInconclusive;
}

void print_info(const Group& G) {
  std::printf("group: %s\n", group_name(G).c_str());
  if (const auto* g = std::get_if<StepTwoGroup>(&G)) {
    std::printf("kind: step-two Carnot group\n");
    std::printf("m: %d\nell: %d\nstate dim: %d\n", g->m(), g->ell(), g->state_dim());
    std::printf("Hormander: holds (validated at construction)\n");
    const MetivierReport rep = check_metivier(*g);
    switch (rep.verdict) {
      case MetivierReport::Verdict::Metivier:
        std::printf("Metivier: yes\n");
        std::printf("abnormal minimizers: none\n");
        break;
      case MetivierReport::Verdict::NotMetivier: {
        std::printf("Metivier: no\n");
        std::string sigma_str;
        for (int i = 0; i < rep.witness_sigma->size(); ++i) {
          sigma_str += (i ? "," : "") + format_double((*rep.witness_sigma)(i));
        }
        std::printf("witness sigma: [%s]\n", sigma_str.c_str());
        std::printf("dim ker(sigma A): %d\n",
                    static_cast<int>(rep.witness_kernel.size()));
        std::printf("abnormal minimizers: present (lines along ker(sigma A))\n");
        break;
      }
      case MetivierReport::Verdict::Inconclusive:
        std::printf("Metivier: inconclusive\n");
        break;
    }
    std::printf("min singular value of sigma A over unit covectors: %s\n",
                format_double(rep.min_smallest_singular_value).c_str());
    if (g->is_free()) {
      std::printf(
          "abnormal set: union of W x Lambda^2 W over subspaces with dim W = "
          "%d\n",
          g->m() - 2);
    }
  } else {
    const auto& M = std::get<ModelSystem>(G);
    std::printf("kind: hard-coded model system\n");
    std::printf("state dim: %d\ncontrol dim: 2\n", M.state_dim());
    if (M.kind == ModelKind::Engel) {
      std::printf("abnormal line: {(0, x2, 0, 0)}\n");
    } else {
      std::printf("abnormal set: {y = 0}\n");
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "carnot: numerical sub-Riemannian distances on step-two Carnot groups "
      "and the Engel/Martinet models"};
  app.require_subcommand(1);

  std::string group_spec = "heisenberg";
  std::string out_path;
  SolverOptions opts;

  auto add_solver_flags = [&](CLI::App* cmd) {
    cmd->add_option("--n-steps", opts.n_steps, "control grid steps")
        ->capture_default_str();
    cmd->add_option("--n-starts", opts.n_starts, "multistart count")
        ->capture_default_str();
    cmd->add_option("--seed", opts.rng_seed, "rng seed")->capture_default_str();
    cmd->add_option("--feas-tol", opts.feas_tol, "endpoint feasibility tolerance")
        ->capture_default_str();
  };

  // info ---------------------------------------------------------------
  auto* info = app.add_subcommand("info", "structure report for a group");
  info->add_option("--group", group_spec, "preset name or config path")
      ->capture_default_str();

  // distance -----------------------------------------------------------
  auto* dist = app.add_subcommand("distance", "solve one distance problem");
  std::string target_str;
  dist->add_option("--group", group_spec, "preset name or config path")
      ->capture_default_str();
  dist->add_option("--target", target_str, "state coordinates x1,..,t_ell")
      ->required();
  dist->add_option("--out", out_path, "control CSV path (default control.csv)");
  add_solver_flags(dist);

  // scan ----------------------------------------------------------------
  auto* scan = app.add_subcommand("scan", "distance over a coordinate plane");
  std::string base_str = "";
  int dir1 = 0, dir2 = 1, n1 = 11, n2 = 11;
  std::vector<double> range1{-1.0, 1.0}, range2{-1.0, 1.0};
  scan->add_option("--group", group_spec, "preset name or config path")
      ->capture_default_str();
  scan->add_option("--base", base_str, "base state (defaults to the identity)");
  scan->add_option("--dir1", dir1, "first coordinate index (0-based)")
      ->capture_default_str();
  scan->add_option("--dir2", dir2, "second coordinate index (0-based)")
      ->capture_default_str();
  scan->add_option("--range1", range1, "lo hi for the first coordinate")
      ->expected(2);
  scan->add_option("--range2", range2, "lo hi for the second coordinate")
      ->expected(2);
  scan->add_option("--n1", n1, "grid count along dir1")->capture_default_str();
  scan->add_option("--n2", n2, "grid count along dir2")->capture_default_str();
  scan->add_option("--out", out_path, "output CSV path (default scan.csv)");
  add_solver_flags(scan);

  // probe ----------------------------------------------------------------
  auto* probe = app.add_subcommand("probe", "semiconcavity probes");
  std::string kind;
  std::string w_str, sigma_str, point_str, dir_str, dirs_str;
  std::string params_str;
  double x2 = 1.0, delta = 0.2;
  probe
      ->add_option("--probe", kind,
                   "one of: cusp, free-cusp, engel-vertical, engel-horizontal, "
                   "martinet-vertical, martinet-horizontal, second-difference, "
                   "horizontal")
      ->required();
  probe->add_option("--group", group_spec, "preset name or config path")
      ->capture_default_str();
  probe->add_option("--w", w_str, "unit horizontal vector (cusp)");
  probe->add_option("--sigma", sigma_str,
                    "unit vertical covector (cusp) / bivector coefficients "
                    "(free-cusp)");
  probe->add_option("--point", point_str, "base state (free-cusp, horizontal)");
  probe->add_option("--dir", dir_str, "state direction (second-difference)");
  probe->add_option("--dirs", dirs_str,
                    "semicolon-separated horizontal directions (horizontal)");
  probe->add_option("--params,--betas,--lambdas,--zs,--ys,--scales", params_str,
                    "comma-separated probe parameters");
  probe->add_option("--x2", x2, "abnormal line coordinate (engel probes)")
      ->capture_default_str();
  probe->add_option("--delta", delta, "max |y| (horizontal)")->capture_default_str();
  probe->add_option("--out", out_path, "probe CSV path (default probe.csv)");
  add_solver_flags(probe);

  try {
    app.parse(argc, argv);

    if (info->parsed()) {
      print_info(resolve_group_spec(group_spec));
      return kExitOk;
    }

    if (dist->parsed()) {
      const Group G = resolve_group_spec(group_spec);
      const VectorXd s = parse_vector(target_str);
      if (s.size() != state_dim(G)) {
        std::cerr << "error: target needs " << state_dim(G) << " coordinates\n";
        return kExitUsage;
      }
      const DistanceResult r = distance(G, element(G, s), opts);
      const std::string csv_path = out_path.empty() ? "control.csv" : out_path;
      write_control_csv(csv_path, r.control);
      std::cout << distance_report_json(r, opts.rng_seed, csv_path) << "\n";
      return r.converged ? kExitOk : kExitNotConverged;
    }

    if (scan->parsed()) {
      const Group G = resolve_group_spec(group_spec);
      const int n = state_dim(G);
      VectorXd base = VectorXd::Zero(n);
      if (!base_str.empty()) base = parse_vector(base_str);
      if (base.size() != n || dir1 < 0 || dir1 >= n || dir2 < 0 || dir2 >= n) {
        std::cerr << "error: base/dir do not match the state dimension " << n
                  << "\n";
        return kExitUsage;
      }
      std::string csv = "u,v,distance,converged\n";
      for (int i = 0; i < n1; ++i) {
        const double u = n1 > 1 ? range1[0] + i * (range1[1] - range1[0]) / (n1 - 1)
                                : range1[0];
        for (int j = 0; j < n2; ++j) {
          const double v = n2 > 1
                               ? range2[0] + j * (range2[1] - range2[0]) / (n2 - 1)
                               : range2[0];
          VectorXd s = base;
          s(dir1) += u;
          s(dir2) += v;
          const DistanceResult r = distance(G, element(G, s), opts);
          csv += format_double(u) + "," + format_double(v) + "," +
                 format_double(r.value) + "," + (r.converged ? "1" : "0") + "\n";
        }
      }
      const std::string csv_path = out_path.empty() ? "scan.csv" : out_path;
      std::ofstream ofs(csv_path, std::ios::binary);
      ofs << csv;
      std::cout << "wrote " << csv_path << "\n";
      return kExitOk;
    }

    // probe
    const std::vector<double> params = parse_list(params_str);
    ProbeReport rep;
    if (kind == "cusp") {
      const auto G = std::get<StepTwoGroup>(resolve_group_spec(group_spec));
      const std::vector<double> betas =
          params.empty() ? std::vector<double>{0.01, 0.05, 0.1} : params;
      rep = vertical_cusp_probe(G, parse_vector(w_str), parse_vector(sigma_str),
                                betas, opts);
    } else if (kind == "free-cusp") {
      const auto G = std::get<StepTwoGroup>(resolve_group_spec(group_spec));
      const std::vector<double> betas =
          params.empty() ? std::vector<double>{0.01, 0.05, 0.1} : params;
      rep = free_vertical_cusp_probe(G, element(Group(G), parse_vector(point_str)),
                                     Bivector(G.m(), parse_vector(sigma_str)),
                                     betas, opts);
    } else if (kind == "engel-vertical") {
      rep = engel_vertical_probe(
          x2, params.empty() ? std::vector<double>{0.05, 0.1, 0.2} : params, opts);
    } else if (kind == "engel-horizontal") {
      rep = engel_horizontal_probe(
          x2, params.empty() ? std::vector<double>{0.4, 0.2, 0.1} : params, opts);
    } else if (kind == "martinet-vertical") {
      rep = martinet_vertical_probe(
          params.empty() ? std::vector<double>{0.05, 0.1, 0.2} : params, opts);
    } else if (kind == "martinet-horizontal") {
      rep = martinet_horizontal_probe(
          params.empty() ? std::vector<double>{0.4, 0.2, 0.1} : params, opts);
    } else if (kind == "second-difference") {
      const Group G = resolve_group_spec(group_spec);
      rep = second_difference(G, element(G, parse_vector(point_str)),
                              parse_vector(dir_str),
                              params.empty() ? std::vector<double>{0.1, 0.05} : params,
                              opts);
    } else if (kind == "horizontal") {
      const auto G = std::get<StepTwoGroup>(resolve_group_spec(group_spec));
      rep = horizontal_semiconcavity_probe(G, element(Group(G), parse_vector(point_str)),
                                           parse_vector_list(dirs_str), delta, opts);
    } else {
      std::cerr << "error: unknown probe kind '" << kind << "'\n";
      return kExitUsage;
    }

    const std::string csv_path = out_path.empty() ? "probe.csv" : out_path;
    write_probe_csv(csv_path, rep);
    std::cout << "probe: " << rep.kind << "\nverdict: " << to_string(rep.verdict)
              << "\n";
    if (!rep.note.empty()) std::cout << "note: " << rep.note << "\n";
    std::cout << "wrote " << csv_path << "\n";
    return verdict_exit_code(rep.verdict);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const std::bad_variant_access&) {
    std::cerr << "error: this command needs a step-two group\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
