#pragma once

#include <string>

#include "carnot/probes.hpp"

namespace carnot {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Group configuration, JSON syntax. Either an explicit structure
///   {"name": str, "m": int, "ell": int, "A": [matrix, ...]}
/// with each matrix given as m rows of m entries or as a flat row-major
/// array of m*m entries, or a preset
///   {"preset": "heisenberg"|"h_times_r"|"free"|"h_alpha"|"engel"|"martinet",
///    "m": int (free), "alpha": real (h_alpha)}.
/// Validation errors name the offending field.
Group parse_group_json(const std::string& text);
Group load_group_config(const std::string& path);

/// Accepts a preset name ("free(3)", "h_alpha(2)", ...) or a config path.
Group resolve_group_spec(const std::string& spec);

/// Control CSV, columns: step, u_1..u_m. Deterministic formatting.
std::string control_csv(const Control& u);
void write_control_csv(const std::string& path, const Control& u);
Control read_control_csv(const std::string& path);

/// Solver report as JSON text with a fixed field set.
std::string distance_report_json(const DistanceResult& res, uint64_t seed,
                                 const std::string& control_csv_path);

/// Probe CSV, columns:
/// parameter, distance, base_distance, quotient, lower_bound, converged.
std::string probe_csv(const ProbeReport& rep);
void write_probe_csv(const std::string& path, const ProbeReport& rep);

/// Shortest-exact rendering used by every writer ("%.17g").
std::string format_double(double v);

}  // namespace carnot
