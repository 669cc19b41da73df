#include "carnot/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace carnot {

namespace {

using nlohmann::json;

MatrixXd parse_matrix(const json& entry, int m, const std::string& field) {
  MatrixXd M(m, m);
  if (!entry.is_array()) throw ConfigError("config: " + field + " must be an array");
  if (!entry.empty() && entry[0].is_array()) {
    if (static_cast<int>(entry.size()) != m) {
      throw ConfigError("config: " + field + " must have " + std::to_string(m) + " rows");
    }
    for (int r = 0; r < m; ++r) {
      const auto& row = entry[r];
      if (!row.is_array() || static_cast<int>(row.size()) != m) {
        throw ConfigError("config: " + field + "[" + std::to_string(r) + "] must have " +
                          std::to_string(m) + " entries");
      }
      for (int c = 0; c < m; ++c) {
        if (!row[c].is_number()) {
          throw ConfigError("config: " + field + "[" + std::to_string(r) + "][" +
                            std::to_string(c) + "] must be a number");
        }
        M(r, c) = row[c].get<double>();
      }
    }
    return M;
  }
  if (static_cast<int>(entry.size()) != m * m) {
    throw ConfigError("config: " + field + " must have m*m = " + std::to_string(m * m) +
                      " entries (row-major)");
  }
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      const auto& v = entry[r * m + c];
      if (!v.is_number()) {
        throw ConfigError("config: " + field + "[" + std::to_string(r * m + c) +
                          "] must be a number");
      }
      M(r, c) = v.get<double>();
    }
  }
  return M;
}

}  // namespace

Group parse_group_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  if (j.contains("preset")) {
    if (!j["preset"].is_string()) throw ConfigError("config: preset must be a string");
    const std::string p = j["preset"].get<std::string>();
    if (p == "free") {
      if (!j.contains("m") || !j["m"].is_number_integer()) {
        throw ConfigError("config: preset 'free' requires integer field m");
      }
      return free_group(j["m"].get<int>());
    }
    if (p == "h_alpha") {
      if (!j.contains("alpha") || !j["alpha"].is_number()) {
        throw ConfigError("config: preset 'h_alpha' requires numeric field alpha");
      }
      return h_alpha(j["alpha"].get<double>());
    }
    try {
      return preset(p);
    } catch (const std::invalid_argument&) {
      throw ConfigError("config: unknown preset '" + p + "'");
    }
  }

  if (!j.contains("m") || !j["m"].is_number_integer() || j["m"].get<int>() < 1) {
    throw ConfigError("config: field m must be a positive integer");
  }
  const int m = j["m"].get<int>();
  if (!j.contains("ell") || !j["ell"].is_number_integer() || j["ell"].get<int>() < 1) {
    throw ConfigError("config: field ell must be a positive integer");
  }
  const int ell = j["ell"].get<int>();
  if (!j.contains("A") || !j["A"].is_array() ||
      static_cast<int>(j["A"].size()) != ell) {
    throw ConfigError("config: field A must be an array of ell matrices");
  }
  std::vector<MatrixXd> A;
  for (int a = 0; a < ell; ++a) {
    A.push_back(parse_matrix(j["A"][a], m, "A[" + std::to_string(a) + "]"));
  }
  std::string name = "custom";
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw ConfigError("config: name must be a string");
    name = j["name"].get<std::string>();
  }
  try {
    return make_step_two(A, name);
  } catch (const NotSkewError& e) {
    throw ConfigError(std::string("config: field A: ") + e.what());
  } catch (const HormanderError& e) {
    throw ConfigError(std::string("config: field A: ") + e.what());
  }
}

Group load_group_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_group_json(ss.str());
}

Group resolve_group_spec(const std::string& spec) {
  if (std::filesystem::exists(spec)) return load_group_config(spec);
  try {
    return preset(spec);
  } catch (const std::invalid_argument&) {
    throw ConfigError("group spec '" + spec +
                      "' is neither a preset nor an existing config file");
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string control_csv(const Control& u) {
  std::string out = "step";
  for (int c = 0; c < u.dim(); ++c) out += ",u_" + std::to_string(c + 1);
  out += "\n";
  for (int i = 0; i < u.n_steps(); ++i) {
    out += std::to_string(i);
    for (int c = 0; c < u.dim(); ++c) out += "," + format_double(u.values(c, i));
    out += "\n";
  }
  return out;
}

void write_control_csv(const std::string& path, const Control& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << control_csv(u);
}

Control read_control_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("control csv: empty file");
  int m = -1;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (m < 0) m = static_cast<int>(row.size()) - 1;
    if (static_cast<int>(row.size()) != m + 1) {
      throw std::runtime_error("control csv: ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || m < 1) throw std::runtime_error("control csv: no data");
  Control u{MatrixXd(m, static_cast<int>(rows.size()))};
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < m; ++c) u.values(c, static_cast<int>(i)) = rows[i][c + 1];
  }
  return u;
}

std::string distance_report_json(const DistanceResult& res, uint64_t seed,
                                 const std::string& control_csv_path) {
  nlohmann::ordered_json j;
  j["value"] = res.value;
  j["residual"] = res.residual;
  j["method"] = res.method;
  j["n_starts"] = res.n_starts;
  j["seed"] = seed;
  j["control_csv_path"] = control_csv_path;
  j["converged"] = res.converged;
  if (res.extremal) {
    j["extremal"]["tau"] = std::vector<double>(
        res.extremal->first.data(), res.extremal->first.data() + res.extremal->first.size());
    j["extremal"]["u0"] = std::vector<double>(
        res.extremal->second.data(),
        res.extremal->second.data() + res.extremal->second.size());
  }
  return j.dump(2);
}

std::string probe_csv(const ProbeReport& rep) {
  std::string out = "parameter,distance,base_distance,quotient,lower_bound,converged\n";
  for (const auto& pt : rep.points) {
    out += format_double(pt.parameter) + "," + format_double(pt.distance) + "," +
           format_double(pt.base_distance) + "," + format_double(pt.quotient) + ",";
    if (pt.lower_bound) out += format_double(*pt.lower_bound);
    out += ",";
    out += pt.converged ? "1" : "0";
    out += "\n";
  }
  return out;
}

void write_probe_csv(const std::string& path, const ProbeReport& rep) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << probe_csv(rep);
}

}  // namespace carnot
