#include "pbe/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pbe/error.hpp"

namespace pbe {

void RunConfig::validate() const {
  problem.validate();
  if (!(geometry.side > 0.0) || !(geometry.radius > 0.0)) throw ConfigError("geometry sizes must be positive");
  if (!(mesh_h > 0.0)) throw ConfigError("mesh_h must be positive");
  if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in (0, 1]");
  if (max_levels < 1) throw ConfigError("max_levels must be at least 1");
  if (target_delta && !(*target_delta > 0.0)) throw ConfigError("target_delta must be positive");
  if (!(target_rel_tol > 0.0)) throw ConfigError("target_rel_tol must be positive");
  if (freeze_level && *freeze_level < 0) throw ConfigError("freeze_level must be nonnegative");
  if (harmonic_levels < 1) throw ConfigError("harmonic_levels must be at least 1");
  if (!(harmonic_rel_tol > 0.0)) throw ConfigError("harmonic_rel_tol must be positive");
  if (!(solver.lin_tol > 0.0) || !(solver.newton_tol > 0.0)) throw ConfigError("tolerances must be positive");
  if (solver.max_newton < 1) throw ConfigError("max_newton must be at least 1");
  if (charge_clearance && !(*charge_clearance >= 0.0)) throw ConfigError("charge_clearance must be nonnegative");
}

Pipeline parse_pipeline(const std::string& s) {
  if (s == "2term") return Pipeline::TwoTerm;
  if (s == "3term_split") return Pipeline::ThreeTermSplit;
  if (s == "3term_direct") return Pipeline::ThreeTermDirect;
  throw ConfigError("unknown pipeline '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> numbers(const std::string& v, std::size_t count) {
  std::istringstream in(v);
  std::vector<double> out;
  double x;
  while (in >> x) out.push_back(x);
  if (!in.eof() || out.size() != count)
    throw ConfigError("expected " + std::to_string(count) + " number(s), got '" + v + "'");
  return out;
}

double number(const std::string& v) { return numbers(v, 1)[0]; }

int integer(const std::string& v) {
  const double x = number(v);
  if (x != std::round(x)) throw ConfigError("expected an integer, got '" + v + "'");
  return static_cast<int>(x);
}

bool boolean(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"eps_m", [](RunConfig& c, const std::string& v) { c.problem.eps_m = number(v); }},
      {"eps_s", [](RunConfig& c, const std::string& v) { c.problem.eps_s = number(v); }},
      {"ks2", [](RunConfig& c, const std::string& v) { c.problem.ks2 = number(v); }},
      {"charge_scale", [](RunConfig& c, const std::string& v) { c.problem.charge_scale = number(v); }},
      {"g", [](RunConfig& c, const std::string& v) { c.problem.g = number(v); }},
      {"square_side", [](RunConfig& c, const std::string& v) { c.geometry.side = number(v); }},
      {"disk_radius", [](RunConfig& c, const std::string& v) { c.geometry.radius = number(v); }},
      {"disk_center",
       [](RunConfig& c, const std::string& v) {
         const auto p = numbers(v, 2);
         c.geometry.center = {p[0], p[1]};
       }},
      {"mesh_h", [](RunConfig& c, const std::string& v) { c.mesh_h = number(v); }},
      {"charges_file", [](RunConfig& c, const std::string& v) { c.charges_file = v; }},
      {"charge",
       [](RunConfig& c, const std::string& v) {
         const auto p = numbers(v, 3);
         if (p[2] != std::round(p[2])) throw ConfigError("charge valence must be an integer");
         c.problem.charges.push_back({{p[0], p[1], 0.0}, static_cast<int>(p[2])});
       }},
      {"charge_clearance",
       [](RunConfig& c, const std::string& v) {
         if (v == "auto") c.charge_clearance.reset();
         else c.charge_clearance = number(v);
       }},
      {"pipeline", [](RunConfig& c, const std::string& v) { c.pipeline = parse_pipeline(v); }},
      {"theta", [](RunConfig& c, const std::string& v) { c.theta = number(v); }},
      {"max_levels", [](RunConfig& c, const std::string& v) { c.max_levels = integer(v); }},
      {"target_delta",
       [](RunConfig& c, const std::string& v) {
         if (v == "none") c.target_delta.reset();
         else c.target_delta = number(v);
       }},
      {"target_rel_tol", [](RunConfig& c, const std::string& v) { c.target_rel_tol = number(v); }},
      {"freeze_level",
       [](RunConfig& c, const std::string& v) {
         if (v == "auto") c.freeze_level.reset();
         else c.freeze_level = integer(v);
       }},
      {"harmonic_levels", [](RunConfig& c, const std::string& v) { c.harmonic_levels = integer(v); }},
      {"harmonic_rel_tol", [](RunConfig& c, const std::string& v) { c.harmonic_rel_tol = number(v); }},
      {"lin_tol", [](RunConfig& c, const std::string& v) { c.solver.lin_tol = number(v); }},
      {"newton_tol", [](RunConfig& c, const std::string& v) { c.solver.newton_tol = number(v); }},
      {"max_newton", [](RunConfig& c, const std::string& v) { c.solver.max_newton = integer(v); }},
      {"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
      {"emit_csv", [](RunConfig& c, const std::string& v) { c.emit_csv = boolean(v); }},
      {"emit_vtk", [](RunConfig& c, const std::string& v) { c.emit_vtk = boolean(v); }},
      {"emit_summary", [](RunConfig& c, const std::string& v) { c.emit_summary = boolean(v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source_name, const std::string& base_dir) {
  RunConfig cfg;
  const auto& table = setters();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source_name + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(where + "missing value for '" + key + "'");
    try {
      it->second(cfg, value);
      if (key == "charges_file" && !base_dir.empty()) {
        std::filesystem::path p(value);
        if (p.is_relative()) cfg.charges_file = (std::filesystem::path(base_dir) / p).lexically_normal().string();
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  return parse_config(in, path, std::filesystem::path(path).parent_path().string());
}

void write_config(std::ostream& out, const RunConfig& c) {
  char buf[96];
  auto num = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, v);
    out << buf;
  };
  num("eps_m", c.problem.eps_m);
  num("eps_s", c.problem.eps_s);
  num("ks2", c.problem.ks2);
  num("charge_scale", c.problem.charge_scale);
  num("g", c.problem.g);
  num("square_side", c.geometry.side);
  num("disk_radius", c.geometry.radius);
  std::snprintf(buf, sizeof buf, "disk_center = %.17g %.17g\n", c.geometry.center.x, c.geometry.center.y);
  out << buf;
  num("mesh_h", c.mesh_h);
  if (!c.charges_file.empty()) out << "charges_file = " << c.charges_file << "\n";
  for (const Charge& q : c.problem.charges) {
    std::snprintf(buf, sizeof buf, "charge = %.17g %.17g %d\n", q.position.x, q.position.y, q.valence);
    out << buf;
  }
  if (c.charge_clearance) num("charge_clearance", *c.charge_clearance);
  else out << "charge_clearance = auto\n";
  out << "pipeline = " << to_string(c.pipeline) << "\n";
  num("theta", c.theta);
  out << "max_levels = " << c.max_levels << "\n";
  if (c.target_delta) num("target_delta", *c.target_delta);
  else out << "target_delta = none\n";
  num("target_rel_tol", c.target_rel_tol);
  if (c.freeze_level) out << "freeze_level = " << *c.freeze_level << "\n";
  else out << "freeze_level = auto\n";
  out << "harmonic_levels = " << c.harmonic_levels << "\n";
  num("harmonic_rel_tol", c.harmonic_rel_tol);
  num("lin_tol", c.solver.lin_tol);
  num("newton_tol", c.solver.newton_tol);
  out << "max_newton = " << c.solver.max_newton << "\n";
  out << "output_dir = " << c.output_dir << "\n";
  out << "emit_csv = " << (c.emit_csv ? "true" : "false") << "\n";
  out << "emit_vtk = " << (c.emit_vtk ? "true" : "false") << "\n";
  out << "emit_summary = " << (c.emit_summary ? "true" : "false") << "\n";
}

}  // namespace pbe
