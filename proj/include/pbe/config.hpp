#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "pbe/estimators.hpp"
#include "pbe/fem.hpp"
#include "pbe/mesh.hpp"
#include "pbe/problem.hpp"

namespace pbe {

struct RunConfig {
  ProblemSpec problem;
  DiskInSquare geometry{10.0, {0.0, 0.0}, 2.0};
  double mesh_h = 1.0;
  std::string charges_file;  // empty: charges come from `charge` lines only
  std::optional<double> charge_clearance;  // unset: one initial mesh size

  Pipeline pipeline = Pipeline::TwoTerm;
  double theta = 0.5;
  int max_levels = 6;
  std::optional<double> target_delta;
  double target_rel_tol = 0.05;
  std::optional<int> freeze_level;
  int harmonic_levels = 4;
  double harmonic_rel_tol = 0.05;
  SolverOptions solver;

  std::string output_dir = ".";
  bool emit_csv = true;
  bool emit_vtk = false;
  bool emit_summary = true;

  void validate() const;
};

Pipeline parse_pipeline(const std::string& s);

// `key = value` lines, `#` comments. Relative charge-file paths resolve against base_dir.
RunConfig parse_config(std::istream& in, const std::string& source_name = "<config>", const std::string& base_dir = "");
RunConfig load_config(const std::string& path);
// Writes every key; parse_config of the output reproduces cfg (charges inline).
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace pbe
