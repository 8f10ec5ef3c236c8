#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pbe/config.hpp"
#include "pbe/estimators.hpp"
#include "pbe/fem.hpp"
#include "pbe/output.hpp"
#include "pbe/rt0.hpp"

namespace pbe {

// Charges from the config plus the charge file, geometry checked.
ProblemSpec resolve_problem(const RunConfig& cfg);
MeshPtr initial_mesh(const RunConfig& cfg);

struct HarmonicStage {
  std::vector<LevelRecord> records;
  MeshPtr mesh;                         // full mesh after the harmonic refinements
  std::optional<FluxFieldRT0> flux;     // T on the full mesh, molecule support
  std::optional<ScalarFieldP1> field;   // u^H on the final molecule sub-mesh
  double majorant = 0.0;
};

struct LinearStage {
  std::vector<LevelRecord> records;
  int freeze_level = 0;
  MeshPtr mesh;                         // mesh of the frozen level
  std::optional<ScalarFieldP1> frozen;  // u^L at the freeze level
  std::optional<FluxFieldRT0> flux_h;   // T carried to the frozen mesh (three-term only)
  std::vector<double> indicators;       // of the frozen level
  double majorant = 0.0;                // M_L at the freeze level
  // per level, each on its own mesh
  std::vector<ScalarFieldP1> iterates;
  std::vector<FluxFieldRT0> fluxes;
  std::vector<FluxFieldRT0> harmonic_fluxes;  // three-term only
};

struct NonlinearStage {
  std::vector<LevelRecord> records;
  MeshPtr mesh;
  std::optional<ScalarFieldP1> field;     // last iterate
  std::optional<ScalarFieldP1> linear;    // u^L carried to the last mesh
  std::optional<FluxFieldRT0> flux;       // last reconstruction
  std::vector<double> indicators;
  double majorant = 0.0;                  // plain M of the last level
  long saturated = 0;
  // per level, each on its own mesh
  std::vector<ScalarFieldP1> iterates;
  std::vector<FluxFieldRT0> fluxes;
  std::vector<ScalarFieldP1> linear_parts;    // frozen u^L carried along (split stages)
  std::vector<FluxFieldRT0> harmonic_fluxes;  // direct stage
};

HarmonicStage run_harmonic_stage(const RunConfig& cfg, const ProblemSpec& spec, MeshPtr mesh);
LinearStage run_linear_stage(const RunConfig& cfg, const ProblemSpec& spec, MeshPtr mesh,
                             const FluxFieldRT0* flux_h);
// Stops early once the overall bound with `fixed_part` added falls below target_delta.
NonlinearStage run_nonlinear_stage(const RunConfig& cfg, const ProblemSpec& spec, const LinearStage& linear,
                                   double fixed_part);
NonlinearStage run_direct_stage(const RunConfig& cfg, const ProblemSpec& spec, MeshPtr mesh,
                                const FluxFieldRT0& flux_h, double fixed_part);

struct RunSummary {
  Pipeline pipeline = Pipeline::TwoTerm;
  std::vector<LevelRecord> harmonic, linear, nonlinear, direct;
  int freeze_level = -1;
  OverallComponents components;
  OverallBound overall;
  double solution_energy_norm = 0.0;
  long saturated = 0;
  bool certified = true;
  int levels = 0;
  double wall_time = 0.0;

  MeshPtr final_mesh;
  VtkFields fields;
};

RunSummary run_adaptive(const RunConfig& cfg);

// Writes the enabled outputs of a finished run into cfg.output_dir.
void emit_run(const RunConfig& cfg, const RunSummary& run);

}  // namespace pbe
