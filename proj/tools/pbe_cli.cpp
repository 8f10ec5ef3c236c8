#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pbe/config.hpp"
#include "pbe/driver.hpp"
#include "pbe/error.hpp"
#include "pbe/output.hpp"

namespace {

using namespace pbe;

struct Common {
  std::string config;
  std::string in;
  std::string out;
};

RunConfig load(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

MeshPtr start_mesh(const RunConfig& cfg, const std::string& in) {
  if (in.empty()) return initial_mesh(cfg);
  std::ifstream f(in);
  if (!f) throw IoError("cannot open mesh file " + in);
  return std::make_shared<const TriMesh>(read_mesh(f));
}

void prepare_dir(const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output_dir);
}

std::string in_dir(const RunConfig& cfg, const char* name) {
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

void save_mesh(const std::string& path, const TriMesh& mesh) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  write_mesh(f, mesh);
}

int print_stage(const char* name, const std::vector<LevelRecord>& recs, long saturated) {
  const LevelRecord& r = recs.back();
  std::printf("%s: levels=%zu elements=%d energy_norm=%s bound=%s\n", name, recs.size(), r.elements,
              format_value(r.energy_norm).c_str(), format_value(r.energy_bound).c_str());
  return saturated > 0 ? 2 : 0;
}

double harmonic_part(const RunConfig& cfg, double m_h) {
  const double s = std::sqrt(cfg.problem.eps_m);
  return cfg.pipeline == Pipeline::ThreeTermDirect ? s * m_h : 2.0 * s * m_h;
}

int cmd_mesh(const Common& c, int passes) {
  const RunConfig cfg = load(c);
  MeshPtr m = start_mesh(cfg, c.in);
  if (passes > 0) m = std::make_shared<const TriMesh>(refine_uniform(*m, passes));
  const std::string out = c.out.empty() ? "mesh.txt" : c.out;
  save_mesh(out, *m);
  std::printf("mesh: vertices=%d triangles=%d max_diameter=%s -> %s\n", m->num_vertices(), m->num_triangles(),
              format_value(m->max_diameter()).c_str(), out.c_str());
  return 0;
}

int cmd_harmonic(const Common& c) {
  const RunConfig cfg = load(c);
  const ProblemSpec spec = resolve_problem(cfg);
  const HarmonicStage hs = run_harmonic_stage(cfg, spec, start_mesh(cfg, c.in));
  prepare_dir(cfg);
  emit_csv(in_dir(cfg, "harmonic.csv"), hs.records, Stage::Harmonic);
  save_mesh(in_dir(cfg, "harmonic_mesh.txt"), *hs.mesh);
  return print_stage("harmonic", hs.records, 0);
}

// Runs the prerequisites of the linear component for the configured pipeline.
LinearStage linear_from(const RunConfig& cfg, const ProblemSpec& spec, MeshPtr mesh, double* fixed) {
  std::optional<HarmonicStage> hs;
  if (cfg.pipeline != Pipeline::TwoTerm) {
    hs = run_harmonic_stage(cfg, spec, mesh);
    mesh = hs->mesh;
    if (fixed) *fixed += harmonic_part(cfg, hs->majorant);
  }
  LinearStage lin = run_linear_stage(cfg, spec, mesh, hs ? &*hs->flux : nullptr);
  if (fixed) *fixed += 2.0 * lin.majorant;
  return lin;
}

int cmd_linear(const Common& c) {
  RunConfig cfg = load(c);
  if (cfg.pipeline == Pipeline::ThreeTermDirect) throw ConfigError("the direct pipeline has no linear stage");
  const ProblemSpec spec = resolve_problem(cfg);
  const LinearStage lin = linear_from(cfg, spec, start_mesh(cfg, c.in), nullptr);
  prepare_dir(cfg);
  emit_csv(in_dir(cfg, "linear.csv"), lin.records, Stage::Linear);
  save_mesh(in_dir(cfg, "linear_mesh.txt"), *lin.mesh);
  return print_stage("linear", lin.records, 0);
}

int cmd_nonlinear(const Common& c) {
  RunConfig cfg = load(c);
  if (cfg.pipeline == Pipeline::ThreeTermDirect) throw ConfigError("the direct pipeline has no split nonlinear stage");
  const ProblemSpec spec = resolve_problem(cfg);
  double fixed = 0.0;
  const LinearStage lin = linear_from(cfg, spec, start_mesh(cfg, c.in), &fixed);
  const NonlinearStage nl = run_nonlinear_stage(cfg, spec, lin, fixed);
  prepare_dir(cfg);
  emit_csv(in_dir(cfg, "nonlinear.csv"), nl.records, Stage::Nonlinear);
  save_mesh(in_dir(cfg, "nonlinear_mesh.txt"), *nl.mesh);
  return print_stage("nonlinear", nl.records, nl.saturated);
}

int cmd_direct(const Common& c) {
  RunConfig cfg = load(c);
  cfg.pipeline = Pipeline::ThreeTermDirect;
  const ProblemSpec spec = resolve_problem(cfg);
  const HarmonicStage hs = run_harmonic_stage(cfg, spec, start_mesh(cfg, c.in));
  const NonlinearStage d = run_direct_stage(cfg, spec, hs.mesh, *hs.flux, harmonic_part(cfg, hs.majorant));
  prepare_dir(cfg);
  emit_csv(in_dir(cfg, "direct.csv"), d.records, Stage::Direct);
  save_mesh(in_dir(cfg, "direct_mesh.txt"), *d.mesh);
  return print_stage("direct", d.records, d.saturated);
}

int cmd_adapt(const Common& c) {
  const RunConfig cfg = load(c);
  const RunSummary run = run_adaptive(cfg);
  emit_run(cfg, run);
  std::printf("pipeline=%s levels=%d overall_bound=%s relative=%s certified=%s\n", to_string(run.pipeline),
              run.levels, format_value(run.overall.bound).c_str(), format_value(run.overall.relative).c_str(),
              run.certified ? "true" : "false");
  return run.certified ? 0 : 2;
}

int cmd_report(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  std::ifstream s(base / "summary.txt");
  if (!s) throw IoError("no summary.txt in " + dir);
  const auto kv = read_key_values(s);
  for (const auto& [k, v] : kv) std::printf("%s=%s\n", k.c_str(), v.c_str());
  for (const char* stage : {"harmonic", "linear", "nonlinear", "direct"}) {
    std::ifstream f(base / (std::string(stage) + ".csv"));
    if (!f) continue;
    const CsvTable t = read_csv(f);
    std::printf("\n[%s] %zu level(s)\n%6s %10s %12s %12s %12s %10s %10s\n", stage, t.size(), "level", "elements",
                "energy_norm", "dual_gap", "bound", "RE_up%", "P_rel%");
    for (const auto& row : t)
      std::printf("%6s %10s %12s %12s %12s %10s %10s\n", row.at("level").c_str(), row.at("elements").c_str(),
                  row.at("energy_norm").c_str(), row.at("dual_gap").c_str(), row.at("energy_bound").c_str(),
                  row.at("RE_up").c_str(), row.at("P_rel").c_str());
  }
  const auto it = kv.find("certified");
  return it != kv.end() && it->second == "false" ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive finite elements with guaranteed error bounds for the regularized Poisson-Boltzmann equation"};
  app.require_subcommand(1);

  Common common;
  int passes = 0;
  std::string report_dir = ".";
  auto add_common = [&](CLI::App* sub, const char* in_help, const char* out_help) {
    sub->add_option("--config", common.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--in", common.in, in_help);
    sub->add_option("--out", common.out, out_help);
  };
  auto* mesh = app.add_subcommand("mesh", "build the initial disk-in-square mesh");
  add_common(mesh, "mesh file to refine instead of building one", "mesh file to write");
  mesh->add_option("--refine", passes, "uniform refinement passes")->check(CLI::NonNegativeNumber);
  auto* harmonic = app.add_subcommand("harmonic", "adaptive harmonic stage on the molecule");
  add_common(harmonic, "initial mesh file", "output directory");
  auto* linear = app.add_subcommand("linear", "adaptive linear stage");
  add_common(linear, "initial mesh file", "output directory");
  auto* nonlinear = app.add_subcommand("nonlinear", "linear stage, then the adaptive nonlinear stage");
  add_common(nonlinear, "initial mesh file", "output directory");
  auto* direct = app.add_subcommand("direct", "harmonic stage, then the direct regular-component stage");
  add_common(direct, "initial mesh file", "output directory");
  auto* adapt = app.add_subcommand("adapt", "full adaptive run of the configured pipeline");
  add_common(adapt, "unused", "output directory");
  auto* report = app.add_subcommand("report", "print the summary and level tables of a finished run");
  report->add_option("--in", report_dir, "run output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    if (mesh->parsed()) return cmd_mesh(common, passes);
    if (harmonic->parsed()) return cmd_harmonic(common);
    if (linear->parsed()) return cmd_linear(common);
    if (nonlinear->parsed()) return cmd_nonlinear(common);
    if (direct->parsed()) return cmd_direct(common);
    if (adapt->parsed()) return cmd_adapt(common);
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
