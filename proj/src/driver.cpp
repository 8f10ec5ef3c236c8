#include "pbe/driver.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "pbe/error.hpp"
#include "pbe/flux.hpp"

namespace pbe {

namespace {

SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions opt = cfg.solver;
  opt.length_scale = cfg.geometry.side;
  return opt;
}

double cf_square(const RunConfig& cfg) { return friedrichs_bound(Shape::Square, cfg.geometry.side, 2); }
double cf_disk(const RunConfig& cfg) { return friedrichs_bound(Shape::Disk, cfg.geometry.radius, 2); }

std::vector<Vec2> element_flux(const ScalarFieldP1& v, RegionValues eps) {
  const TriMesh& m = v.mesh();
  std::vector<Vec2> out(m.num_triangles());
  for (int k = 0; k < m.num_triangles(); ++k) out[k] = eps(m.region(k)) * v.gradient(k);
  return out;
}

double div_l2(const FluxFieldRT0& y) {
  double s = 0.0;
  for (int k = 0; k < y.mesh().num_triangles(); ++k) s += y.mesh().area(k) * y.divergence(k) * y.divergence(k);
  return std::sqrt(s);
}

// |||y_g + y|||_* by quadrature
double composite_dual_norm(MeshPtr mesh, const ProblemSpec& spec, const InterfaceFlux& y_g, const FluxFieldRT0& y) {
  double s = 0.0;
  for (double x : dual_gap_squares(ScalarFieldP1::zero(std::move(mesh)), RegionValues::dielectric(spec), y_g, &y))
    s += x;
  return std::sqrt(s);
}

bool all_zero(const std::vector<double>& v) {
  for (double x : v)
    if (x != 0.0) return false;
  return true;
}

MeshPtr refine_marked(const MeshPtr& mesh, const std::vector<double>& indicators, double theta) {
  const std::vector<int> marked = mark_dorfler(indicators, theta);
  return std::make_shared<const TriMesh>(refine(*mesh, marked));
}

void prolong_all(std::vector<ScalarFieldP1>& fields, const MeshPtr& fine) {
  for (ScalarFieldP1& f : fields) f = prolong(f, fine);
}

[[noreturn]] void rethrow_with_context(const char* stage, int level) {
  try {
    throw;
  } catch (const std::exception& e) {
    throw Error(std::string(stage) + " stage, level " + std::to_string(level) + ": " + e.what());
  }
}

void fill_common(LevelRecord& r, Stage stage, int level, const ScalarFieldP1& v, RegionValues eps) {
  r.stage = stage;
  r.level = level;
  r.elements = v.mesh().num_triangles();
  r.l2_norm = l2_norm(v);
  r.energy_norm = energy_norm(v, eps);
}

}  // namespace

ProblemSpec resolve_problem(const RunConfig& cfg) {
  ProblemSpec spec = cfg.problem;
  if (!cfg.charges_file.empty())
    for (const Charge& c : read_charges(cfg.charges_file)) spec.charges.push_back(c);
  spec.validate();
  spec.validate_geometry(cfg.geometry, cfg.charge_clearance.value_or(cfg.mesh_h));
  return spec;
}

MeshPtr initial_mesh(const RunConfig& cfg) {
  return std::make_shared<const TriMesh>(build_disk_in_square(cfg.geometry, cfg.mesh_h));
}

HarmonicStage run_harmonic_stage(const RunConfig& cfg, const ProblemSpec& spec, MeshPtr mesh) {
  const SolverOptions opt = solver_options(cfg);
  const double cf = cf_disk(cfg);
  HarmonicStage out;
  for (int level = 0;; ++level) {
    try {
      const SubMesh sub = extract_region(*mesh, Region::Molecule);
      ScalarFieldP1 u = solve_harmonic(sub.mesh, spec, opt);
      const FluxFieldRT0 t = equilibrate_patchwise(sub.mesh, element_flux(u, RegionValues::uniform(1.0)),
                                                   SourceMoments::zero(*sub.mesh));
      const HarmonicBound hb = majorant_H(u, t, cf);

      LevelRecord r;
      fill_common(r, Stage::Harmonic, level, u, RegionValues::uniform(1.0));
      r.dual_gap = hb.gap;
      r.div_norm = hb.div_norm;
      r.majorant = hb.majorant;
      r.energy_bound = hb.majorant;
      r.flux_dual_norm = dual_norm(t, RegionValues::uniform(1.0));
      r.cen_lower = hb.gap;
      r.cen_upper = hb.primal;
      out.records.push_back(r);
      out.flux = lift_from_submesh(t, sub, mesh);
      out.field = std::move(u);
      out.majorant = hb.majorant;
      out.mesh = mesh;

      if (hb.majorant <= cfg.harmonic_rel_tol * r.energy_norm || all_zero(hb.indicators) ||
          level + 1 >= cfg.harmonic_levels)
        break;
      std::vector<double> full(mesh->num_triangles(), 0.0);
      for (std::size_t k = 0; k < hb.indicators.size(); ++k) full[sub.triangle_map[k]] = hb.indicators[k];
      mesh = refine_marked(mesh, full, cfg.theta);
    } catch (...) {
      rethrow_with_context("harmonic", level);
    }
  }
  return out;
}

LinearStage run_linear_stage(const RunConfig& cfg, const ProblemSpec& spec, MeshPtr mesh,
                             const FluxFieldRT0* flux_h) {
  const SolverOptions opt = solver_options(cfg);
  const double ls = opt.length_scale;
  const double cf = cf_square(cfg);
  std::optional<FluxFieldRT0> t;
  if (flux_h) t = *flux_h;

  LinearStage out;
  std::vector<ScalarFieldP1> history;
  std::optional<FluxFieldRT0> last_y0;
  std::optional<InterfaceFlux> last_yg;
  for (int level = 0;; ++level) {
    try {
      const InterfaceFlux y_g = t ? InterfaceFlux::three_term(spec, std::make_shared<const FluxFieldRT0>(*t), ls)
                                  : InterfaceFlux::two_term(spec, ls);
      const BoundaryData bc = t ? BoundaryData::constant(spec.g) : BoundaryData::two_term(spec, ls);
      ScalarFieldP1 u = solve_linear_component(mesh, spec, load_vector(*mesh, y_g), bc, opt);
      LinearMajorantResult lm = minimize_majorant_linear(u, spec, y_g, cf);
      const LinearBound lb = majorant_L(u, lm.y0, spec, y_g, cf);
      const CenBounds cen = cen_bounds_linear(lb.gap, lb.div_norm, lb.majorant, cf, spec.eps_min());

      LevelRecord r;
      fill_common(r, Stage::Linear, level, u, RegionValues::dielectric(spec));
      r.dual_gap = lb.gap;
      r.div_norm = lb.div_norm;
      r.majorant = lb.majorant;
      r.energy_bound = lb.majorant;
      r.energy = energy_J_linear(u, spec, y_g);
      r.alpha = lm.alpha;
      r.cen_lower = cen.lower;
      r.cen_upper = cen.upper;
      r.flux_dual_norm = composite_dual_norm(mesh, spec, y_g, lm.y0);
      out.records.push_back(r);
      history.push_back(u);
      out.freeze_level = level;
      out.mesh = mesh;
      out.frozen = u;
      out.flux_h = t;
      out.indicators = lb.indicators;
      out.majorant = lb.majorant;
      out.iterates.push_back(u);
      out.fluxes.push_back(lm.y0);
      if (t) out.harmonic_fluxes.push_back(*t);
      last_y0 = std::move(lm.y0);
      last_yg = y_g;

      bool stop = all_zero(lb.indicators) || level + 1 >= cfg.max_levels;
      if (cfg.freeze_level) {
        stop = stop || level >= *cfg.freeze_level;
      } else {
        const double den = r.energy_norm - r.majorant;
        stop = stop || (den > 0.0 && r.majorant / den <= 2.0 * cfg.target_rel_tol);
      }
      if (stop) break;
      mesh = refine_marked(mesh, lb.indicators, cfg.theta);
      prolong_all(history, mesh);
      if (t) t = prolong(*t, mesh);
    } catch (...) {
      rethrow_with_context("linear", level);
    }
  }

  // bounds of earlier iterates against the final flux and iterate
  const int pbar = out.freeze_level;
  const double j_final = out.records.back().energy;
  for (int i = 0; i < pbar; ++i) {
    LevelRecord& r = out.records[i];
    r.cross_bound[pbar] = majorant_L(history[i], *last_y0, spec, *last_yg, cf).majorant;
    r.cross_minorant[pbar] = minorant_from_energies(r.energy, j_final).value;
    r.minorant = r.cross_minorant[pbar];
  }
  out.records.back().minorant = 0.0;
  return out;
}

NonlinearStage run_nonlinear_stage(const RunConfig& cfg, const ProblemSpec& spec, const LinearStage& linear,
                                   double fixed_part) {
  const SolverOptions opt = solver_options(cfg);
  const double ls = opt.length_scale;
  const RegionValues eps = RegionValues::dielectric(spec);
  const bool three_term = linear.flux_h.has_value();

  NonlinearStage out;
  MeshPtr mesh = linear.mesh;
  ScalarFieldP1 ul = *linear.frozen;
  std::optional<ScalarFieldP1> prev;
  std::vector<ScalarFieldP1> history;
  std::optional<FluxFieldRT0> last_y;
  std::optional<NonlinearShift> last_w;
  for (int level = 0; level < cfg.max_levels; ++level) {
    try {
      const NonlinearShift w =
          three_term ? NonlinearShift::three_term(ul) : NonlinearShift::two_term(ul, spec, ls);
      NonlinearResult res = solve_nonlinear_component(mesh, spec, w, opt, prev ? &*prev : nullptr);
      const ScalarFieldP1& u = res.field;
      FluxFieldRT0 y = equilibrate_patchwise(mesh, element_flux(u, eps),
                                             SourceMoments::sinh_source(u, spec, w, opt.clamp), eps);
      const NonlinearBound nb = majorant_N(u, y, w, spec);

      LevelRecord r;
      fill_common(r, Stage::Nonlinear, level, u, eps);
      r.dual_gap = nb.gap;
      r.div_norm = div_l2(y);
      r.df = nb.df;
      r.majorant = nb.majorant;
      r.energy_bound = nb.energy_bound;
      r.energy = energy_J_nonlinear(u, spec, w);
      r.cen_lower = nb.cen_lower;
      r.cen_upper = nb.energy_bound;
      r.flux_dual_norm = dual_norm(y, eps);
      r.saturated = res.saturated + nb.saturated;
      r.newton_iterations = res.iterations;
      out.records.push_back(r);
      history.push_back(u);
      out.mesh = mesh;
      out.field = u;
      out.linear = ul;
      out.flux = y;
      out.indicators = nb.indicators;
      out.majorant = nb.majorant;
      out.iterates.push_back(u);
      out.fluxes.push_back(y);
      out.linear_parts.push_back(ul);
      last_y = std::move(y);
      last_w = w;

      const bool done = (cfg.target_delta && fixed_part + nb.energy_bound <= *cfg.target_delta) ||
                        all_zero(nb.indicators) || level + 1 >= cfg.max_levels;
      if (done) break;
      mesh = refine_marked(mesh, nb.indicators, cfg.theta);
      ul = prolong(ul, mesh);
      prev = prolong(res.field, mesh);
      prolong_all(history, mesh);
    } catch (...) {
      rethrow_with_context("nonlinear", level);
    }
  }

  const int pbar = out.records.back().level;
  for (int i = 0; i < pbar; ++i)
    out.records[i].cross_bound[pbar] = majorant_N(history[i], *last_y, *last_w, spec).energy_bound;
  for (const LevelRecord& r : out.records) out.saturated += r.saturated;
  return out;
}

NonlinearStage run_direct_stage(const RunConfig& cfg, const ProblemSpec& spec, MeshPtr mesh,
                                const FluxFieldRT0& flux_h, double fixed_part) {
  const SolverOptions opt = solver_options(cfg);
  const double ls = opt.length_scale;
  const RegionValues eps = RegionValues::dielectric(spec);

  NonlinearStage out;
  FluxFieldRT0 t = flux_h;
  std::optional<ScalarFieldP1> prev;
  std::vector<ScalarFieldP1> history;
  std::optional<FluxFieldRT0> last_y;
  std::optional<InterfaceFlux> last_yg;
  for (int level = 0; level < cfg.max_levels; ++level) {
    try {
      const InterfaceFlux y_g = InterfaceFlux::three_term(spec, std::make_shared<const FluxFieldRT0>(t), ls);
      NonlinearResult res = solve_direct_regular(mesh, spec, t, opt, prev ? &*prev : nullptr);
      const ScalarFieldP1& u = res.field;
      const std::vector<Vec2> sigma = project_piecewise_constant(
          *mesh,
          [&](int k, Vec2 x) { return eps(mesh->region(k)) * u.gradient(k) - y_g.value(*mesh, k, x); },
          kNonlinearDegree);
      FluxFieldRT0 y0 = equilibrate_patchwise(
          mesh, sigma, SourceMoments::sinh_source(u, spec, NonlinearShift{}, opt.clamp), eps);
      const NonlinearBound nb = majorant_direct(u, y0, spec, y_g);

      LevelRecord r;
      fill_common(r, Stage::Direct, level, u, eps);
      r.dual_gap = nb.gap;
      r.div_norm = div_l2(y0);
      r.df = nb.df;
      r.majorant = nb.majorant;
      r.energy_bound = nb.energy_bound;
      r.energy = energy_J_direct(u, spec, y_g);
      r.cen_lower = nb.cen_lower;
      r.cen_upper = nb.energy_bound;
      r.flux_dual_norm = composite_dual_norm(mesh, spec, y_g, y0);
      r.saturated = res.saturated + nb.saturated;
      r.newton_iterations = res.iterations;
      out.records.push_back(r);
      history.push_back(u);
      out.mesh = mesh;
      out.field = u;
      out.flux = y0;
      out.indicators = nb.indicators;
      out.majorant = nb.majorant;
      out.iterates.push_back(u);
      out.fluxes.push_back(y0);
      out.harmonic_fluxes.push_back(t);
      last_y = std::move(y0);
      last_yg = y_g;

      const bool done = (cfg.target_delta && fixed_part + nb.energy_bound <= *cfg.target_delta) ||
                        all_zero(nb.indicators) || level + 1 >= cfg.max_levels;
      if (done) break;
      mesh = refine_marked(mesh, nb.indicators, cfg.theta);
      t = prolong(t, mesh);
      prev = prolong(res.field, mesh);
      prolong_all(history, mesh);
    } catch (...) {
      rethrow_with_context("direct", level);
    }
  }

  const int pbar = out.records.back().level;
  for (int i = 0; i < pbar; ++i)
    out.records[i].cross_bound[pbar] = majorant_direct(history[i], *last_y, spec, *last_yg).energy_bound;
  for (const LevelRecord& r : out.records) out.saturated += r.saturated;
  return out;
}

RunSummary run_adaptive(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  const ProblemSpec spec = resolve_problem(cfg);
  MeshPtr mesh = initial_mesh(cfg);
  const double sqrt_em = std::sqrt(spec.eps_m);
  const RegionValues eps = RegionValues::dielectric(spec);

  RunSummary run;
  run.pipeline = cfg.pipeline;
  NonlinearStage last;
  if (cfg.pipeline == Pipeline::TwoTerm || cfg.pipeline == Pipeline::ThreeTermSplit) {
    double fixed = 0.0;
    const FluxFieldRT0* t = nullptr;
    HarmonicStage hs;
    if (cfg.pipeline == Pipeline::ThreeTermSplit) {
      hs = run_harmonic_stage(cfg, spec, mesh);
      run.harmonic = hs.records;
      run.components.m_h = hs.majorant;
      fixed += 2.0 * sqrt_em * hs.majorant;
      mesh = hs.mesh;
      t = &*hs.flux;
    }
    const LinearStage lin = run_linear_stage(cfg, spec, mesh, t);
    run.linear = lin.records;
    run.freeze_level = lin.freeze_level;
    run.components.m_l = lin.majorant;
    fixed += 2.0 * lin.majorant;
    last = run_nonlinear_stage(cfg, spec, lin, fixed);
    run.nonlinear = last.records;
    run.components.m_n = last.majorant;
    run.solution_energy_norm = energy_norm(*last.linear + *last.field, eps);
    run.fields.point_scalars = {{"u_linear", last.linear->values()},
                                {"u_nonlinear", last.field->values()},
                                {"u_regular", (*last.linear + *last.field).values()}};
  } else {
    const HarmonicStage hs = run_harmonic_stage(cfg, spec, mesh);
    run.harmonic = hs.records;
    run.components.m_h = hs.majorant;
    last = run_direct_stage(cfg, spec, hs.mesh, *hs.flux, sqrt_em * hs.majorant);
    run.direct = last.records;
    run.components.m_direct = last.majorant;
    run.solution_energy_norm = energy_norm(*last.field, eps);
    run.fields.point_scalars = {{"u_regular", last.field->values()}};
  }

  run.overall = overall_error(cfg.pipeline, run.components, spec.eps_m, run.solution_energy_norm);
  run.saturated = last.saturated;
  run.certified = run.saturated == 0;
  run.levels = static_cast<int>(run.harmonic.size() + run.linear.size() + run.nonlinear.size() + run.direct.size());
  run.final_mesh = last.mesh;
  run.fields.cell_scalars = {{"indicator", last.indicators}};
  std::vector<Vec2> fv(last.mesh->num_triangles());
  for (int k = 0; k < last.mesh->num_triangles(); ++k) fv[k] = last.flux->centroid_value(k);
  run.fields.cell_vectors = {{"flux", std::move(fv)}};
  run.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

void emit_run(const RunConfig& cfg, const RunSummary& run) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  if (cfg.emit_csv) {
    if (!run.harmonic.empty()) emit_csv((dir / "harmonic.csv").string(), run.harmonic, Stage::Harmonic);
    if (!run.linear.empty()) emit_csv((dir / "linear.csv").string(), run.linear, Stage::Linear);
    if (!run.nonlinear.empty()) emit_csv((dir / "nonlinear.csv").string(), run.nonlinear, Stage::Nonlinear);
    if (!run.direct.empty()) emit_csv((dir / "direct.csv").string(), run.direct, Stage::Direct);
  }
  if (cfg.emit_vtk && run.final_mesh) emit_vtk((dir / "final.vtk").string(), *run.final_mesh, run.fields);
  if (cfg.emit_summary) {
    // full precision so the summary can be compared against recomputed values
    auto opt = [](const std::optional<double>& v) {
      if (!v) return std::string("-");
      char b[32];
      std::snprintf(b, sizeof b, "%.17g", *v);
      return std::string(b);
    };
    char wall[32];
    std::snprintf(wall, sizeof wall, "%.3f", run.wall_time);
    const std::string path = (dir / "summary.txt").string();
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    write_key_values(f, {{"pipeline", to_string(run.pipeline)},
                         {"overall_bound", opt(run.overall.bound)},
                         {"relative_bound", opt(run.overall.relative)},
                         {"solution_energy_norm", opt(run.solution_energy_norm)},
                         {"M_H", opt(run.components.m_h)},
                         {"M_L", opt(run.components.m_l)},
                         {"M_N", opt(run.components.m_n)},
                         {"M_direct", opt(run.components.m_direct)},
                         {"freeze_level", std::to_string(run.freeze_level)},
                         {"levels", std::to_string(run.levels)},
                         {"final_elements", std::to_string(run.final_mesh ? run.final_mesh->num_triangles() : 0)},
                         {"saturated", std::to_string(run.saturated)},
                         {"certified", run.certified ? "true" : "false"},
                         {"wall_time", wall}});
  }
}

}  // namespace pbe
