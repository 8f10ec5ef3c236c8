#include "pbe/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pbe/error.hpp"
#include "pbe/quadrature.hpp"

namespace pbe {

// ---------------------------------------------------------------------------
// fields

ScalarFieldP1::ScalarFieldP1(MeshPtr mesh, Eigen::VectorXd values, std::vector<char> fixed)
    : mesh_(std::move(mesh)), values_(std::move(values)), fixed_(std::move(fixed)) {
  if (!mesh_) throw InvalidArgument("field needs a mesh");
  if (values_.size() != mesh_->num_vertices()) throw InvalidArgument("coefficient count differs from vertex count");
  if (!fixed_.empty() && static_cast<int>(fixed_.size()) != mesh_->num_vertices())
    throw InvalidArgument("Dirichlet mask length differs from vertex count");
}

ScalarFieldP1 ScalarFieldP1::zero(MeshPtr mesh) {
  const int n = mesh->num_vertices();
  return ScalarFieldP1(std::move(mesh), Eigen::VectorXd::Zero(n));
}

ScalarFieldP1 ScalarFieldP1::interpolate(MeshPtr mesh, const std::function<double(Vec2)>& f) {
  Eigen::VectorXd v(mesh->num_vertices());
  for (int i = 0; i < mesh->num_vertices(); ++i) v[i] = f(mesh->vertex(i));
  return ScalarFieldP1(std::move(mesh), std::move(v));
}

double ScalarFieldP1::at(int k, const std::array<double, 3>& b) const {
  const Triangle& t = mesh_->triangle(k);
  return b[0] * values_[t[0]] + b[1] * values_[t[1]] + b[2] * values_[t[2]];
}

Vec2 ScalarFieldP1::gradient(int k) const {
  const auto g = mesh_->barycentric_gradients(k);
  const Triangle& t = mesh_->triangle(k);
  return values_[t[0]] * g[0] + values_[t[1]] * g[1] + values_[t[2]] * g[2];
}

namespace {

void same_mesh(const ScalarFieldP1& a, const ScalarFieldP1& b) {
  if (a.mesh_ptr() != b.mesh_ptr()) throw InvalidArgument("fields live on different meshes");
}

}  // namespace

ScalarFieldP1 operator+(const ScalarFieldP1& a, const ScalarFieldP1& b) {
  same_mesh(a, b);
  return ScalarFieldP1(a.mesh_ptr(), a.values() + b.values());
}

ScalarFieldP1 operator-(const ScalarFieldP1& a, const ScalarFieldP1& b) {
  same_mesh(a, b);
  return ScalarFieldP1(a.mesh_ptr(), a.values() - b.values());
}

ScalarFieldP1 operator*(double s, const ScalarFieldP1& a) { return ScalarFieldP1(a.mesh_ptr(), s * a.values()); }

ScalarFieldP1 prolong(const ScalarFieldP1& a, MeshPtr fine) {
  const Lineage* lin = fine->lineage();
  if (!lin || lin->coarse_vertices != a.mesh().num_vertices() || lin->coarse_triangles != a.mesh().num_triangles())
    throw InvalidArgument("prolong: fine mesh is not refined from the field's mesh");
  Eigen::VectorXd v(fine->num_vertices());
  v.head(lin->coarse_vertices) = a.values();
  std::vector<char> fixed;
  if (!a.fixed().empty()) {
    fixed.assign(fine->num_vertices(), 0);
    std::copy(a.fixed().begin(), a.fixed().end(), fixed.begin());
  }
  for (std::size_t i = 0; i < lin->midpoint_of.size(); ++i) {
    const int id = lin->coarse_vertices + static_cast<int>(i);
    const auto [p, q] = lin->midpoint_of[i];
    v[id] = 0.5 * (v[p] + v[q]);
    if (!fixed.empty()) fixed[id] = fixed[p] && fixed[q] && fine->on_outer_boundary(id);
  }
  return ScalarFieldP1(std::move(fine), std::move(v), std::move(fixed));
}

ScalarFieldP1 lift_from_submesh(const ScalarFieldP1& sub, const SubMesh& map, MeshPtr full) {
  if (sub.mesh_ptr() != map.mesh) throw InvalidArgument("lift: field is not on the given sub-mesh");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(full->num_vertices());
  for (std::size_t i = 0; i < map.vertex_map.size(); ++i) v[map.vertex_map[i]] = sub[static_cast<int>(i)];
  return ScalarFieldP1(std::move(full), std::move(v));
}

// ---------------------------------------------------------------------------
// assembly

Eigen::Matrix3d element_stiffness(const std::array<Vec2, 3>& p, double eps) {
  const double area = 0.5 * cross(p[1] - p[0], p[2] - p[0]);
  if (!(area > 0.0)) throw GeometryError("degenerate triangle");
  Eigen::Matrix3d m;
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Vec2 e = p[(i + 2) % 3] - p[(i + 1) % 3];
    g[i] = Vec2{-e.y, e.x} / (2.0 * area);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = eps * area * dot(g[i], g[j]);
  return m;
}

SparseMatrix assemble_stiffness(const TriMesh& mesh, RegionValues eps) {
  if (!(eps.molecule > 0.0) || !(eps.solvent > 0.0)) throw InvalidArgument("coefficients must be positive");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * static_cast<std::size_t>(mesh.num_triangles()));
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    Eigen::Matrix3d m;
    try {
      m = element_stiffness(mesh.corners(k), eps(mesh.region(k)));
    } catch (const GeometryError&) {
      throw GeometryError("degenerate triangle " + std::to_string(k));
    }
    const Triangle& t = mesh.triangle(k);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(t[i], t[j], m(i, j));
  }
  SparseMatrix a(mesh.num_vertices(), mesh.num_vertices());
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

namespace {

struct Reduction {
  std::vector<int> to_free;  // -1 for fixed
  std::vector<int> free;
};

Reduction make_reduction(const std::vector<char>& fixed) {
  Reduction r;
  r.to_free.assign(fixed.size(), -1);
  for (std::size_t i = 0; i < fixed.size(); ++i)
    if (!fixed[i]) {
      r.to_free[i] = static_cast<int>(r.free.size());
      r.free.push_back(static_cast<int>(i));
    }
  return r;
}

SparseMatrix reduce(const SparseMatrix& a, const Reduction& r) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(a.nonZeros());
  for (int c = 0; c < a.outerSize(); ++c) {
    const int fc = r.to_free[c];
    if (fc < 0) continue;
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
      const int fr = r.to_free[it.row()];
      if (fr >= 0) trip.emplace_back(fr, fc, it.value());
    }
  }
  const int n = static_cast<int>(r.free.size());
  SparseMatrix out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Eigen::VectorXd pcg(const SparseMatrix& a, const Eigen::VectorXd& b, const SolverOptions& opt) {
  if (b.size() == 0) return b;
  if (b.squaredNorm() == 0.0) return Eigen::VectorXd::Zero(b.size());
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
  cg.setTolerance(opt.lin_tol);
  cg.setMaxIterations(opt.max_lin_iter);
  cg.compute(a);
  if (cg.info() != Eigen::Success) throw SolverError("preconditioner setup failed");
  Eigen::VectorXd x = cg.solve(b);
  if (cg.info() != Eigen::Success)
    throw SolverError("conjugate gradient did not converge (residual " + std::to_string(cg.error()) + " after " +
                      std::to_string(cg.iterations()) + " iterations)");
  return x;
}

}  // namespace

Eigen::VectorXd solve_constrained(const SparseMatrix& a, const Eigen::VectorXd& b, const std::vector<char>& fixed,
                                  const Eigen::VectorXd& fixed_values, const SolverOptions& opt) {
  const Reduction r = make_reduction(fixed);
  if (r.free.empty()) throw SolverError("singular system: no interior unknowns");
  Eigen::VectorXd ud = Eigen::VectorXd::Zero(a.rows());
  for (std::size_t i = 0; i < fixed.size(); ++i)
    if (fixed[i]) ud[i] = fixed_values[i];
  const Eigen::VectorXd rhs_full = b - a * ud;
  Eigen::VectorXd rhs(r.free.size());
  for (std::size_t i = 0; i < r.free.size(); ++i) rhs[i] = rhs_full[r.free[i]];
  const Eigen::VectorXd x = pcg(reduce(a, r), rhs, opt);
  Eigen::VectorXd u = ud;
  for (std::size_t i = 0; i < r.free.size(); ++i) u[r.free[i]] = x[i];
  return u;
}

BoundaryData BoundaryData::constant(double g) {
  return {[g](Vec2) { return g; }};
}

BoundaryData BoundaryData::two_term(const ProblemSpec& spec, double length_scale) {
  auto green = std::make_shared<GreenFunction>(spec, length_scale);
  const double g = spec.g;
  return {[green, g](Vec2 x) { return g - green->value(x); }};
}

ScalarFieldP1 solve_harmonic(MeshPtr mesh_m, const ProblemSpec& spec, const SolverOptions& opt) {
  spec.validate();
  for (Region r : mesh_m->regions())
    if (r != Region::Molecule) throw InvalidArgument("harmonic stage expects the molecule sub-mesh");
  const GreenFunction green(spec, opt.length_scale);
  const int n = mesh_m->num_vertices();
  std::vector<char> fixed(n, 0);
  Eigen::VectorXd data = Eigen::VectorXd::Zero(n);
  for (int v = 0; v < n; ++v)
    if (mesh_m->on_outer_boundary(v)) {
      fixed[v] = 1;
      data[v] = green.empty() ? 0.0 : -green.value(mesh_m->vertex(v));
    }
  const SparseMatrix a = assemble_stiffness(*mesh_m, RegionValues::uniform(1.0));
  Eigen::VectorXd u = solve_constrained(a, Eigen::VectorXd::Zero(n), fixed, data, opt);
  return ScalarFieldP1(std::move(mesh_m), std::move(u), std::move(fixed));
}

ScalarFieldP1 solve_linear_component(MeshPtr mesh, const ProblemSpec& spec, const Eigen::VectorXd& load,
                                     const BoundaryData& bc, const SolverOptions& opt) {
  spec.validate();
  const int n = mesh->num_vertices();
  if (load.size() != n) throw InvalidArgument("load vector length differs from vertex count");
  std::vector<char> fixed(n, 0);
  Eigen::VectorXd data = Eigen::VectorXd::Zero(n);
  for (int v = 0; v < n; ++v)
    if (mesh->on_outer_boundary(v)) {
      fixed[v] = 1;
      data[v] = bc.outer(mesh->vertex(v));
    }
  const SparseMatrix a = assemble_stiffness(*mesh, RegionValues::dielectric(spec));
  Eigen::VectorXd u = solve_constrained(a, load, fixed, data, opt);
  return ScalarFieldP1(std::move(mesh), std::move(u), std::move(fixed));
}

// ---------------------------------------------------------------------------
// nonlinear stage

NonlinearShift::NonlinearShift(std::optional<ScalarFieldP1> field, std::shared_ptr<const GreenFunction> green)
    : field_(std::move(field)), green_(std::move(green)) {
  if (green_ && green_->empty()) green_.reset();
}

NonlinearShift NonlinearShift::two_term(const ScalarFieldP1& u_linear, const ProblemSpec& spec, double length_scale) {
  return NonlinearShift(u_linear, std::make_shared<GreenFunction>(spec, length_scale));
}

NonlinearShift NonlinearShift::three_term(const ScalarFieldP1& u_linear) { return NonlinearShift(u_linear, nullptr); }

double NonlinearShift::value(int k, const std::array<double, 3>& bary, const Vec2& x) const {
  double w = 0.0;
  if (field_) w += field_->at(k, bary);
  if (green_) w += green_->value(x);
  return w;
}

void NonlinearShift::check_mesh(const TriMesh& mesh) const {
  if (field_ && &field_->mesh() != &mesh) throw InvalidArgument("shift field is defined on a different mesh");
}

namespace {

/** Shift values at the nonlinear quadrature points of every solvent triangle. */
struct NonlinearCache {
  std::vector<int> elements;
  std::vector<double> shift;  // elements.size() * rule.size()
  const std::vector<QuadPoint>* rule = nullptr;
  double max_abs_shift = 0.0;

  NonlinearCache(const TriMesh& mesh, const ProblemSpec& spec, const NonlinearShift* w) {
    rule = &triangle_rule(kNonlinearDegree);
    if (spec.ks2 == 0.0) return;
    for (int k = 0; k < mesh.num_triangles(); ++k)
      if (mesh.region(k) == Region::Solvent) elements.push_back(k);
    shift.assign(elements.size() * rule->size(), 0.0);
    if (!w || w->is_zero()) return;
    for (std::size_t e = 0; e < elements.size(); ++e) {
      const int k = elements[e];
      const auto p = mesh.corners(k);
      for (std::size_t q = 0; q < rule->size(); ++q) {
        const auto& b = (*rule)[q].bary;
        const double v = w->value(k, b, map_point(p, b));
        shift[e * rule->size() + q] = v;
        max_abs_shift = std::max(max_abs_shift, std::abs(v));
      }
    }
  }
};

double clamp_arg(double a, double limit, long& saturated) {
  if (a > limit) {
    ++saturated;
    return limit;
  }
  if (a < -limit) {
    ++saturated;
    return -limit;
  }
  return a;
}

struct Evaluation {
  Eigen::VectorXd residual;
  double energy = 0.0;
  double energy_scale = 0.0;
  long saturated = 0;
};

class SemilinearSystem {
 public:
  SemilinearSystem(const TriMesh& mesh, const ProblemSpec& spec, const InterfaceFlux& y_g, const NonlinearShift& w,
                   double clamp)
      : mesh_(mesh), spec_(spec), cache_(mesh, spec, &w), clamp_(clamp) {
    a_ = assemble_stiffness(mesh, RegionValues::dielectric(spec));
    load_ = Eigen::VectorXd::Zero(mesh.num_vertices());
    if (y_g.kind() != InterfaceFlux::Kind::None) {
      // full load including boundary rows; the energy needs them
      for (int k = 0; k < mesh.num_triangles(); ++k) {
        const Vec2 yk = y_g.integral(mesh, k);
        const auto g = mesh.barycentric_gradients(k);
        const Triangle& t = mesh.triangle(k);
        for (int i = 0; i < 3; ++i) load_[t[i]] += dot(yk, g[i]);
      }
    }
  }

  const SparseMatrix& stiffness() const { return a_; }
  const NonlinearCache& cache() const { return cache_; }

  Evaluation evaluate(const Eigen::VectorXd& u) const {
    Evaluation ev;
    const Eigen::VectorXd au = a_ * u;
    ev.residual = au - load_;
    const double quad = 0.5 * u.dot(au);
    const double lin = load_.dot(u);
    double nl = 0.0;
    const auto& rule = *cache_.rule;
    for (std::size_t e = 0; e < cache_.elements.size(); ++e) {
      const int k = cache_.elements[e];
      const Triangle& t = mesh_.triangle(k);
      const double scale = spec_.ks2 * mesh_.area(k);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto& b = rule[q].bary;
        const double arg = clamp_arg(b[0] * u[t[0]] + b[1] * u[t[1]] + b[2] * u[t[2]] + cache_.shift[e * rule.size() + q],
                                     clamp_, ev.saturated);
        const double s = rule[q].weight * scale * std::sinh(arg);
        for (int i = 0; i < 3; ++i) ev.residual[t[i]] += s * b[i];
        nl += rule[q].weight * scale * std::cosh(arg);
      }
    }
    ev.energy = quad - lin + nl;
    ev.energy_scale = std::abs(quad) + std::abs(lin) + std::abs(nl);
    return ev;
  }

  SparseMatrix jacobian(const Eigen::VectorXd& u) const {
    std::vector<Eigen::Triplet<double>> trip;
    const auto& rule = *cache_.rule;
    trip.reserve(9 * cache_.elements.size());
    long dummy = 0;
    for (std::size_t e = 0; e < cache_.elements.size(); ++e) {
      const int k = cache_.elements[e];
      const Triangle& t = mesh_.triangle(k);
      const double scale = spec_.ks2 * mesh_.area(k);
      double m[3][3] = {};
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto& b = rule[q].bary;
        const double arg = clamp_arg(b[0] * u[t[0]] + b[1] * u[t[1]] + b[2] * u[t[2]] + cache_.shift[e * rule.size() + q],
                                     clamp_, dummy);
        const double c = rule[q].weight * scale * std::cosh(arg);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) m[i][j] += c * b[i] * b[j];
      }
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) trip.emplace_back(t[i], t[j], m[i][j]);
    }
    SparseMatrix n(a_.rows(), a_.cols());
    n.setFromTriplets(trip.begin(), trip.end());
    return a_ + n;
  }

 private:
  const TriMesh& mesh_;
  const ProblemSpec& spec_;
  NonlinearCache cache_;
  double clamp_;
  SparseMatrix a_;
  Eigen::VectorXd load_;
};

double free_norm(const Eigen::VectorXd& r, const Reduction& red) {
  double s = 0.0;
  for (int i : red.free) s += r[i] * r[i];
  return std::sqrt(s);
}

}  // namespace

NonlinearResult solve_semilinear(MeshPtr mesh, const ProblemSpec& spec, const InterfaceFlux& y_g,
                                 const NonlinearShift& shift, const BoundaryData& bc, const SolverOptions& opt,
                                 const ScalarFieldP1* initial) {
  spec.validate();
  shift.check_mesh(*mesh);
  y_g.check_mesh(*mesh);
  const int n = mesh->num_vertices();
  std::vector<char> fixed(n, 0);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  if (initial) {
    if (initial->mesh_ptr() != mesh) throw InvalidArgument("initial guess lives on a different mesh");
    u = initial->values();
  }
  for (int v = 0; v < n; ++v)
    if (mesh->on_outer_boundary(v)) {
      fixed[v] = 1;
      u[v] = bc.outer(mesh->vertex(v));
    }
  const Reduction red = make_reduction(fixed);
  if (red.free.empty()) throw SolverError("singular system: no interior unknowns");

  const SemilinearSystem sys(*mesh, spec, y_g, shift, opt.clamp);
  NonlinearResult res{ScalarFieldP1::zero(mesh), 0, 0, {}, {}, 0.0};
  Evaluation ev = sys.evaluate(u);
  double r = free_norm(ev.residual, red);
  const double r0 = r;
  res.residuals.push_back(r);
  res.energies.push_back(ev.energy);
  // a warm start may begin near the solution; measure against the cold-start residual as well
  double r_ref = r0;
  if (initial) {
    Eigen::VectorXd cold = Eigen::VectorXd::Zero(n);
    for (int v = 0; v < n; ++v)
      if (fixed[v]) cold[v] = u[v];
    r_ref = std::max(r0, free_norm(sys.evaluate(cold).residual, red));
  }
  const double target = opt.newton_tol * r_ref;

  bool polished = false;
  int it = 0;
  while (r > 0.0 && it < opt.max_newton) {
    const bool converged = r <= target;
    if (converged && polished) break;
    const SparseMatrix jr = reduce(sys.jacobian(u), red);
    Eigen::VectorXd rhs(red.free.size());
    for (std::size_t i = 0; i < red.free.size(); ++i) rhs[i] = -ev.residual[red.free[i]];
    const Eigen::VectorXd d = pcg(jr, rhs, opt);

    bool accepted = false;
    double step = 1.0;
    for (int h = 0; h <= opt.max_halvings; ++h, step *= 0.5) {
      Eigen::VectorXd trial = u;
      for (std::size_t i = 0; i < red.free.size(); ++i) trial[red.free[i]] += step * d[i];
      Evaluation tv = sys.evaluate(trial);
      const double rt = free_norm(tv.residual, red);
      const bool energy_ok = !std::isfinite(ev.energy) || ev.saturated > 0 ||
                             tv.energy <= ev.energy + 1e-13 * std::max(ev.energy_scale, tv.energy_scale);
      if (rt < r && energy_ok) {
        u = std::move(trial);
        ev = std::move(tv);
        r = rt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    ++it;
    res.residuals.push_back(r);
    res.energies.push_back(ev.energy);
    if (converged) polished = true;
  }
  if (r > target)
    throw SolverError("Newton stagnation: residual " + std::to_string(r) + " vs initial " + std::to_string(r0) +
                      " after " + std::to_string(it) + " iterations");

  res.iterations = it;
  res.saturated = ev.saturated;
  if (sys.cache().max_abs_shift > 0.0) res.linf_ratio = u.cwiseAbs().maxCoeff() / sys.cache().max_abs_shift;
  res.field = ScalarFieldP1(mesh, std::move(u), std::move(fixed));
  return res;
}

NonlinearResult solve_nonlinear_component(MeshPtr mesh, const ProblemSpec& spec, const NonlinearShift& shift,
                                          const SolverOptions& opt, const ScalarFieldP1* initial) {
  return solve_semilinear(std::move(mesh), spec, InterfaceFlux{}, shift, BoundaryData::constant(0.0), opt, initial);
}

NonlinearResult solve_direct_regular(MeshPtr mesh, const ProblemSpec& spec, const FluxFieldRT0& flux_h,
                                     const SolverOptions& opt, const ScalarFieldP1* initial) {
  if (flux_h.mesh_ptr() != mesh) throw InvalidArgument("harmonic flux is defined on a different mesh");
  const InterfaceFlux y_g =
      InterfaceFlux::three_term(spec, std::make_shared<const FluxFieldRT0>(flux_h), opt.length_scale);
  return solve_semilinear(std::move(mesh), spec, y_g, NonlinearShift{}, BoundaryData::constant(spec.g), opt, initial);
}

// ---------------------------------------------------------------------------
// energies and norms

EnergyValue energy_functional(const ScalarFieldP1& v, const ProblemSpec& spec, const InterfaceFlux& y_g,
                              const NonlinearShift* shift, double clamp) {
  const TriMesh& mesh = v.mesh();
  y_g.check_mesh(mesh);
  if (shift) shift->check_mesh(mesh);
  EnergyValue out;
  double quad = 0.0, lin = 0.0, nl = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const Vec2 g = v.gradient(k);
    quad += 0.5 * spec.eps(mesh.region(k)) * mesh.area(k) * norm2(g);
    if (y_g.kind() != InterfaceFlux::Kind::None) lin += dot(y_g.integral(mesh, k), g);
  }
  if (shift) {
    const NonlinearCache cache(mesh, spec, shift);
    const auto& rule = *cache.rule;
    for (std::size_t e = 0; e < cache.elements.size(); ++e) {
      const int k = cache.elements[e];
      double s = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double arg = clamp_arg(v.at(k, rule[q].bary) + cache.shift[e * rule.size() + q], clamp, out.saturated);
        s += rule[q].weight * std::cosh(arg);
      }
      nl += spec.ks2 * mesh.area(k) * s;
    }
  }
  out.value = quad - lin + nl;
  return out;
}

double energy_J_linear(const ScalarFieldP1& v, const ProblemSpec& spec, const InterfaceFlux& y_g) {
  return energy_functional(v, spec, y_g, nullptr).value;
}

double energy_J_nonlinear(const ScalarFieldP1& v, const ProblemSpec& spec, const NonlinearShift& shift) {
  const EnergyValue e = energy_functional(v, spec, InterfaceFlux{}, &shift);
  return e.saturated > 0 ? std::numeric_limits<double>::infinity() : e.value;
}

double energy_J_direct(const ScalarFieldP1& v, const ProblemSpec& spec, const InterfaceFlux& y_g) {
  const NonlinearShift none;
  const EnergyValue e = energy_functional(v, spec, y_g, &none);
  return e.saturated > 0 ? std::numeric_limits<double>::infinity() : e.value;
}

double l2_norm(const ScalarFieldP1& v) {
  const TriMesh& mesh = v.mesh();
  double s = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const Triangle& t = mesh.triangle(k);
    const double a = v[t[0]], b = v[t[1]], c = v[t[2]];
    s += mesh.area(k) / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a);
  }
  return std::sqrt(s);
}

double energy_norm(const ScalarFieldP1& v, RegionValues eps) {
  const TriMesh& mesh = v.mesh();
  double s = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) s += eps(mesh.region(k)) * mesh.area(k) * norm2(v.gradient(k));
  return std::sqrt(s);
}

double dual_norm(const FluxFieldRT0& y, RegionValues eps) {
  const TriMesh& mesh = y.mesh();
  const auto& rule = triangle_rule(2);
  double s = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    if (!y.active(k)) continue;
    const auto p = mesh.corners(k);
    double e = 0.0;
    for (const QuadPoint& q : rule) e += q.weight * norm2(y.value(k, map_point(p, q.bary)));
    s += mesh.area(k) * e / eps(mesh.region(k));
  }
  return std::sqrt(s);
}

double linf_nodal(const ScalarFieldP1& v) { return v.values().size() ? v.values().cwiseAbs().maxCoeff() : 0.0; }

double cen_norm(const ScalarFieldP1& v, const FluxFieldRT0& y, RegionValues eps) {
  if (v.mesh_ptr() != y.mesh_ptr()) throw InvalidArgument("field and flux live on different meshes");
  return std::hypot(energy_norm(v, eps), dual_norm(y, eps));
}

}  // namespace pbe
