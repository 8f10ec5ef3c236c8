#include "pbe/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pbe/error.hpp"
#include "pbe/quadrature.hpp"

namespace pbe {

std::vector<double> dual_gap_squares(const ScalarFieldP1& v, RegionValues eps, const InterfaceFlux& y_g,
                                     const FluxFieldRT0* y) {
  const TriMesh& mesh = v.mesh();
  y_g.check_mesh(mesh);
  if (y && y->mesh_ptr() != v.mesh_ptr()) throw InvalidArgument("field and flux live on different meshes");
  std::vector<double> out(mesh.num_triangles());
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const Region r = mesh.region(k);
    const double e = eps(r);
    const Vec2 g = e * v.gradient(k);
    const auto p = mesh.corners(k);
    double s = 0.0;
    for (const QuadPoint& q : triangle_rule(std::max(2, y_g.degree(r)))) {
      const Vec2 x = map_point(p, q.bary);
      Vec2 d = g - y_g.value(mesh, k, x);
      if (y) d -= y->value(k, x);
      s += q.weight * norm2(d);
    }
    out[k] = mesh.area(k) * s / e;
  }
  return out;
}

namespace {

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

double div_l2(const FluxFieldRT0& y) {
  double s = 0.0;
  for (int k = 0; k < y.mesh().num_triangles(); ++k) s += y.mesh().area(k) * y.divergence(k) * y.divergence(k);
  return std::sqrt(s);
}

// natural size of elementwise divergences of y, for roundoff-level tests
double div_scale(const FluxFieldRT0& y) {
  double s = 0.0;
  for (int k = 0; k < y.mesh().num_triangles(); ++k) {
    double a = 0.0;
    for (int i = 0; i < 3; ++i) a += std::abs(y.outward_flux(k, i));
    s = std::max(s, a / y.mesh().area(k));
  }
  return s;
}

}  // namespace

HarmonicBound majorant_H(const ScalarFieldP1& u_h, const FluxFieldRT0& t_flux, double c_f_molecule) {
  HarmonicBound b;
  b.indicators = dual_gap_squares(u_h, RegionValues::uniform(1.0), InterfaceFlux{}, &t_flux);
  b.gap = std::sqrt(sum(b.indicators));
  for (double& x : b.indicators) x = std::sqrt(x);
  b.div_norm = div_l2(t_flux);
  b.primal = c_f_molecule * b.div_norm + b.gap;
  b.majorant = std::hypot(b.gap, c_f_molecule * b.div_norm);
  return b;
}

LinearBound majorant_L(const ScalarFieldP1& v, const FluxFieldRT0& y0, const ProblemSpec& spec,
                       const InterfaceFlux& y_g, double c_f) {
  LinearBound b;
  b.indicators = dual_gap_squares(v, RegionValues::dielectric(spec), y_g, &y0);
  b.gap = std::sqrt(sum(b.indicators));
  for (double& x : b.indicators) x = std::sqrt(x);
  b.div_norm = div_l2(y0);
  b.div_term = c_f * b.div_norm / std::sqrt(spec.eps_min());
  b.majorant = b.div_term + b.gap;
  return b;
}

MinorantValue minorant_from_energies(double j_v, double j_w) {
  const double r = 2.0 * (j_v - j_w);
  if (r < 0.0) return {0.0, true};
  return {std::sqrt(r), false};
}

MinorantValue minorant_L(const ScalarFieldP1& v, const ScalarFieldP1& w, const ProblemSpec& spec,
                         const InterfaceFlux& y_g_v, const InterfaceFlux& y_g_w) {
  int shared = 0;
  if (v.mesh_ptr() == w.mesh_ptr()) {
    shared = v.mesh().num_vertices();
  } else if (const Lineage* lin = w.mesh().lineage(); lin && lin->coarse_vertices == v.mesh().num_vertices()) {
    shared = lin->coarse_vertices;
  } else {
    throw InvalidArgument("minorant: fields live on unrelated meshes");
  }
  for (int i = 0; i < shared; ++i)
    if (v.mesh().on_outer_boundary(i) && std::abs(v[i] - w[i]) > 1e-10 * (1.0 + std::abs(v[i])))
      throw InvalidArgument("minorant: mismatched boundary classes");
  return minorant_from_energies(energy_J_linear(v, spec, y_g_v), energy_J_linear(w, spec, y_g_w));
}

double df_integrand(double k2, double v, double w, double div) {
  const double t = div / k2;
  return k2 * std::cosh(v + w) + div * (std::asinh(t) - w) - std::hypot(div, k2) - div * v;
}

DfTerm df_term(const ScalarFieldP1& v, const NonlinearShift& w, std::span<const double> div, const ProblemSpec& spec,
               double molecule_tol, double clamp) {
  const TriMesh& mesh = v.mesh();
  w.check_mesh(mesh);
  if (static_cast<int>(div.size()) != mesh.num_triangles()) throw InvalidArgument("one divergence per element expected");
  DfTerm out;
  out.per_element.assign(mesh.num_triangles(), 0.0);
  const auto& rule = triangle_rule(kNonlinearDegree);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const double k2 = spec.k2(mesh.region(k));
    const double d = div[k];
    if (k2 == 0.0) {
      if (std::abs(d) > molecule_tol)
        throw InvalidArgument("flux divergence nonzero on element " + std::to_string(k) + " where k^2 vanishes");
      continue;
    }
    const auto p = mesh.corners(k);
    const double t = d / k2;
    const double ash = std::asinh(t);
    const double hyp = std::hypot(d, k2);
    double s = 0.0, a = 0.0;
    for (const QuadPoint& q : rule) {
      const double vv = v.at(k, q.bary);
      const double ww = w.value(k, q.bary, map_point(p, q.bary));
      double arg = vv + ww;
      if (std::abs(arg) > clamp) {
        ++out.saturated;
        arg = std::clamp(arg, -clamp, clamp);
      }
      const double c = k2 * std::cosh(arg);
      s += q.weight * (c + d * (ash - ww) - hyp - d * vv);
      a += q.weight * (c + std::abs(d * ash) + std::abs(d * ww) + hyp + std::abs(d * vv));
    }
    out.per_element[k] = mesh.area(k) * s;
    out.scale += mesh.area(k) * a;
  }
  out.total = sum(out.per_element);
  return out;
}

NonlinearBound nonlinear_bound_from_parts(double gap, double df) {
  NonlinearBound b;
  b.gap = gap;
  b.df = df;
  b.majorant = std::sqrt(std::max(0.0, 0.5 * (gap * gap + 2.0 * df)));
  b.energy_bound = std::numbers::sqrt2 * b.majorant;
  b.cen_lower = gap / std::numbers::sqrt2;
  return b;
}

namespace {

NonlinearBound assemble_nonlinear(std::vector<double> gap_sq, const DfTerm& df) {
  NonlinearBound b = nonlinear_bound_from_parts(std::sqrt(sum(gap_sq)), df.total);
  b.saturated = df.saturated;
  b.indicators.resize(gap_sq.size());
  for (std::size_t k = 0; k < gap_sq.size(); ++k)
    b.indicators[k] = std::sqrt(std::max(0.0, gap_sq[k] + 2.0 * df.per_element[k]));
  return b;
}

}  // namespace

NonlinearBound majorant_N(const ScalarFieldP1& v, const FluxFieldRT0& y_n, const NonlinearShift& w,
                          const ProblemSpec& spec) {
  auto gap_sq = dual_gap_squares(v, RegionValues::dielectric(spec), InterfaceFlux{}, &y_n);
  const DfTerm df = df_term(v, w, y_n.divergence(), spec, 1e-10 * div_scale(y_n));
  return assemble_nonlinear(std::move(gap_sq), df);
}

NonlinearBound majorant_direct(const ScalarFieldP1& v, const FluxFieldRT0& y0, const ProblemSpec& spec,
                               const InterfaceFlux& y_g) {
  auto gap_sq = dual_gap_squares(v, RegionValues::dielectric(spec), y_g, &y0);
  const DfTerm df = df_term(v, NonlinearShift{}, y0.divergence(), spec, 1e-10 * div_scale(y0));
  return assemble_nonlinear(std::move(gap_sq), df);
}

CenBounds cen_bounds_linear(double gap, double div_norm, double majorant_l, double c_f, double eps_min) {
  const double cross = 2.0 * c_f * div_norm / std::sqrt(eps_min) * majorant_l;
  return {std::sqrt(std::max(0.0, gap * gap - cross)), std::sqrt(gap * gap + cross)};
}

const char* to_string(Stage s) {
  switch (s) {
    case Stage::Harmonic: return "harmonic";
    case Stage::Linear: return "linear";
    case Stage::Nonlinear: return "nonlinear";
    case Stage::Direct: return "direct";
  }
  return "?";
}

const char* to_string(Pipeline p) {
  switch (p) {
    case Pipeline::TwoTerm: return "2term";
    case Pipeline::ThreeTermSplit: return "3term_split";
    case Pipeline::ThreeTermDirect: return "3term_direct";
  }
  return "?";
}

namespace {

const LevelRecord* find_level(std::span<const LevelRecord> recs, int level) {
  for (const LevelRecord& r : recs)
    if (r.level == level) return &r;
  return nullptr;
}

std::optional<double> bound_with(const LevelRecord& r, int s) {
  if (s == r.level) return r.energy_bound;
  if (auto it = r.cross_bound.find(s); it != r.cross_bound.end()) return it->second;
  return std::nullopt;
}

std::optional<double> cen_with(const LevelRecord& r, int s) {
  if (s == r.level) return std::hypot(r.energy_norm, r.flux_dual_norm);
  if (auto it = r.cross_cen.find(s); it != r.cross_cen.end()) return it->second;
  return std::nullopt;
}

std::optional<double> ratio(std::optional<double> num, std::optional<double> den) {
  if (!num || !den || !(*den > 0.0)) return std::nullopt;
  return *num / *den;
}

}  // namespace

RelativeBounds relative_bounds(std::span<const LevelRecord> records, int i, int j, int k, int s, Stage stage) {
  RelativeBounds out;
  out.ijks = {i, j, k, s};
  const LevelRecord* ri = find_level(records, i);
  const LevelRecord* rj = find_level(records, j);
  if (!ri || !rj) throw InvalidArgument("relative_bounds: requested level not in the record list");

  const std::optional<double> m_ik = bound_with(*ri, k);
  const std::optional<double> m_js = bound_with(*rj, s);
  const double e_j = rj->energy_norm;
  std::optional<double> lower_den, upper_den;
  if (m_js) {
    lower_den = e_j - *m_js;
    upper_den = e_j + *m_js;
  }
  out.re_up = ratio(m_ik, lower_den);
  if (ri->energy_norm > 0.0) {
    out.p_rel = ri->dual_gap / (std::numbers::sqrt2 * ri->energy_norm);
    out.pre = ri->dual_gap / ri->energy_norm;
  }

  switch (stage) {
    case Stage::Linear: {
      std::optional<double> minor;
      if (k == i) minor = 0.0;
      else if (auto it = ri->cross_minorant.find(k); it != ri->cross_minorant.end()) minor = it->second;
      out.re_low = ratio(minor, upper_den);
      const double r2 = std::numbers::sqrt2;
      out.rcen_up = ratio(ri->cen_upper, lower_den ? std::optional<double>(r2 * *lower_den) : std::nullopt);
      out.rcen_low = ratio(ri->cen_lower, upper_den ? std::optional<double>(r2 * *upper_den) : std::nullopt);
      break;
    }
    case Stage::Nonlinear:
    case Stage::Direct: {
      const std::optional<double> cen = cen_with(*rj, s);
      if (cen && m_js) {
        out.rcen_up = ratio(ri->energy_bound, *cen - *m_js);
        out.rcen_low = ratio(ri->dual_gap / std::numbers::sqrt2, *cen + *m_js);
      }
      break;
    }
    case Stage::Harmonic:
      break;
  }
  return out;
}

OverallBound overall_error(Pipeline p, const OverallComponents& c, double eps_m,
                           std::optional<double> solution_energy_norm) {
  auto need = [](const std::optional<double>& v, const char* what) {
    if (!v) throw InvalidArgument(std::string("overall_error: missing component ") + what);
    return *v;
  };
  OverallBound out;
  const double r2 = std::numbers::sqrt2;
  switch (p) {
    case Pipeline::TwoTerm:
      out.bound = 2.0 * need(c.m_l, "M_L") + r2 * need(c.m_n, "M_N");
      break;
    case Pipeline::ThreeTermSplit:
      out.bound = 2.0 * std::sqrt(eps_m) * need(c.m_h, "M_H") + 2.0 * need(c.m_l, "M_L") + r2 * need(c.m_n, "M_N");
      break;
    case Pipeline::ThreeTermDirect:
      out.bound = std::sqrt(eps_m) * need(c.m_h, "M_H") + r2 * need(c.m_direct, "M");
      break;
  }
  if (solution_energy_norm && *solution_energy_norm > 0.0) out.relative = out.bound / *solution_energy_norm;
  return out;
}

}  // namespace pbe
