#include "pbe/flux.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "pbe/error.hpp"
#include "pbe/quadrature.hpp"

namespace pbe {

std::vector<Vec2> project_piecewise_constant(const TriMesh& mesh, const std::function<Vec2(int, Vec2)>& f,
                                             int degree) {
  const auto& rule = triangle_rule(degree);
  std::vector<Vec2> out(mesh.num_triangles());
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto p = mesh.corners(k);
    Vec2 s;
    for (const QuadPoint& q : rule) s += q.weight * f(k, map_point(p, q.bary));
    out[k] = s;
  }
  return out;
}

std::vector<Vec2> project_piecewise_constant(std::span<const Vec2> raw) { return {raw.begin(), raw.end()}; }

// ---------------------------------------------------------------------------

SourceMoments SourceMoments::zero(const TriMesh& mesh) {
  return {std::vector<std::array<double, 3>>(mesh.num_triangles(), {0.0, 0.0, 0.0})};
}

SourceMoments SourceMoments::from_constants(const TriMesh& mesh, std::span<const double> per_element) {
  if (static_cast<int>(per_element.size()) != mesh.num_triangles())
    throw InvalidArgument("one divergence value per element expected");
  SourceMoments s = zero(mesh);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const double m = per_element[k] * mesh.area(k) / 3.0;
    s.hat[k] = {m, m, m};
  }
  return s;
}

SourceMoments SourceMoments::sinh_source(const ScalarFieldP1& u, const ProblemSpec& spec, const NonlinearShift& w,
                                         double clamp) {
  const TriMesh& mesh = u.mesh();
  w.check_mesh(mesh);
  SourceMoments s = zero(mesh);
  if (spec.ks2 == 0.0) return s;
  const auto& rule = triangle_rule(kNonlinearDegree);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    if (mesh.region(k) != Region::Solvent) continue;
    const auto p = mesh.corners(k);
    const double scale = spec.ks2 * mesh.area(k);
    for (const QuadPoint& q : rule) {
      const double arg = std::clamp(u.at(k, q.bary) + w.value(k, q.bary, map_point(p, q.bary)), -clamp, clamp);
      const double v = q.weight * scale * std::sinh(arg);
      for (int i = 0; i < 3; ++i) s.hat[k][i] += v * q.bary[i];
    }
  }
  return s;
}

std::vector<double> SourceMoments::mean(const TriMesh& mesh) const {
  std::vector<double> out(hat.size());
  for (std::size_t k = 0; k < hat.size(); ++k)
    out[k] = (hat[k][0] + hat[k][1] + hat[k][2]) / mesh.area(static_cast<int>(k));
  return out;
}

SourceMoments operator+(const SourceMoments& a, const SourceMoments& b) {
  if (a.hat.size() != b.hat.size()) throw InvalidArgument("source moments of different meshes");
  SourceMoments s = a;
  for (std::size_t k = 0; k < s.hat.size(); ++k)
    for (int i = 0; i < 3; ++i) s.hat[k][i] += b.hat[k][i];
  return s;
}

// ---------------------------------------------------------------------------

namespace {

// eps^{-1} integral of psi_i . psi_j with psi_i = (x - p_i) / (2|K|), outward orientation.
Eigen::Matrix3d local_rt0_mass(const std::array<Vec2, 3>& p, double area, double inv_eps) {
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      Vec2 si, sj;
      for (int l = 0; l < 3; ++l) {
        s += dot(p[l] - p[i], p[l] - p[j]);
        si += p[l] - p[i];
        sj += p[l] - p[j];
      }
      m(i, j) = inv_eps * (area / 12.0) * (s + dot(si, sj)) / (4.0 * area * area);
    }
  return m;
}

struct VertexPatches {
  std::vector<int> offset;
  std::vector<int> tris;

  explicit VertexPatches(const TriMesh& mesh) {
    offset.assign(mesh.num_vertices() + 1, 0);
    for (const Triangle& t : mesh.triangles())
      for (int v : t) ++offset[v + 1];
    for (int v = 0; v < mesh.num_vertices(); ++v) offset[v + 1] += offset[v];
    tris.resize(offset.back());
    std::vector<int> fill(offset.begin(), offset.end() - 1);
    for (int k = 0; k < mesh.num_triangles(); ++k)
      for (int v : mesh.triangle(k)) tris[fill[v]++] = k;
  }
};

}  // namespace

FluxFieldRT0 equilibrate_patchwise(MeshPtr mesh_ptr, std::span<const Vec2> sigma, const SourceMoments& source,
                                   RegionValues eps, const EquilibrationOptions& opt) {
  const TriMesh& mesh = *mesh_ptr;
  const int nt = mesh.num_triangles();
  if (static_cast<int>(sigma.size()) != nt || static_cast<int>(source.hat.size()) != nt)
    throw InvalidArgument("equilibration input sizes differ from the element count");

  // outward fluxes of the broken correction, per element and local edge
  std::vector<std::array<double, 3>> corr(nt, {0.0, 0.0, 0.0});
  std::vector<Eigen::Matrix3d> mass(nt);
  for (int k = 0; k < nt; ++k) mass[k] = local_rt0_mass(mesh.corners(k), mesh.area(k), 1.0 / eps(mesh.region(k)));

  const VertexPatches patches(mesh);
  struct Entry {
    int var = -1;
    double coef = 0.0;
    double constant = 0.0;
  };

  for (int a = 0; a < mesh.num_vertices(); ++a) {
    const int first = patches.offset[a];
    const int count = patches.offset[a + 1] - first;
    if (count == 0) continue;
    const bool interior = !mesh.on_outer_boundary(a);

    std::vector<int> edge_var;  // global edge id per variable
    auto var_of = [&](int e) {
      for (std::size_t i = 0; i < edge_var.size(); ++i)
        if (edge_var[i] == e) return static_cast<int>(i);
      edge_var.push_back(e);
      return static_cast<int>(edge_var.size()) - 1;
    };

    std::vector<std::array<Entry, 3>> entries(count);
    double scale = 0.0;
    for (int p = 0; p < count; ++p) {
      const int k = patches.tris[first + p];
      const Triangle& t = mesh.triangle(k);
      const int ia = t[0] == a ? 0 : t[1] == a ? 1 : 2;
      for (int i = 0; i < 3; ++i) {
        const int e = mesh.triangle_edge(k, i);
        const auto& adj = mesh.edge_triangles(e);
        Entry& en = entries[p][i];
        if (i == ia) {
          en = (adj[1] < 0 && !interior) ? Entry{var_of(e), 1.0, 0.0} : Entry{-1, 0.0, 0.0};
        } else if (adj[1] < 0) {
          en = {var_of(e), 1.0, 0.0};
        } else {
          const int k1 = adj[0], k2 = adj[1];
          int i1 = 0, i2 = 0;
          while (mesh.triangle_edge(k1, i1) != e) ++i1;
          while (mesh.triangle_edge(k2, i2) != e) ++i2;
          const Vec2 n1 = mesh.edge_sign(k1, i1) * mesh.edge_normal(e);
          const double jump = -0.5 * mesh.edge_length(e) * dot(sigma[k1] - sigma[k2], n1);
          scale += std::abs(jump);
          if (k == k1) en = {var_of(e), 1.0, 0.0};
          else en = {var_of(e), -1.0, jump};
        }
      }
    }

    const int nv = static_cast<int>(edge_var.size());
    const int nc = interior ? count - 1 : count;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nv + nc, nv + nc);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + nc);
    std::vector<double> row_rhs(count);
    std::vector<Eigen::VectorXd> rows(count, Eigen::VectorXd::Zero(nv));
    for (int p = 0; p < count; ++p) {
      const int k = patches.tris[first + p];
      const Triangle& t = mesh.triangle(k);
      const int ia = t[0] == a ? 0 : t[1] == a ? 1 : 2;
      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, nv);
      Eigen::Vector3d c = Eigen::Vector3d::Zero();
      for (int i = 0; i < 3; ++i) {
        const Entry& en = entries[p][i];
        if (en.var >= 0) b(i, en.var) = en.coef;
        c[i] = en.constant;
      }
      kkt.topLeftCorner(nv, nv) += b.transpose() * mass[k] * b;
      rhs.head(nv) -= b.transpose() * mass[k] * c;
      rows[p] = b.colwise().sum().transpose();
      row_rhs[p] = source.hat[k][ia] - c.sum();
      scale += std::abs(source.hat[k][ia]) + norm(sigma[k]) * std::sqrt(mesh.area(k));
    }
    for (int p = 0; p < nc; ++p) {
      kkt.block(nv + p, 0, 1, nv) = rows[p].transpose();
      kkt.block(0, nv + p, nv, 1) = rows[p];
      rhs[nv + p] = row_rhs[p];
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible())
      throw EquilibrationError("patch solve singular at vertex " + std::to_string(a));
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd z = sol.head(nv);
    if (interior) {
      const double defect = rows[count - 1].dot(z) - row_rhs[count - 1];
      if (std::abs(defect) > opt.defect_tol * scale + 1e-300)
      {
        char buf[64];
        std::snprintf(buf, sizeof buf, " (defect %.3g)", defect);
        throw EquilibrationError("compatibility violated on the patch of vertex " + std::to_string(a) + buf);
      }
    }
    for (int p = 0; p < count; ++p) {
      const int k = patches.tris[first + p];
      for (int i = 0; i < 3; ++i) {
        const Entry& en = entries[p][i];
        corr[k][i] += en.constant + (en.var >= 0 ? en.coef * z[en.var] : 0.0);
      }
    }
  }

  Eigen::VectorXd flux(mesh.num_edges());
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const int k = mesh.edge_triangles(e)[0];
    int i = 0;
    while (mesh.triangle_edge(k, i) != e) ++i;
    const Vec2 n = mesh.edge_normal(e);
    // sigma part in the global orientation plus the correction seen from k
    flux[e] = mesh.edge_length(e) * dot(sigma[k], n) + mesh.edge_sign(k, i) * corr[k][i];
  }
  return FluxFieldRT0(std::move(mesh_ptr), std::move(flux), Support::All);
}

FluxFieldRT0 equilibrate_patchwise(MeshPtr mesh, std::span<const Vec2> numerical_flux,
                                   std::span<const double> target_div, RegionValues eps,
                                   const EquilibrationOptions& opt) {
  const SourceMoments s = SourceMoments::from_constants(*mesh, target_div);
  return equilibrate_patchwise(std::move(mesh), numerical_flux, s, eps, opt);
}

// ---------------------------------------------------------------------------

double alpha_form(double a, double b, double alpha) { return (1.0 + alpha) * a + (1.0 + 1.0 / alpha) * b; }

double optimal_alpha(double a, double b) {
  if (a <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(b / a);
}

namespace {

double gap_squared(const ScalarFieldP1& v, const ProblemSpec& spec, const InterfaceFlux& y_g, const FluxFieldRT0& y) {
  const TriMesh& mesh = v.mesh();
  double total = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const Region r = mesh.region(k);
    const double e = spec.eps(r);
    const Vec2 g = e * v.gradient(k);
    const auto p = mesh.corners(k);
    double s = 0.0;
    for (const QuadPoint& q : triangle_rule(std::max(2, y_g.degree(r)))) {
      const Vec2 x = map_point(p, q.bary);
      s += q.weight * norm2(g - y_g.value(mesh, k, x) - y.value(k, x));
    }
    total += mesh.area(k) * s / e;
  }
  return total;
}

}  // namespace

LinearMajorantResult minimize_majorant_linear(const ScalarFieldP1& v, const ProblemSpec& spec,
                                              const InterfaceFlux& y_g, double c_f, int sweeps) {
  if (!(c_f > 0.0)) throw InvalidArgument("Friedrichs constant must be positive");
  if (sweeps < 1) throw InvalidArgument("at least one sweep required");
  const MeshPtr& mp = v.mesh_ptr();
  const TriMesh& mesh = *mp;
  y_g.check_mesh(mesh);
  const int ne = mesh.num_edges();
  const double c = c_f * c_f / spec.eps_min();

  std::vector<Eigen::Triplet<double>> tm, td;
  tm.reserve(9 * static_cast<std::size_t>(mesh.num_triangles()));
  td.reserve(9 * static_cast<std::size_t>(mesh.num_triangles()));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ne);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const Region r = mesh.region(k);
    const double e = spec.eps(r);
    const auto p = mesh.corners(k);
    const double area = mesh.area(k);
    const Eigen::Matrix3d m = local_rt0_mass(p, area, 1.0 / e);
    std::array<double, 3> sg;
    std::array<int, 3> ids;
    for (int i = 0; i < 3; ++i) {
      sg[i] = mesh.edge_sign(k, i);
      ids[i] = mesh.triangle_edge(k, i);
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        tm.emplace_back(ids[i], ids[j], sg[i] * sg[j] * m(i, j));
        td.emplace_back(ids[i], ids[j], sg[i] * sg[j] / area);
      }
    // integral of (grad v - y_g / eps) . psi_i
    const Vec2 gv = v.gradient(k);
    const Vec2 cen = mesh.centroid(k);
    for (int i = 0; i < 3; ++i) rhs[ids[i]] += sg[i] * 0.5 * dot(gv, cen - p[i]);
    if (y_g.kind() != InterfaceFlux::Kind::None) {
      const auto& rule = triangle_rule(y_g.degree(r) + 1);
      for (const QuadPoint& q : rule) {
        const Vec2 x = map_point(p, q.bary);
        const Vec2 yv = y_g.value(mesh, k, x);
        if (yv.x == 0.0 && yv.y == 0.0) continue;
        for (int i = 0; i < 3; ++i) rhs[ids[i]] -= sg[i] * q.weight * 0.5 * dot(yv, x - p[i]) / e;
      }
    }
  }
  SparseMatrix mass(ne, ne), divdiv(ne, ne);
  mass.setFromTriplets(tm.begin(), tm.end());
  divdiv.setFromTriplets(td.begin(), td.end());

  LinearMajorantResult res{FluxFieldRT0::zero(mp)};
  double alpha = 1.0;
  Eigen::SimplicialLDLT<SparseMatrix> solver;
  bool pattern = false;
  for (int s = 0; s < sweeps; ++s) {
    const SparseMatrix sys = mass + (alpha * c) * divdiv;
    if (!pattern) {
      solver.analyzePattern(sys);
      pattern = true;
    }
    solver.factorize(sys);
    if (solver.info() != Eigen::Success) throw SolverError("flux normal equations could not be factorised");
    res.y0 = FluxFieldRT0(mp, solver.solve(rhs));
    double dn = 0.0;
    for (int k = 0; k < mesh.num_triangles(); ++k) dn += mesh.area(k) * res.y0.divergence(k) * res.y0.divergence(k);
    res.div_norm = std::sqrt(dn);
    res.a_term = c * dn;
    res.b_term = gap_squared(v, spec, y_g, res.y0);
    if (res.a_term <= 0.0) {
      alpha = std::numeric_limits<double>::infinity();
      break;
    }
    alpha = std::clamp(std::sqrt(res.b_term / res.a_term), 1e-12, 1e12);
  }
  res.alpha = alpha;
  res.gap = std::sqrt(res.b_term);
  res.majorant = std::sqrt(res.a_term) + res.gap;
  return res;
}

}  // namespace pbe
