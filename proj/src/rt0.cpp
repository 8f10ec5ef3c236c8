#include "pbe/rt0.hpp"

#include <cmath>
#include <string>

#include "pbe/error.hpp"
#include "pbe/quadrature.hpp"

namespace pbe {

FluxFieldRT0::FluxFieldRT0(MeshPtr mesh, Eigen::VectorXd edge_flux, Support support)
    : mesh_(std::move(mesh)), flux_(std::move(edge_flux)), support_(support) {
  if (!mesh_) throw InvalidArgument("flux field needs a mesh");
  if (flux_.size() != mesh_->num_edges()) throw InvalidArgument("edge flux length differs from edge count");
  div_.assign(mesh_->num_triangles(), 0.0);
  for (int k = 0; k < mesh_->num_triangles(); ++k) {
    if (!active(k)) continue;
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += outward_flux(k, i);
    div_[k] = s / mesh_->area(k);
  }
}

FluxFieldRT0 FluxFieldRT0::zero(MeshPtr mesh, Support support) {
  const int n = mesh->num_edges();
  return FluxFieldRT0(std::move(mesh), Eigen::VectorXd::Zero(n), support);
}

Vec2 FluxFieldRT0::value(int k, const Vec2& x) const {
  if (!active(k)) return {};
  const Triangle& t = mesh_->triangle(k);
  const double s = 1.0 / (2.0 * mesh_->area(k));
  Vec2 out;
  for (int i = 0; i < 3; ++i) out += (outward_flux(k, i) * s) * (x - mesh_->vertex(t[i]));
  return out;
}

std::vector<double> divergence(const FluxFieldRT0& y) { return y.divergence(); }

namespace {

bool edge_in_support(const TriMesh& m, int e, Support support) {
  if (support == Support::All) return true;
  for (int k : m.edge_triangles(e))
    if (k >= 0 && m.region(k) == Region::Molecule) return true;
  return false;
}

}  // namespace

FluxFieldRT0 interpolate_rt0(MeshPtr mesh, const std::function<Vec2(Vec2)>& f, Support support) {
  static const auto gl = gauss_legendre_01(3);
  Eigen::VectorXd flux = Eigen::VectorXd::Zero(mesh->num_edges());
  for (int e = 0; e < mesh->num_edges(); ++e) {
    if (!edge_in_support(*mesh, e, support)) continue;
    const Vec2 a = mesh->vertex(mesh->edge(e)[0]);
    const Vec2 b = mesh->vertex(mesh->edge(e)[1]);
    const Vec2 n = mesh->edge_normal(e);
    double s = 0.0;
    for (const auto& [t, w] : gl) s += w * dot(f(a + t * (b - a)), n);
    flux[e] = s * mesh->edge_length(e);
  }
  return FluxFieldRT0(std::move(mesh), std::move(flux), support);
}

FluxFieldRT0 prolong(const FluxFieldRT0& y, MeshPtr fine) {
  const Lineage* lin = fine->lineage();
  if (!lin || lin->coarse_triangles != y.mesh().num_triangles() || lin->coarse_vertices != y.mesh().num_vertices())
    throw InvalidArgument("prolong: fine mesh is not refined from the field's mesh");
  Eigen::VectorXd flux = Eigen::VectorXd::Zero(fine->num_edges());
  for (int e = 0; e < fine->num_edges(); ++e) {
    int src = -1;
    for (int k : fine->edge_triangles(e))
      if (k >= 0 && y.active(lin->parent[k])) {
        src = k;
        break;
      }
    if (src < 0) continue;
    const Vec2 mid = 0.5 * (fine->vertex(fine->edge(e)[0]) + fine->vertex(fine->edge(e)[1]));
    flux[e] = fine->edge_length(e) * dot(y.value(lin->parent[src], mid), fine->edge_normal(e));
  }
  return FluxFieldRT0(std::move(fine), std::move(flux), y.support());
}

FluxFieldRT0 lift_from_submesh(const FluxFieldRT0& sub, const SubMesh& map, MeshPtr full) {
  if (sub.mesh_ptr() != map.mesh) throw InvalidArgument("lift: flux is not on the given sub-mesh");
  const TriMesh& sm = *map.mesh;
  Eigen::VectorXd flux = Eigen::VectorXd::Zero(full->num_edges());
  for (int k = 0; k < sm.num_triangles(); ++k) {
    const int kf = map.triangle_map[k];
    for (int i = 0; i < 3; ++i)
      flux[full->triangle_edge(kf, i)] = full->edge_sign(kf, i) * sub.outward_flux(k, i);
  }
  const Region r = sm.region(0);
  return FluxFieldRT0(std::move(full), std::move(flux), r == Region::Molecule ? Support::Molecule : Support::All);
}

FluxFieldRT0 restrict_to_submesh(const FluxFieldRT0& full, const SubMesh& map) {
  const TriMesh& sm = *map.mesh;
  Eigen::VectorXd flux = Eigen::VectorXd::Zero(sm.num_edges());
  for (int k = 0; k < sm.num_triangles(); ++k) {
    const int kf = map.triangle_map[k];
    for (int i = 0; i < 3; ++i) flux[sm.triangle_edge(k, i)] = sm.edge_sign(k, i) * full.outward_flux(kf, i);
  }
  return FluxFieldRT0(map.mesh, std::move(flux), Support::All);
}

namespace {

void same_space(const FluxFieldRT0& a, const FluxFieldRT0& b) {
  if (a.mesh_ptr() != b.mesh_ptr() || a.support() != b.support())
    throw InvalidArgument("flux fields live on different meshes");
}

}  // namespace

FluxFieldRT0 operator+(const FluxFieldRT0& a, const FluxFieldRT0& b) {
  same_space(a, b);
  return FluxFieldRT0(a.mesh_ptr(), a.coefficients() + b.coefficients(), a.support());
}

FluxFieldRT0 operator-(const FluxFieldRT0& a, const FluxFieldRT0& b) {
  same_space(a, b);
  return FluxFieldRT0(a.mesh_ptr(), a.coefficients() - b.coefficients(), a.support());
}

}  // namespace pbe
