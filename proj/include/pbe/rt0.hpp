#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "pbe/mesh.hpp"

namespace pbe {

enum class Support : std::uint8_t { All, Molecule };

/** \brief Lowest-order Raviart-Thomas field, one normal flux per global edge.
 *
 * On triangle K the basis function of local edge i is sign(K,i) (x - p_i) / (2|K|).
 * With Support::Molecule the field lives on the molecule triangles only and
 * evaluates to zero elsewhere.
 */
class FluxFieldRT0 {
 public:
  FluxFieldRT0(MeshPtr mesh, Eigen::VectorXd edge_flux, Support support = Support::All);
  static FluxFieldRT0 zero(MeshPtr mesh, Support support = Support::All);

  const TriMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const Eigen::VectorXd& coefficients() const { return flux_; }
  Support support() const { return support_; }
  bool active(int k) const { return support_ == Support::All || mesh_->region(k) == Region::Molecule; }

  Vec2 value(int k, const Vec2& x) const;
  Vec2 centroid_value(int k) const { return value(k, mesh_->centroid(k)); }
  double divergence(int k) const { return div_[k]; }
  const std::vector<double>& divergence() const { return div_; }
  // Outward flux through local edge i of K.
  double outward_flux(int k, int i) const { return mesh_->edge_sign(k, i) * flux_[mesh_->triangle_edge(k, i)]; }

 private:
  MeshPtr mesh_;
  Eigen::VectorXd flux_;
  Support support_;
  std::vector<double> div_;
};

std::vector<double> divergence(const FluxFieldRT0& y);

// Canonical interpolant: edge fluxes of f by three-point Gauss quadrature.
FluxFieldRT0 interpolate_rt0(MeshPtr mesh, const std::function<Vec2(Vec2)>& f, Support support = Support::All);

// Exact transfer to a mesh refined from y's mesh (lineage must point back to it).
FluxFieldRT0 prolong(const FluxFieldRT0& y, MeshPtr fine);

// Embed a field on a region sub-mesh into the parent mesh.
FluxFieldRT0 lift_from_submesh(const FluxFieldRT0& sub, const SubMesh& map, MeshPtr full);
FluxFieldRT0 restrict_to_submesh(const FluxFieldRT0& full, const SubMesh& map);

FluxFieldRT0 operator+(const FluxFieldRT0& a, const FluxFieldRT0& b);
FluxFieldRT0 operator-(const FluxFieldRT0& a, const FluxFieldRT0& b);

}  // namespace pbe
