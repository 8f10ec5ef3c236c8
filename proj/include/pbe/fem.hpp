#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "pbe/mesh.hpp"
#include "pbe/problem.hpp"
#include "pbe/rt0.hpp"

namespace pbe {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct RegionValues {
  double molecule = 1.0;
  double solvent = 1.0;

  double operator()(Region r) const { return r == Region::Molecule ? molecule : solvent; }
  static RegionValues uniform(double v) { return {v, v}; }
  static RegionValues dielectric(const ProblemSpec& s) { return {s.eps_m, s.eps_s}; }
};

/** \brief Continuous piecewise-linear field with an optional Dirichlet mask. */
class ScalarFieldP1 {
 public:
  ScalarFieldP1(MeshPtr mesh, Eigen::VectorXd values, std::vector<char> fixed = {});
  static ScalarFieldP1 zero(MeshPtr mesh);
  static ScalarFieldP1 interpolate(MeshPtr mesh, const std::function<double(Vec2)>& f);

  const TriMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](int v) const { return values_[v]; }
  const std::vector<char>& fixed() const { return fixed_; }
  bool is_fixed(int v) const { return !fixed_.empty() && fixed_[v]; }

  double at(int k, const std::array<double, 3>& bary) const;
  Vec2 gradient(int k) const;

 private:
  MeshPtr mesh_;
  Eigen::VectorXd values_;
  std::vector<char> fixed_;
};

ScalarFieldP1 operator+(const ScalarFieldP1& a, const ScalarFieldP1& b);
ScalarFieldP1 operator-(const ScalarFieldP1& a, const ScalarFieldP1& b);
ScalarFieldP1 operator*(double s, const ScalarFieldP1& a);

// Exact transfer to a mesh refined (possibly several passes) from a's mesh.
ScalarFieldP1 prolong(const ScalarFieldP1& a, MeshPtr fine);
ScalarFieldP1 lift_from_submesh(const ScalarFieldP1& sub, const SubMesh& map, MeshPtr full);

Eigen::Matrix3d element_stiffness(const std::array<Vec2, 3>& p, double eps);
SparseMatrix assemble_stiffness(const TriMesh& mesh, RegionValues eps);

struct SolverOptions {
  double lin_tol = 1e-12;
  int max_lin_iter = 50000;
  double newton_tol = 1e-10;
  int max_newton = 30;
  int max_halvings = 20;
  double clamp = 700.0;
  double length_scale = 1.0;
};

/** Outer Dirichlet data, imposed by nodal interpolation. */
struct BoundaryData {
  std::function<double(Vec2)> outer;

  static BoundaryData constant(double g);
  // g - G for the two-term splitting.
  static BoundaryData two_term(const ProblemSpec& spec, double length_scale = 1.0);
};

/** \brief Shift w inside sinh(u + w): an optional P1 field plus, optionally, G. */
class NonlinearShift {
 public:
  NonlinearShift() = default;
  NonlinearShift(std::optional<ScalarFieldP1> field, std::shared_ptr<const GreenFunction> green);
  static NonlinearShift two_term(const ScalarFieldP1& u_linear, const ProblemSpec& spec, double length_scale = 1.0);
  static NonlinearShift three_term(const ScalarFieldP1& u_linear);

  double value(int k, const std::array<double, 3>& bary, const Vec2& x) const;
  bool is_zero() const { return !field_ && !green_; }
  const ScalarFieldP1* field() const { return field_ ? &*field_ : nullptr; }
  bool has_green() const { return green_ != nullptr; }
  void check_mesh(const TriMesh& mesh) const;

 private:
  std::optional<ScalarFieldP1> field_;
  std::shared_ptr<const GreenFunction> green_;
};

/** \brief Unconstrained-row linear solve A u = b with the masked values held fixed. */
Eigen::VectorXd solve_constrained(const SparseMatrix& a, const Eigen::VectorXd& b, const std::vector<char>& fixed,
                                  const Eigen::VectorXd& fixed_values, const SolverOptions& opt);

ScalarFieldP1 solve_harmonic(MeshPtr mesh_m, const ProblemSpec& spec, const SolverOptions& opt = {});
ScalarFieldP1 solve_linear_component(MeshPtr mesh, const ProblemSpec& spec, const Eigen::VectorXd& load,
                                     const BoundaryData& bc, const SolverOptions& opt = {});

struct NonlinearResult {
  ScalarFieldP1 field;
  int iterations = 0;
  long saturated = 0;  // clamped sinh arguments at the returned iterate
  std::vector<double> residuals;
  std::vector<double> energies;
  double linf_ratio = 0.0;  // max|u| / max over the solvent of |w|, 0 if w vanishes
};

NonlinearResult solve_nonlinear_component(MeshPtr mesh, const ProblemSpec& spec, const NonlinearShift& shift,
                                          const SolverOptions& opt = {}, const ScalarFieldP1* initial = nullptr);
NonlinearResult solve_direct_regular(MeshPtr mesh, const ProblemSpec& spec, const FluxFieldRT0& flux_h,
                                     const SolverOptions& opt = {}, const ScalarFieldP1* initial = nullptr);
// Shared Newton driver: a(u,v) + (k^2 sinh(u + w), v) = (y_g, grad v), u = bc on the outer boundary.
NonlinearResult solve_semilinear(MeshPtr mesh, const ProblemSpec& spec, const InterfaceFlux& y_g,
                                 const NonlinearShift& shift, const BoundaryData& bc, const SolverOptions& opt,
                                 const ScalarFieldP1* initial);

struct EnergyValue {
  double value = 0.0;
  long saturated = 0;
};

// (eps/2)|grad v|^2 - y_g . grad v, optionally + k^2 cosh(v + w).
EnergyValue energy_functional(const ScalarFieldP1& v, const ProblemSpec& spec, const InterfaceFlux& y_g,
                              const NonlinearShift* shift, double clamp = 700.0);
double energy_J_linear(const ScalarFieldP1& v, const ProblemSpec& spec, const InterfaceFlux& y_g);
// +infinity when a cosh argument had to be clamped.
double energy_J_nonlinear(const ScalarFieldP1& v, const ProblemSpec& spec, const NonlinearShift& shift);
double energy_J_direct(const ScalarFieldP1& v, const ProblemSpec& spec, const InterfaceFlux& y_g);

double l2_norm(const ScalarFieldP1& v);
double energy_norm(const ScalarFieldP1& v, RegionValues eps);
double dual_norm(const FluxFieldRT0& y, RegionValues eps);
double linf_nodal(const ScalarFieldP1& v);
double cen_norm(const ScalarFieldP1& v, const FluxFieldRT0& y, RegionValues eps);

}  // namespace pbe
