#pragma once

#include <Eigen/Core>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pbe/geometry.hpp"
#include "pbe/mesh.hpp"
#include "pbe/quadrature.hpp"
#include "pbe/rt0.hpp"

namespace pbe {

struct Charge {
  Vec3 position;
  int valence = 0;
};

/** \brief Dimensionless coefficients and charges. */
struct ProblemSpec {
  double eps_m = 2.0;
  double eps_s = 80.0;
  double ks2 = 0.0;
  double charge_scale = 1.0;
  std::vector<Charge> charges;
  double g = 0.0;
  int dimension = 2;

  double eps(Region r) const { return r == Region::Molecule ? eps_m : eps_s; }
  double k2(Region r) const { return r == Region::Molecule ? 0.0 : ks2; }
  double eps_min() const { return eps_m < eps_s ? eps_m : eps_s; }

  void validate() const;
  // Charges strictly inside the disk and at least `clearance` away from its boundary.
  void validate_geometry(const DiskInSquare& geometry, double clearance) const;
};

std::vector<Charge> read_charges(const std::string& path);

/** \brief Coulomb potential of the charges in the molecule dielectric. */
class GreenFunction {
 public:
  explicit GreenFunction(const ProblemSpec& spec, double length_scale = 1.0);

  bool empty() const { return charges_.empty(); }
  double value(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
  double value(const Vec3& x) const;
  Vec3 gradient(const Vec3& x) const;

 private:
  void check(double r) const;

  std::vector<Charge> charges_;
  double coef_;
  int dimension_;
  double singular_radius_;
};

struct GreenSample {
  std::vector<double> values;
  std::vector<Vec3> gradients;
};

GreenSample eval_G(const ProblemSpec& spec, std::span<const Vec3> points, double length_scale = 1.0);

enum class Shape { Cube, Square, Disk };
double friedrichs_bound(Shape shape, double size, int dimension);

/** \brief Interface part y_g of the admissible fluxes.
 *
 * two_term:   (eps_m - eps_s) grad G on the solvent, 0 on the molecule.
 * three_term: -eps_m T on the molecule, eps_m grad G on the solvent.
 */
class InterfaceFlux {
 public:
  enum class Kind { None, TwoTerm, ThreeTerm };

  InterfaceFlux() = default;
  static InterfaceFlux two_term(const ProblemSpec& spec, double length_scale = 1.0);
  static InterfaceFlux three_term(const ProblemSpec& spec, std::shared_ptr<const FluxFieldRT0> flux_h,
                                  double length_scale = 1.0);

  Kind kind() const { return kind_; }
  // Quadrature degree adequate for products with P1 gradients.
  int degree(Region r) const;
  void check_mesh(const TriMesh& mesh) const;
  Vec2 value(const TriMesh& mesh, int k, const Vec2& x) const;
  Vec2 integral(const TriMesh& mesh, int k) const;

 private:
  Kind kind_ = Kind::None;
  double eps_m_ = 1.0;
  double coef_solvent_ = 0.0;
  std::shared_ptr<const GreenFunction> green_;
  std::shared_ptr<const FluxFieldRT0> flux_h_;
};

// Load vector with entries i = integral of y_g . grad phi_i; zero on outer boundary nodes.
Eigen::VectorXd load_vector(const TriMesh& mesh, const InterfaceFlux& y_g);
Eigen::VectorXd interface_load_2term(const TriMesh& mesh, const ProblemSpec& spec, double length_scale = 1.0);
Eigen::VectorXd interface_load_3term(const TriMesh& mesh, const ProblemSpec& spec, const FluxFieldRT0& flux_h,
                                     double length_scale = 1.0);

}  // namespace pbe
