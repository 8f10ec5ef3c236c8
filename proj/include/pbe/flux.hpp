#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "pbe/fem.hpp"
#include "pbe/problem.hpp"
#include "pbe/rt0.hpp"

namespace pbe {

// Elementwise mean of a vector field by quadrature of the given degree.
std::vector<Vec2> project_piecewise_constant(const TriMesh& mesh, const std::function<Vec2(int, Vec2)>& f,
                                             int degree = kPolyDegree);
// On already piecewise-constant data the projection is the identity.
std::vector<Vec2> project_piecewise_constant(std::span<const Vec2> raw);

/** \brief Source f of the equilibration, through its hat-function moments.
 *
 * hat[k][i] = integral over K of f * lambda_i. The reconstructed divergence on K is
 * the elementwise mean (sum of the three moments) / |K|.
 */
struct SourceMoments {
  std::vector<std::array<double, 3>> hat;

  static SourceMoments zero(const TriMesh& mesh);
  static SourceMoments from_constants(const TriMesh& mesh, std::span<const double> per_element);
  // f = k^2 sinh(u + w) on the solvent, zero on the molecule, same rule as the Newton residual.
  static SourceMoments sinh_source(const ScalarFieldP1& u, const ProblemSpec& spec, const NonlinearShift& w,
                                   double clamp = 700.0);
  std::vector<double> mean(const TriMesh& mesh) const;
};

SourceMoments operator+(const SourceMoments& a, const SourceMoments& b);

struct EquilibrationOptions {
  // tolerated compatibility defect per patch, relative to the patch data
  double defect_tol = 1e-6;
};

/** \brief Vertex-patch equilibration of a piecewise-constant flux.
 *
 * Produces y with div y = mean source on every element and minimal
 * eps^{-1}-weighted correction on each patch. Vertices on the boundary of
 * the mesh carry no compatibility condition.
 */
FluxFieldRT0 equilibrate_patchwise(MeshPtr mesh, std::span<const Vec2> numerical_flux, const SourceMoments& source,
                                   RegionValues eps = RegionValues::uniform(1.0),
                                   const EquilibrationOptions& opt = {});
FluxFieldRT0 equilibrate_patchwise(MeshPtr mesh, std::span<const Vec2> numerical_flux,
                                   std::span<const double> target_div, RegionValues eps = RegionValues::uniform(1.0),
                                   const EquilibrationOptions& opt = {});

struct LinearMajorantResult {
  FluxFieldRT0 y0;
  double alpha = 1.0;
  double majorant = 0.0;
  double a_term = 0.0;  // (C_F^2 / eps_min) ||div y0||^2
  double b_term = 0.0;  // squared dual gap
  double div_norm = 0.0;
  double gap = 0.0;
};

/** Alternating minimisation of the alpha-form majorant over RT0. */
LinearMajorantResult minimize_majorant_linear(const ScalarFieldP1& v, const ProblemSpec& spec,
                                              const InterfaceFlux& y_g, double c_f, int sweeps = 2);

// min over alpha > 0 of (1 + alpha) a + (1 + 1/alpha) b, and its minimiser.
double alpha_form(double a, double b, double alpha);
double optimal_alpha(double a, double b);

}  // namespace pbe
