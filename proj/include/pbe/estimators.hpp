#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pbe/fem.hpp"
#include "pbe/problem.hpp"
#include "pbe/rt0.hpp"

namespace pbe {

// Elementwise squares of the eps^{-1}-weighted norm of eps grad v - y_g - y.
std::vector<double> dual_gap_squares(const ScalarFieldP1& v, RegionValues eps, const InterfaceFlux& y_g,
                                     const FluxFieldRT0* y);

struct HarmonicBound {
  double primal = 0.0;    // C_F ||div T|| + ||grad u - T||
  double majorant = 0.0;  // sqrt(||grad u - T||^2 + C_F^2 ||div T||^2)
  double gap = 0.0;
  double div_norm = 0.0;
  std::vector<double> indicators;
};

HarmonicBound majorant_H(const ScalarFieldP1& u_h, const FluxFieldRT0& t_flux, double c_f_molecule);

struct LinearBound {
  double majorant = 0.0;
  double gap = 0.0;
  double div_norm = 0.0;
  double div_term = 0.0;  // C_F ||div y0|| / sqrt(eps_min)
  std::vector<double> indicators;
};

LinearBound majorant_L(const ScalarFieldP1& v, const FluxFieldRT0& y0, const ProblemSpec& spec,
                       const InterfaceFlux& y_g, double c_f);

struct MinorantValue {
  double value = 0.0;
  bool flagged = false;  // negative radicand clamped to zero
};

MinorantValue minorant_from_energies(double j_v, double j_w);
// Both fields must carry the same outer data; w may live on a refinement of v's mesh.
MinorantValue minorant_L(const ScalarFieldP1& v, const ScalarFieldP1& w, const ProblemSpec& spec,
                         const InterfaceFlux& y_g_v, const InterfaceFlux& y_g_w);

struct DfTerm {
  double total = 0.0;
  std::vector<double> per_element;
  double scale = 0.0;  // integral of the absolute values of the pieces
  long saturated = 0;
};

/** Compound term of the nonlinear majorant; div must vanish on molecule elements. */
DfTerm df_term(const ScalarFieldP1& v, const NonlinearShift& w, std::span<const double> div, const ProblemSpec& spec,
               double molecule_tol = 0.0, double clamp = 700.0);
// Pointwise integrand, for tests and single-element evaluations.
double df_integrand(double k2, double v, double w, double div);

struct NonlinearBound {
  double majorant = 0.0;      // M
  double energy_bound = 0.0;  // sqrt(2) M
  double gap = 0.0;
  double df = 0.0;
  double cen_lower = 0.0;  // gap / sqrt(2)
  std::vector<double> indicators;
  long saturated = 0;
};

NonlinearBound nonlinear_bound_from_parts(double gap, double df);
NonlinearBound majorant_N(const ScalarFieldP1& v, const FluxFieldRT0& y_n, const NonlinearShift& w,
                          const ProblemSpec& spec);
// y* = y_g + y0 with the three-term y_g; D_F with w = 0.
NonlinearBound majorant_direct(const ScalarFieldP1& v, const FluxFieldRT0& y0, const ProblemSpec& spec,
                               const InterfaceFlux& y_g);

struct CenBounds {
  double lower = 0.0;
  double upper = 0.0;
};

CenBounds cen_bounds_linear(double gap, double div_norm, double majorant_l, double c_f, double eps_min);

enum class Stage { Harmonic, Linear, Nonlinear, Direct };
const char* to_string(Stage s);

/** \brief One adaptive level of one stage. */
struct LevelRecord {
  Stage stage = Stage::Linear;
  int level = 0;
  int elements = 0;
  double l2_norm = 0.0;
  double energy_norm = 0.0;
  double dual_gap = 0.0;
  double majorant = 0.0;      // M plain
  double energy_bound = 0.0;  // bound on the energy error (M, or sqrt(2) M)
  std::optional<double> minorant;
  double energy = 0.0;
  double div_norm = 0.0;
  double df = 0.0;
  double alpha = 0.0;
  double cen_lower = 0.0;
  double cen_upper = 0.0;
  double flux_dual_norm = 0.0;
  long saturated = 0;
  int newton_iterations = 0;
  // energy-error bounds of this iterate with the flux of another level s
  std::map<int, double> cross_bound;
  // lower bounds between this iterate and the iterate of level k
  std::map<int, double> cross_minorant;
  // flux dual norm of this level's flux is carried above; CEN with other fluxes:
  std::map<int, double> cross_cen;
};

struct RelativeBounds {
  std::optional<double> re_up, re_low, rcen_up, rcen_low, p_rel, pre;
  std::array<int, 4> ijks{};
};

RelativeBounds relative_bounds(std::span<const LevelRecord> records, int i, int j, int k, int s, Stage stage);

enum class Pipeline { TwoTerm, ThreeTermSplit, ThreeTermDirect };
const char* to_string(Pipeline p);

struct OverallComponents {
  std::optional<double> m_h;       // harmonic majorant
  std::optional<double> m_l;       // linear majorant
  std::optional<double> m_n;       // nonlinear majorant (plain)
  std::optional<double> m_direct;  // direct majorant (plain)
};

struct OverallBound {
  double bound = 0.0;
  std::optional<double> relative;
};

OverallBound overall_error(Pipeline p, const OverallComponents& c, double eps_m,
                           std::optional<double> solution_energy_norm = std::nullopt);

}  // namespace pbe
