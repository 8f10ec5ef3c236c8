#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "pbe/error.hpp"
#include "support.hpp"

using namespace pbe;
using pbe::testing::square_mesh;

namespace {

ProblemSpec salt(double ks2 = 10.0) {
  ProblemSpec s;
  s.eps_m = s.eps_s = 3.0;
  s.ks2 = ks2;
  return s;
}

}  // namespace

TEST_SUITE("fem") {
  TEST_CASE("stiffness matrix is symmetric with zero row sums") {
    const TriMesh m = build_disk_in_square(6.0, {0.0, 0.0}, 1.5, 0.8);
    const SparseMatrix a = assemble_stiffness(m, {2.0, 80.0});
    const SparseMatrix at = a.transpose();
    CHECK((a - at).norm() <= 1e-12 * a.norm());
    const Eigen::VectorXd rows = a * Eigen::VectorXd::Ones(m.num_vertices());
    CHECK(rows.cwiseAbs().maxCoeff() <= 1e-10 * a.norm());
    const std::array<Vec2, 3> flat = {Vec2{0, 0}, Vec2{1, 1}, Vec2{2, 2}};
    CHECK_THROWS_AS(element_stiffness(flat, 1.0), GeometryError);
  }

  TEST_CASE("linear boundary data is reproduced exactly") {
    const MeshPtr m = square_mesh(6, 2.0);
    ProblemSpec s = salt(0.0);
    BoundaryData bc{[](Vec2 x) { return 1.0 + x.x - 2.0 * x.y; }};
    const ScalarFieldP1 u = solve_linear_component(m, s, Eigen::VectorXd::Zero(m->num_vertices()), bc);
    for (int v = 0; v < m->num_vertices(); ++v) CHECK(u[v] == doctest::Approx(bc.outer(m->vertex(v))).epsilon(1e-10));
    CHECK_THROWS_AS(solve_linear_component(m, s, Eigen::VectorXd::Zero(3), bc), InvalidArgument);
  }

  TEST_CASE("harmonic correction of a centred charge is constant") {
    // G is radial about the centre, so the harmonic extension of -G from the circle is the constant -G(R)
    const TriMesh full = build_disk_in_square(10.0, {0.0, 0.0}, 2.0, 0.7);
    const SubMesh sub = extract_region(full, Region::Molecule);
    ProblemSpec s;
    s.eps_m = 2.0;
    s.charge_scale = 200.0;
    s.charges = {{{0.0, 0.0, 0.0}, 1}};
    const ScalarFieldP1 u = solve_harmonic(sub.mesh, s);
    const double expect = -GreenFunction(s).value(Vec2{2.0, 0.0});
    for (int v = 0; v < sub.mesh->num_vertices(); ++v) CHECK(u[v] == doctest::Approx(expect).epsilon(1e-9));
    CHECK_THROWS_AS(solve_harmonic(std::make_shared<const TriMesh>(full), s), InvalidArgument);
  }

  TEST_CASE("Newton converges with monotone energy") {
    const MeshPtr m = square_mesh(12, 2.0);
    const ProblemSpec s = salt();
    const ScalarFieldP1 w = ScalarFieldP1::interpolate(m, [](Vec2 x) { return 3.0 * std::sin(x.x) + x.y; });
    const NonlinearShift shift(w, nullptr);
    SolverOptions opt;
    const NonlinearResult r = solve_nonlinear_component(m, s, shift, opt);
    CHECK(r.iterations > 0);
    CHECK(r.saturated == 0);
    CHECK(r.residuals.back() <= opt.newton_tol * r.residuals.front());
    for (std::size_t i = 1; i < r.energies.size(); ++i) CHECK(r.energies[i] <= r.energies[i - 1] + 1e-12);
    for (int v = 0; v < m->num_vertices(); ++v)
      if (m->on_outer_boundary(v)) CHECK(r.field[v] == 0.0);
    // the discrete minimiser: small perturbations raise the energy
    const double j0 = energy_J_nonlinear(r.field, s, shift);
    std::mt19937_64 rng(7);
    for (int t = 0; t < 5; ++t) {
      const ScalarFieldP1 d = pbe::testing::random_field(m, rng, 1e-3, true);
      CHECK(energy_J_nonlinear(r.field + d, s, shift) >= j0);
    }
    // a warm start from the solution needs no further work
    const NonlinearResult again = solve_nonlinear_component(m, s, shift, opt, &r.field);
    CHECK(again.iterations <= 1);
    CHECK((again.field.values() - r.field.values()).norm() <= 1e-10 * r.field.values().norm());
  }

  TEST_CASE("saturated cosh arguments are reported") {
    const MeshPtr m = square_mesh(4);
    const ProblemSpec s = salt();
    const ScalarFieldP1 w = ScalarFieldP1::interpolate(m, [](Vec2) { return 800.0; });
    const NonlinearShift shift(w, nullptr);
    CHECK(energy_J_nonlinear(ScalarFieldP1::zero(m), s, shift) == std::numeric_limits<double>::infinity());
    const EnergyValue e = energy_functional(ScalarFieldP1::zero(m), s, InterfaceFlux{}, &shift);
    CHECK(e.saturated > 0);
  }

  TEST_CASE("prolongation is exact for piecewise linears") {
    const MeshPtr coarse = std::make_shared<const TriMesh>(build_disk_in_square(6.0, {0.0, 0.0}, 1.5, 1.0));
    auto f = [](Vec2 x) { return 0.3 * x.x - 1.7 * x.y + 2.0; };
    const ScalarFieldP1 uc = ScalarFieldP1::interpolate(coarse, f);
    const MeshPtr fine = std::make_shared<const TriMesh>(refine(*coarse, std::vector<int>{0, 3, 9, 11}));
    const ScalarFieldP1 uf = prolong(uc, fine);
    for (int v = 0; v < fine->num_vertices(); ++v) CHECK(uf[v] == doctest::Approx(f(fine->vertex(v))).epsilon(1e-13));
    CHECK(energy_norm(uf, {2.0, 80.0}) == doctest::Approx(energy_norm(uc, {2.0, 80.0})).epsilon(1e-12));
    CHECK_THROWS_AS(prolong(uf, coarse), InvalidArgument);
  }

  TEST_CASE("norms") {
    const MeshPtr m = square_mesh(5, 1.0);
    const ScalarFieldP1 one = ScalarFieldP1::interpolate(m, [](Vec2) { return 1.0; });
    CHECK(l2_norm(one) == doctest::Approx(1.0).epsilon(1e-13));
    const ScalarFieldP1 x = ScalarFieldP1::interpolate(m, [](Vec2 p) { return p.x; });
    CHECK(energy_norm(x, RegionValues::uniform(4.0)) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(linf_nodal(3.0 * x - one) == doctest::Approx(2.0));
    const FluxFieldRT0 y = interpolate_rt0(m, [](Vec2) { return Vec2{1.0, 0.0}; });
    CHECK(dual_norm(y, RegionValues::uniform(4.0)) == doctest::Approx(0.5).epsilon(1e-13));
    // combined norm: hypot of the energy norm and the flux dual norm
    CHECK(cen_norm(x, y, RegionValues::uniform(1.0)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
  }
}
