#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pbe/error.hpp"
#include "pbe/estimators.hpp"
#include "support.hpp"

using namespace pbe;
using pbe::testing::square_mesh;

namespace {

double total(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

LevelRecord record(int level, double bound, double energy_norm, double gap = 0.0) {
  LevelRecord r;
  r.level = level;
  r.energy_bound = r.majorant = bound;
  r.energy_norm = energy_norm;
  r.dual_gap = gap;
  return r;
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("linear majorant vanishes on an exact pair") {
    const MeshPtr m = square_mesh(4, 2.0);
    ProblemSpec s;
    s.eps_m = s.eps_s = 2.0;
    const ScalarFieldP1 v = ScalarFieldP1::interpolate(m, [](Vec2 x) { return x.x + 3.0 * x.y; });
    const FluxFieldRT0 y = interpolate_rt0(m, [](Vec2) { return Vec2{2.0, 6.0}; });
    const LinearBound b = majorant_L(v, y, s, InterfaceFlux{}, 1.0);
    CHECK(b.majorant < 1e-12);
    // with a divergence-free flux the bound is the dual gap alone, and the indicators partition it
    const FluxFieldRT0 y1 = interpolate_rt0(m, [](Vec2) { return Vec2{1.0, 1.0}; });
    const LinearBound b1 = majorant_L(v, y1, s, InterfaceFlux{}, 1.0);
    CHECK(b1.div_norm < 1e-13);
    CHECK(b1.majorant == doctest::Approx(b1.gap).epsilon(1e-12));
    double sq = 0.0;
    for (double e : b1.indicators) sq += e * e;
    CHECK(sq == doctest::Approx(b1.gap * b1.gap).epsilon(1e-12));
    // 0.5 * integral of |(1, 5)|^2 over the square of area 4
    CHECK(b1.gap == doctest::Approx(std::sqrt(0.5 * 26.0 * 4.0)).epsilon(1e-12));
  }

  TEST_CASE("harmonic majorant") {
    const MeshPtr m = square_mesh(4, 1.0, 0.0, Region::Molecule);
    const ScalarFieldP1 u = ScalarFieldP1::interpolate(m, [](Vec2 x) { return x.x * 0.5; });
    const FluxFieldRT0 t = interpolate_rt0(m, [](Vec2 x) { return Vec2{0.5 * x.x, 0.5 * x.y}; });
    const HarmonicBound b = majorant_H(u, t, 0.3);
    CHECK(b.div_norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.majorant == doctest::Approx(std::hypot(b.gap, 0.3)).epsilon(1e-12));
    CHECK(b.primal == doctest::Approx(b.gap + 0.3).epsilon(1e-12));
    CHECK(b.majorant <= b.primal);
  }

  TEST_CASE("minorant from energies") {
    CHECK(minorant_from_energies(-122925209.65, -128430576.31).value == doctest::Approx(3318.24).epsilon(3e-6));
    const MinorantValue same = minorant_from_energies(1.5, 1.5);
    CHECK(same.value == 0.0);
    CHECK_FALSE(same.flagged);
    const MinorantValue bad = minorant_from_energies(1.0, 2.0);
    CHECK(bad.value == 0.0);
    CHECK(bad.flagged);
  }

  TEST_CASE("linear minorant checks boundary classes") {
    const MeshPtr m = square_mesh(3);
    ProblemSpec s;
    const ScalarFieldP1 a = ScalarFieldP1::interpolate(m, [](Vec2 x) { return x.x * x.y; });
    const ScalarFieldP1 b = ScalarFieldP1::interpolate(m, [](Vec2 x) { return x.x * x.y + 1.0; });
    CHECK(minorant_L(a, a, s, InterfaceFlux{}, InterfaceFlux{}).value == 0.0);
    CHECK_THROWS_AS(minorant_L(a, b, s, InterfaceFlux{}, InterfaceFlux{}), InvalidArgument);
    CHECK_THROWS_AS(minorant_L(a, ScalarFieldP1::zero(square_mesh(2)), s, InterfaceFlux{}, InterfaceFlux{}),
                    InvalidArgument);
  }

  TEST_CASE("compound term values") {
    CHECK(df_integrand(10.0, 0.0, 0.0, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(df_integrand(10.0, 1.0, 0.0, 0.0) == doctest::Approx(10.0 * (std::cosh(1.0) - 1.0)).epsilon(1e-14));
    CHECK(df_integrand(10.0, 1.0, 0.0, 0.0) == doctest::Approx(5.43081).epsilon(1e-6));
    CHECK(std::abs(df_integrand(10.0, 1.0, 0.0, 10.0 * std::sinh(1.0))) < 1e-12);
    CHECK(std::abs(df_integrand(4.0, 0.3, -0.8, 4.0 * std::sinh(-0.5))) < 1e-12);

    // one solvent element of unit area
    const std::vector<Vec2> pts = {{0, 0}, {std::sqrt(2.0), 0}, {0, std::sqrt(2.0)}};
    const MeshPtr m = std::make_shared<const TriMesh>(pts, std::vector<Triangle>{{0, 1, 2}},
                                                      std::vector<Region>{Region::Solvent});
    ProblemSpec s;
    s.ks2 = 10.0;
    const ScalarFieldP1 one = ScalarFieldP1::interpolate(m, [](Vec2) { return 1.0; });
    const std::vector<double> zero_div = {0.0};
    CHECK(df_term(one, NonlinearShift{}, zero_div, s).total == doctest::Approx(5.43081).epsilon(1e-6));
    const std::vector<double> matched = {10.0 * std::sinh(1.0)};
    CHECK(std::abs(df_term(one, NonlinearShift{}, matched, s).total) < 1e-12);
    const ScalarFieldP1 zero = ScalarFieldP1::zero(m);
    CHECK(df_term(zero, NonlinearShift{}, zero_div, s).total == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("compound term rejects divergence on the molecule") {
    const MeshPtr m = square_mesh(2, 1.0, 0.0, Region::Molecule);
    ProblemSpec s;
    std::vector<double> div(m->num_triangles(), 0.0);
    CHECK_NOTHROW(df_term(ScalarFieldP1::zero(m), NonlinearShift{}, div, s));
    div[3] = 0.5;
    try {
      df_term(ScalarFieldP1::zero(m), NonlinearShift{}, div, s);
      FAIL("expected a rejection");
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find("element 3") != std::string::npos);
    }
  }

  TEST_CASE("nonlinear bounds from reported parts") {
    const NonlinearBound t3 = nonlinear_bound_from_parts(24.8527, 1028.09 / 2.0);
    CHECK(t3.energy_bound == doctest::Approx(40.5678).epsilon(2e-6));
    const NonlinearBound t7 = nonlinear_bound_from_parts(61.558, 41.47 / 2.0);
    CHECK(t7.energy_bound == doctest::Approx(61.893).epsilon(2e-5));
    CHECK(t7.energy_bound >= t7.gap);
    CHECK(t7.cen_lower == doctest::Approx(61.558 / std::numbers::sqrt2));
  }

  TEST_CASE("error equality holds by construction") {
    const MeshPtr m = square_mesh(10, 2.0);
    ProblemSpec s;
    s.eps_m = s.eps_s = 3.0;
    s.ks2 = 5.0;
    const ScalarFieldP1 wf = ScalarFieldP1::interpolate(m, [](Vec2 x) { return std::cos(2.0 * x.x) + x.y; });
    const NonlinearShift w(wf, nullptr);
    const ScalarFieldP1 u = solve_nonlinear_component(m, s, w).field;
    const FluxFieldRT0 y = equilibrate_patchwise(m, pbe::testing::element_flux(u, RegionValues::dielectric(s)),
                                                 SourceMoments::sinh_source(u, s, w), RegionValues::dielectric(s));
    const NonlinearBound b = majorant_N(u, y, w, s);
    CHECK(b.df >= 0.0);
    CHECK(2.0 * b.majorant * b.majorant - b.gap * b.gap - 2.0 * b.df ==
          doctest::Approx(0.0).scale(b.gap * b.gap));
    double sq = 0.0;
    for (double e : b.indicators) sq += e * e;
    CHECK(sq == doctest::Approx(2.0 * b.majorant * b.majorant).epsilon(1e-10));
    CHECK(b.energy_bound == doctest::Approx(std::numbers::sqrt2 * b.majorant));
    // a worse iterate has a larger bound
    const NonlinearBound worse = majorant_N(0.5 * u, y, w, s);
    CHECK(worse.majorant > b.majorant);
  }

  TEST_CASE("combined energy norm bounds") {
    const CenBounds c = cen_bounds_linear(514.04, 1e-3, 514.05, 2.0, 2.0);
    CHECK(c.lower <= c.upper);
    CHECK((c.upper - c.lower) / c.upper < 1e-3);
    const CenBounds z = cen_bounds_linear(3.0, 0.0, 5.0, 2.0, 2.0);
    CHECK(z.lower == 3.0);
    CHECK(z.upper == 3.0);
    CHECK(cen_bounds_linear(1.0, 10.0, 10.0, 1.0, 1.0).lower == 0.0);
  }

  TEST_CASE("relative bounds") {
    std::vector<LevelRecord> recs = {record(0, 2000.0, 15000.0), record(2, 968.374, 16006.50, 900.0)};
    const RelativeBounds b = relative_bounds(recs, 2, 2, 2, 2, Stage::Linear);
    REQUIRE(b.re_up);
    CHECK(100.0 * *b.re_up == doctest::Approx(6.43946).epsilon(1e-6));
    CHECK(*b.re_low == 0.0);
    CHECK(*b.p_rel == doctest::Approx(900.0 / (std::numbers::sqrt2 * 16006.50)));
    CHECK(*b.pre == doctest::Approx(900.0 / 16006.50));
    // a flux from a level with no cross bound gives no value
    CHECK_FALSE(relative_bounds(recs, 2, 2, 2, 0, Stage::Linear).re_up);
    recs[1].cross_bound[0] = 1000.0;
    CHECK(relative_bounds(recs, 2, 2, 0, 2, Stage::Linear).re_up);
    // failed denominator condition is flagged, not thrown
    std::vector<LevelRecord> big = {record(0, 10.0, 5.0)};
    const RelativeBounds f = relative_bounds(big, 0, 0, 0, 0, Stage::Nonlinear);
    CHECK_FALSE(f.re_up);
    CHECK_THROWS_AS(relative_bounds(recs, 5, 5, 5, 5, Stage::Linear), InvalidArgument);

    std::vector<LevelRecord> n = {record(0, 192.502, 324.330, 155.122)};
    const RelativeBounds r0 = relative_bounds(n, 0, 0, 0, 0, Stage::Nonlinear);
    CHECK(100.0 * *r0.pre == doctest::Approx(47.828).epsilon(2e-5));
    CHECK(100.0 * *r0.p_rel == doctest::Approx(33.819).epsilon(3e-5));
    CHECK(100.0 * *r0.re_up == doctest::Approx(146.02).epsilon(1e-4));
  }

  TEST_CASE("overall error") {
    const OverallBound a = overall_error(Pipeline::TwoTerm, {std::nullopt, 968.37, 40.57 / std::numbers::sqrt2, {}},
                                         2.0, 16276.2);
    CHECK(a.bound == doctest::Approx(1977.31).epsilon(1e-9));
    CHECK(100.0 * *a.relative == doctest::Approx(12.15).epsilon(5e-4));
    const OverallBound d =
        overall_error(Pipeline::ThreeTermDirect, {43.085, {}, {}, 61.893 / std::numbers::sqrt2}, 2.0);
    CHECK(d.bound == doctest::Approx(122.824).epsilon(5e-6));
    CHECK_FALSE(d.relative);
    const OverallBound sp = overall_error(Pipeline::ThreeTermSplit, {1.0, 2.0, 3.0, {}}, 4.0);
    CHECK(sp.bound == doctest::Approx(4.0 + 4.0 + 3.0 * std::numbers::sqrt2));
    CHECK_THROWS_AS(overall_error(Pipeline::TwoTerm, {{}, 1.0, {}, {}}, 2.0), InvalidArgument);
    CHECK_THROWS_AS(overall_error(Pipeline::ThreeTermSplit, {{}, 1.0, 1.0, {}}, 2.0), InvalidArgument);
    CHECK_THROWS_AS(overall_error(Pipeline::ThreeTermDirect, {1.0, {}, {}, {}}, 2.0), InvalidArgument);
    CHECK(std::string(to_string(Pipeline::ThreeTermSplit)) == "3term_split");
    CHECK(std::string(to_string(Stage::Direct)) == "direct");
  }

  TEST_CASE("dual gap squares partition the global gap") {
    std::mt19937_64 rng(2);
    const MeshPtr m = std::make_shared<const TriMesh>(build_disk_in_square(6.0, {0.0, 0.0}, 1.5, 1.0));
    ProblemSpec s;
    s.eps_m = 2.0;
    s.eps_s = 80.0;
    s.charges = {{{0.2, 0.1, 0.0}, 1}};
    const ScalarFieldP1 v = pbe::testing::random_field(m, rng, 1.0, false);
    const auto g = dual_gap_squares(v, RegionValues::dielectric(s), InterfaceFlux::two_term(s), nullptr);
    for (double x : g) CHECK(x >= 0.0);
    // without flux or y_g the gap is the energy norm
    const auto e = dual_gap_squares(v, RegionValues::dielectric(s), InterfaceFlux{}, nullptr);
    CHECK(std::sqrt(total(e)) == doctest::Approx(energy_norm(v, RegionValues::dielectric(s))).epsilon(1e-12));
    CHECK_THROWS_AS(dual_gap_squares(v, RegionValues::uniform(1.0), InterfaceFlux{},
                                     std::make_unique<FluxFieldRT0>(FluxFieldRT0::zero(square_mesh(2))).get()),
                    InvalidArgument);
  }
}
