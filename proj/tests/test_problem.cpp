#include <doctest.h>

#include <Eigen/SparseCholesky>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "pbe/error.hpp"
#include "pbe/problem.hpp"
#include "support.hpp"

using namespace pbe;
using pbe::testing::square_mesh;

namespace {

ProblemSpec two_charges() {
  ProblemSpec s;
  s.eps_m = 2.0;
  s.charge_scale = 3.0;
  s.charges = {{{0.3, -0.2, 0.0}, 2}, {{-1.0, 0.5, 0.0}, -1}};
  return s;
}

// smallest Dirichlet eigenvalue of the P1 Laplacian by inverse iteration
double discrete_friedrichs(const TriMesh& m) {
  const int n = m.num_vertices();
  SparseMatrix k = assemble_stiffness(m, RegionValues::uniform(1.0));
  std::vector<Eigen::Triplet<double>> mt;
  for (int e = 0; e < m.num_triangles(); ++e) {
    const Triangle& t = m.triangle(e);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) mt.emplace_back(t[i], t[j], m.area(e) * (i == j ? 2.0 : 1.0) / 12.0);
  }
  SparseMatrix mass(n, n);
  mass.setFromTriplets(mt.begin(), mt.end());
  std::vector<int> pos(n, -1), free;
  for (int v = 0; v < n; ++v)
    if (!m.on_outer_boundary(v)) {
      pos[v] = static_cast<int>(free.size());
      free.push_back(v);
    }
  auto reduce = [&](const SparseMatrix& a) {
    std::vector<Eigen::Triplet<double>> t;
    for (int c = 0; c < a.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(a, c); it; ++it)
        if (pos[it.row()] >= 0 && pos[it.col()] >= 0) t.emplace_back(pos[it.row()], pos[it.col()], it.value());
    SparseMatrix r(free.size(), free.size());
    r.setFromTriplets(t.begin(), t.end());
    return r;
  };
  const SparseMatrix kr = reduce(k), mr = reduce(mass);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(kr);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(free.size());
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    x = ldlt.solve(mr * x);
    x /= std::sqrt(x.dot(mr * x));
    lambda = x.dot(kr * x);
  }
  return 1.0 / std::sqrt(lambda);
}

}  // namespace

TEST_SUITE("problem") {
  TEST_CASE("Green function values and gradients in 2D") {
    const ProblemSpec s = two_charges();
    const GreenFunction g(s);
    const Vec2 x{1.2, 0.7};
    double expect = 0.0;
    for (const Charge& c : s.charges)
      expect += c.valence * std::log(std::hypot(x.x - c.position.x, x.y - c.position.y));
    expect *= -s.charge_scale / (2.0 * std::numbers::pi * s.eps_m);
    CHECK(g.value(x) == doctest::Approx(expect).epsilon(1e-14));
    const double h = 1e-6;
    const Vec2 grad = g.gradient(x);
    CHECK(grad.x == doctest::Approx((g.value(Vec2{x.x + h, x.y}) - g.value(Vec2{x.x - h, x.y})) / (2 * h)).epsilon(1e-7));
    CHECK(grad.y == doctest::Approx((g.value(Vec2{x.x, x.y + h}) - g.value(Vec2{x.x, x.y - h})) / (2 * h)).epsilon(1e-7));
    CHECK_THROWS_AS(g.value(Vec2{0.3, -0.2}), SingularPointError);
    CHECK_THROWS_AS(g.gradient(Vec2{-1.0, 0.5}), SingularPointError);
  }

  TEST_CASE("Green function in 3D") {
    ProblemSpec s;
    s.dimension = 3;
    s.eps_m = 4.0;
    s.charges = {{{0.0, 0.0, 1.0}, 1}};
    const std::vector<Vec3> pts = {{0.0, 0.0, 3.0}, {1.0, 2.0, -1.0}};
    const GreenSample gs = eval_G(s, pts);
    CHECK(gs.values[0] == doctest::Approx(1.0 / (4.0 * std::numbers::pi * 4.0 * 2.0)));
    CHECK(gs.gradients[0].z == doctest::Approx(-1.0 / (4.0 * std::numbers::pi * 4.0 * 4.0)));
    CHECK(gs.values[1] == doctest::Approx(1.0 / (4.0 * std::numbers::pi * 4.0 * 3.0)));
  }

  TEST_CASE("Green function solves the point-charge equation weakly") {
    // integral of eps_m grad G . grad phi over the support of a bump phi around the first charge,
    // in polar coordinates centred at that charge so the integrand stays bounded
    const ProblemSpec s = two_charges();
    const GreenFunction g(s);
    const Vec2 x0{0.3, -0.2}, c{0.1, 0.0};
    const double radius = 0.8;
    auto phi_grad = [&](Vec2 x) {
      const Vec2 d = x - c;
      const double t = 1.0 - norm2(d) / (radius * radius);
      return (-6.0 * t * t / (radius * radius)) * d;
    };
    const auto gl = gauss_legendre_01(40);
    double integral = 0.0;
    for (const auto& [ut, wt] : gl) {
      for (int sector = 0; sector < 16; ++sector) {
        const double th = 2.0 * std::numbers::pi * (sector + ut) / 16.0;
        const Vec2 dir{std::cos(th), std::sin(th)};
        // distance from x0 along dir to the circle |x - c| = radius
        const Vec2 q = x0 - c;
        const double b = dot(q, dir);
        const double rho_max = -b + std::sqrt(b * b - norm2(q) + radius * radius);
        for (const auto& [ur, wr] : gl) {
          const double rho = rho_max * ur;
          const Vec2 x = x0 + rho * dir;
          integral += wt * wr * (2.0 * std::numbers::pi / 16.0) * rho_max * rho * s.eps_m * dot(g.gradient(x), phi_grad(x));
        }
      }
    }
    const double phi0 = std::pow(1.0 - norm2(x0 - c) / (radius * radius), 3);
    CHECK(integral == doctest::Approx(s.charge_scale * 2 * phi0).epsilon(1e-10));
  }

  TEST_CASE("Friedrichs bounds") {
    CHECK(friedrichs_bound(Shape::Square, 10.0, 2) == doctest::Approx(10.0 * std::sqrt(2.0) / (2.0 * std::numbers::pi)));
    CHECK(friedrichs_bound(Shape::Cube, 3.0, 3) == doctest::Approx(3.0 * std::sqrt(3.0) / (3.0 * std::numbers::pi)));
    CHECK(friedrichs_bound(Shape::Disk, 2.0, 2) == doctest::Approx(2.0 / 2.4048255577));
    CHECK_THROWS_AS(friedrichs_bound(Shape::Disk, 2.0, 3), InvalidArgument);
    CHECK_THROWS_AS(friedrichs_bound(Shape::Square, -1.0, 2), InvalidArgument);

    // Rayleigh-Ritz eigenvalues lie above the exact ones, so the discrete constant approaches from below
    const double cs = discrete_friedrichs(*square_mesh(24, 2.0));
    const double cf = friedrichs_bound(Shape::Square, 2.0, 2);
    CHECK(cs <= cf);
    CHECK(cs >= 0.99 * cf);
    const TriMesh full = build_disk_in_square(6.0, {0.0, 0.0}, 1.5, 0.15);
    const double cd = discrete_friedrichs(*extract_region(full, Region::Molecule).mesh);
    const double cfd = friedrichs_bound(Shape::Disk, 1.5, 2);
    CHECK(cd <= cfd);
    CHECK(cd >= 0.98 * cfd);
  }

  TEST_CASE("problem data validation") {
    ProblemSpec s;
    CHECK_NOTHROW(s.validate());
    s.eps_m = 0.0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s = {};
    s.ks2 = -1.0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s = {};
    s.charge_scale = 0.0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s = {};
    s.charges = {{{1.9, 0.0, 0.0}, 1}};
    CHECK_THROWS_AS(s.validate_geometry({10.0, {0.0, 0.0}, 2.0}, 0.2), InvalidArgument);
    CHECK_NOTHROW(s.validate_geometry({10.0, {0.0, 0.0}, 2.0}, 0.05));
    s.charges = {{{2.5, 0.0, 0.0}, 1}};
    CHECK_THROWS_AS(s.validate_geometry({10.0, {0.0, 0.0}, 2.0}, 0.0), InvalidArgument);
    CHECK(s.eps(Region::Molecule) == 2.0);
    CHECK(s.k2(Region::Molecule) == 0.0);
  }

  TEST_CASE("charge files") {
    const auto dir = std::filesystem::temp_directory_path() / "pbe_charge_test";
    std::filesystem::create_directories(dir);
    const auto good = (dir / "good.txt").string();
    std::ofstream(good) << "# x y valence\n0.5 0.25 1\n\n-0.5 0 0.1 -2  # with z\n";
    const auto charges = read_charges(good);
    REQUIRE(charges.size() == 2);
    CHECK(charges[0].valence == 1);
    CHECK(charges[0].position.y == 0.25);
    CHECK(charges[1].position.z == 0.1);
    CHECK(charges[1].valence == -2);
    const auto frac = (dir / "frac.txt").string();
    std::ofstream(frac) << "0 0 1.5\n";
    CHECK_THROWS_AS(read_charges(frac), IoError);
    const auto shortline = (dir / "short.txt").string();
    std::ofstream(shortline) << "0 1\n";
    CHECK_THROWS_AS(read_charges(shortline), IoError);
    CHECK_THROWS_AS(read_charges((dir / "missing.txt").string()), IoError);
  }

  TEST_CASE("interface fluxes and load vectors") {
    const TriMesh m = build_disk_in_square(10.0, {0.0, 0.0}, 2.0, 1.0);
    ProblemSpec s = two_charges();
    s.eps_s = 80.0;
    const InterfaceFlux y2 = InterfaceFlux::two_term(s, 10.0);
    const GreenFunction g(s, 10.0);
    for (int k = 0; k < m.num_triangles(); ++k) {
      const Vec2 c = m.centroid(k);
      const Vec2 v = y2.value(m, k, c);
      if (m.region(k) == Region::Molecule) {
        CHECK(norm(v) == 0.0);
      } else {
        const Vec2 expect = (s.eps_m - s.eps_s) * g.gradient(c);
        CHECK(norm(v - expect) <= 1e-14 * norm(expect));
      }
    }
    const Eigen::VectorXd load = load_vector(m, y2);
    for (int v = 0; v < m.num_vertices(); ++v)
      if (m.on_outer_boundary(v)) CHECK(load[v] == 0.0);
    CHECK((load - interface_load_2term(m, s, 10.0)).norm() == 0.0);
    CHECK(load.norm() > 0.0);
    CHECK(InterfaceFlux{}.degree(Region::Solvent) == 2);
    CHECK(load_vector(m, InterfaceFlux{}).norm() == 0.0);
    CHECK_THROWS_AS(InterfaceFlux::three_term(s, nullptr), InvalidArgument);
  }
}
