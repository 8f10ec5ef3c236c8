#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "pbe/config.hpp"
#include "pbe/driver.hpp"
#include "pbe/fem.hpp"
#include "pbe/flux.hpp"
#include "pbe/mesh.hpp"
#include "pbe/quadrature.hpp"

namespace pbe::testing {

// n x n squares of [x0, x0+side]^2, each cut along one diagonal, counter-clockwise.
inline MeshPtr square_mesh(int n, double side = 1.0, double x0 = 0.0, Region region = Region::Solvent) {
  std::vector<Vec2> v;
  std::vector<Triangle> t;
  const double h = side / n;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.push_back({x0 + i * h, x0 + j * h});
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      // right angle first so the hypotenuse is the refinement edge
      t.push_back({b, c, a});
      t.push_back({d, a, c});
    }
  std::vector<Region> r(t.size(), region);
  return std::make_shared<const TriMesh>(std::move(v), std::move(t), std::move(r));
}

// Dielectric and ionic data used across the disk tests.
inline RunConfig disk_config(Pipeline p, int charges = 1) {
  RunConfig cfg;
  cfg.problem.eps_m = 2.0;
  cfg.problem.eps_s = 80.0;
  cfg.problem.ks2 = 10.0;
  cfg.problem.charge_scale = 200.0;
  cfg.geometry = {10.0, {0.0, 0.0}, 2.0};
  cfg.mesh_h = 1.0;
  cfg.pipeline = p;
  cfg.theta = 0.5;
  cfg.max_levels = 4;
  cfg.freeze_level = 3;
  cfg.harmonic_levels = 3;
  cfg.emit_csv = cfg.emit_vtk = cfg.emit_summary = false;
  const std::vector<Charge> all = {{{0.0, 0.0, 0.0}, 1}, {{0.7, 0.4, 0.0}, -1}, {{-0.5, -0.6, 0.0}, 1}};
  if (charges == 2) cfg.problem.charges = {{{0.6, 0.0, 0.0}, 1}, {{-0.6, 0.0, 0.0}, 1}};
  else cfg.problem.charges.assign(all.begin(), all.begin() + charges);
  return cfg;
}

inline std::vector<Vec2> element_flux(const ScalarFieldP1& v, RegionValues eps) {
  const TriMesh& m = v.mesh();
  std::vector<Vec2> out(m.num_triangles());
  for (int k = 0; k < m.num_triangles(); ++k) out[k] = eps(m.region(k)) * v.gradient(k);
  return out;
}

inline ScalarFieldP1 random_field(MeshPtr mesh, std::mt19937_64& rng, double amp, bool zero_boundary) {
  std::uniform_real_distribution<double> d(-amp, amp);
  Eigen::VectorXd v(mesh->num_vertices());
  for (int i = 0; i < mesh->num_vertices(); ++i)
    v[i] = zero_boundary && mesh->on_outer_boundary(i) ? 0.0 : d(rng);
  return ScalarFieldP1(std::move(mesh), std::move(v));
}

}  // namespace pbe::testing
