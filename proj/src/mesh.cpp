#include "pbe/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "pbe/error.hpp"

namespace pbe {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) { return 0.5 * cross(b - a, c - a); }

}  // namespace

const char* to_string(Region r) { return r == Region::Molecule ? "MOLECULE" : "SOLVENT"; }

const char* to_string(EdgeTag t) {
  switch (t) {
    case EdgeTag::Outer: return "OUTER";
    case EdgeTag::Interface: return "INTERFACE";
    default: return "NONE";
  }
}

TriMesh::TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles, std::vector<Region> regions,
                 std::shared_ptr<const Lineage> lineage)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      regions_(std::move(regions)),
      lineage_(std::move(lineage)) {
  const int nv = num_vertices();
  const int nt = num_triangles();
  if (static_cast<int>(regions_.size()) != nt) throw GeometryError("region tag count differs from triangle count");
  if (nt == 0) throw GeometryError("mesh has no triangles");

  areas_.resize(nt);
  triangle_edges_.resize(nt);
  std::unordered_map<std::uint64_t, int> lookup;
  lookup.reserve(static_cast<std::size_t>(nt) * 2);
  for (int k = 0; k < nt; ++k) {
    const Triangle& t = triangles_[k];
    for (int v : t)
      if (v < 0 || v >= nv) throw GeometryError("triangle " + std::to_string(k) + " references a missing vertex");
    areas_[k] = signed_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
    if (!(areas_[k] > 0.0))
      throw GeometryError("triangle " + std::to_string(k) + " has non-positive signed area");
    for (int i = 0; i < 3; ++i) {
      const int a = t[(i + 1) % 3];
      const int b = t[(i + 2) % 3];
      auto [it, inserted] = lookup.try_emplace(edge_key(a, b), num_edges());
      if (inserted) {
        edges_.push_back({std::min(a, b), std::max(a, b)});
        edge_triangles_.push_back({k, -1});
      } else {
        auto& adj = edge_triangles_[it->second];
        if (adj[1] != -1) throw GeometryError("edge shared by more than two triangles");
        const Triangle& o = triangles_[adj[0]];
        for (int j = 0; j < 3; ++j)
          if (o[(j + 1) % 3] == a && o[(j + 2) % 3] == b)
            throw GeometryError("inconsistent orientation at triangle " + std::to_string(k));
        adj[1] = k;
      }
      triangle_edges_[k][i] = it->second;
    }
  }

  vertex_flags_.assign(nv, 0);
  edge_tags_.resize(edges_.size());
  for (int e = 0; e < num_edges(); ++e) {
    const auto& adj = edge_triangles_[e];
    EdgeTag tag = EdgeTag::None;
    if (adj[1] < 0) {
      tag = EdgeTag::Outer;
    } else if (regions_[adj[0]] != regions_[adj[1]]) {
      tag = EdgeTag::Interface;
    }
    edge_tags_[e] = tag;
    const std::uint8_t bit = tag == EdgeTag::Outer ? 1 : tag == EdgeTag::Interface ? 2 : 0;
    vertex_flags_[edges_[e][0]] |= bit;
    vertex_flags_[edges_[e][1]] |= bit;
  }
}

double TriMesh::edge_sign(int k, int i) const {
  const Triangle& t = triangles_[k];
  return t[(i + 1) % 3] < t[(i + 2) % 3] ? 1.0 : -1.0;
}

double TriMesh::edge_length(int e) const { return norm(vertices_[edges_[e][1]] - vertices_[edges_[e][0]]); }

Vec2 TriMesh::edge_normal(int e) const {
  const Vec2 t = vertices_[edges_[e][1]] - vertices_[edges_[e][0]];
  return Vec2{t.y, -t.x} / norm(t);
}

std::array<Vec2, 3> TriMesh::corners(int k) const {
  const Triangle& t = triangles_[k];
  return {vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]};
}

double TriMesh::diameter(int k) const {
  const auto p = corners(k);
  return std::max({norm(p[1] - p[0]), norm(p[2] - p[1]), norm(p[0] - p[2])});
}

Vec2 TriMesh::centroid(int k) const {
  const auto p = corners(k);
  return (p[0] + p[1] + p[2]) / 3.0;
}

std::array<Vec2, 3> TriMesh::barycentric_gradients(int k) const {
  const auto p = corners(k);
  const double s = 1.0 / (2.0 * areas_[k]);
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Vec2 e = p[(i + 2) % 3] - p[(i + 1) % 3];
    g[i] = Vec2{-e.y, e.x} * s;
  }
  return g;
}

double TriMesh::total_area() const { return std::accumulate(areas_.begin(), areas_.end(), 0.0); }

double TriMesh::max_diameter() const {
  double d = 0.0;
  for (int k = 0; k < num_triangles(); ++k) d = std::max(d, diameter(k));
  return d;
}

std::vector<int> TriMesh::interface_edges() const {
  std::vector<int> out;
  for (int e = 0; e < num_edges(); ++e)
    if (edge_tags_[e] == EdgeTag::Interface) out.push_back(e);
  return out;
}

int TriMesh::interface_loops() const {
  std::vector<int> parent(vertices_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::unordered_set<int> touched;
  for (int e : interface_edges()) {
    const int a = find(edges_[e][0]);
    const int b = find(edges_[e][1]);
    touched.insert(edges_[e][0]);
    touched.insert(edges_[e][1]);
    if (a != b) parent[a] = b;
  }
  std::unordered_set<int> roots;
  for (int v : touched) roots.insert(find(v));
  return static_cast<int>(roots.size());
}

// ---------------------------------------------------------------------------
// disk-in-square generator

namespace {

int nice_count(int minimum) {
  // smallest m * 2^k >= minimum with m in 4..7
  int best = 0;
  for (int m = 4; m <= 7; ++m) {
    int n = m;
    while (n < minimum) n *= 2;
    if (best == 0 || n < best) best = n;
  }
  return best;
}

struct Builder {
  std::vector<Vec2> verts;
  std::vector<Triangle> tris;
  std::vector<Region> regs;

  int add(Vec2 p) {
    verts.push_back(p);
    return static_cast<int>(verts.size()) - 1;
  }

  void tri(int a, int b, int c, Region r) {
    if (signed_area(verts[a], verts[b], verts[c]) < 0) std::swap(b, c);
    // put the longest edge opposite the first vertex
    const std::array<int, 3> t{a, b, c};
    int best = 0;
    double len = -1.0;
    for (int i = 0; i < 3; ++i) {
      const double l = norm(verts[t[(i + 2) % 3]] - verts[t[(i + 1) % 3]]);
      if (l > len + 1e-14 * l) {
        len = l;
        best = i;
      }
    }
    tris.push_back({t[best], t[(best + 1) % 3], t[(best + 2) % 3]});
    regs.push_back(r);
  }

  void quad(int a, int b, int c, int d, Region r) {
    // a-b-c-d around the cell; split along the shorter diagonal
    if (norm(verts[a] - verts[c]) <= norm(verts[b] - verts[d])) {
      tri(a, b, c, r);
      tri(a, c, d, r);
    } else {
      tri(a, b, d, r);
      tri(b, c, d, r);
    }
  }
};

TriMesh build_once(double side, Vec2 c, double r, double h) {
  const double a = 0.5 * side;
  const int per_side = nice_count(std::max(4, static_cast<int>(std::ceil(side / h - 1e-12))));
  const int n = 4 * per_side;

  std::vector<Vec2> outer(n), dirs(n);
  for (int j = 0; j < n; ++j) {
    const int q = j / per_side;
    const double t = static_cast<double>(j % per_side) / per_side;
    switch (q) {
      case 0: outer[j] = {-a + 2 * a * t, -a}; break;
      case 1: outer[j] = {a, -a + 2 * a * t}; break;
      case 2: outer[j] = {a - 2 * a * t, a}; break;
      default: outer[j] = {-a, a - 2 * a * t}; break;
    }
    const Vec2 d = outer[j] - c;
    dirs[j] = d / norm(d);
  }

  const double t_circle = 2.0 * std::numbers::pi * r / n;
  const double t_square = 4.0 * side / n;
  double l_max = 0.0;
  for (int j = 0; j < n; ++j) l_max = std::max(l_max, norm(outer[j] - (c + r * dirs[j])));

  std::vector<double> s{0.0};
  while (s.back() < 1.0) {
    const double sk = s.back();
    const double step = std::min(h, (1.0 - sk) * t_circle + sk * t_square) / l_max;
    s.push_back(sk + step);
  }
  const double s_end = s.back();
  for (double& v : s) v /= s_end;

  Builder b;
  const int layers = static_cast<int>(s.size());
  std::vector<std::vector<int>> ring(layers, std::vector<int>(n));
  for (int k = 0; k < layers; ++k) {
    for (int j = 0; j < n; ++j) {
      const Vec2 inner = c + r * dirs[j];
      ring[k][j] = b.add(k == layers - 1 ? outer[j] : (1.0 - s[k]) * inner + s[k] * outer[j]);
    }
  }
  for (int k = 0; k + 1 < layers; ++k)
    for (int j = 0; j < n; ++j) {
      const int jn = (j + 1) % n;
      b.quad(ring[k][j], ring[k][jn], ring[k + 1][jn], ring[k + 1][j], Region::Solvent);
    }

  // concentric rings inside the disk
  std::vector<Vec2> cur_dirs = dirs;
  std::vector<int> cur = ring[0];
  double rho = r;
  const double step = t_circle;
  while (true) {
    const double next_rho = rho - step;
    const int m = static_cast<int>(cur.size());
    if (next_rho <= 0.5 * step) {
      const int centre = b.add(c);
      for (int j = 0; j < m; ++j) b.tri(centre, cur[j], cur[(j + 1) % m], Region::Molecule);
      break;
    }
    const bool halve =
        m % 2 == 0 && m / 2 >= 4 && 2.0 * std::numbers::pi * next_rho / m < 0.6 * step;
    if (!halve) {
      std::vector<int> nxt(m);
      for (int j = 0; j < m; ++j) nxt[j] = b.add(c + next_rho * cur_dirs[j]);
      for (int j = 0; j < m; ++j) {
        const int jn = (j + 1) % m;
        b.quad(cur[j], cur[jn], nxt[jn], nxt[j], Region::Molecule);
      }
      cur = std::move(nxt);
    } else {
      const int mh = m / 2;
      std::vector<Vec2> nd(mh);
      std::vector<int> nxt(mh);
      for (int j = 0; j < mh; ++j) {
        nd[j] = cur_dirs[2 * j];
        nxt[j] = b.add(c + next_rho * nd[j]);
      }
      for (int j = 0; j < mh; ++j) {
        const int a0 = cur[2 * j], a1 = cur[2 * j + 1], a2 = cur[(2 * j + 2) % m];
        const int b0 = nxt[j], b1 = nxt[(j + 1) % mh];
        b.tri(b0, a0, a1, Region::Molecule);
        b.tri(b0, a1, b1, Region::Molecule);
        b.tri(b1, a1, a2, Region::Molecule);
      }
      cur = std::move(nxt);
      cur_dirs = std::move(nd);
    }
    rho = next_rho;
  }
  return TriMesh(std::move(b.verts), std::move(b.tris), std::move(b.regs));
}

}  // namespace

TriMesh build_disk_in_square(double square_side, Vec2 disk_center, double disk_radius, double target_h) {
  if (!(target_h > 0.0)) throw InvalidArgument("target_h must be positive");
  if (!(square_side > 0.0) || !(disk_radius > 0.0)) throw GeometryError("square side and disk radius must be positive");
  const double a = 0.5 * square_side;
  if (!(std::abs(disk_center.x) + disk_radius < a && std::abs(disk_center.y) + disk_radius < a))
    throw GeometryError("disk is not strictly inside the square");
  double h = target_h;
  for (int attempt = 0; attempt < 30; ++attempt, h *= 0.8) {
    TriMesh m = build_once(square_side, disk_center, disk_radius, h);
    if (m.max_diameter() <= 2.0 * target_h) return m;
  }
  throw GeometryError("could not meet the requested element size");
}

// ---------------------------------------------------------------------------
// newest-vertex bisection

TriMesh refine(const TriMesh& mesh, std::span<const int> marked) {
  const int nt = mesh.num_triangles();
  for (int k : marked)
    if (k < 0 || k >= nt) throw InvalidArgument("marked element id " + std::to_string(k) + " out of range");

  std::vector<char> edge_marked(mesh.num_edges(), 0);
  std::vector<int> work;
  auto mark_edge = [&](int e) {
    if (edge_marked[e]) return;
    edge_marked[e] = 1;
    for (int k : mesh.edge_triangles(e))
      if (k >= 0) work.push_back(k);
  };
  for (int k : marked) mark_edge(mesh.triangle_edge(k, 0));
  while (!work.empty()) {
    const int k = work.back();
    work.pop_back();
    mark_edge(mesh.triangle_edge(k, 0));
  }

  std::unordered_set<std::uint64_t> bisect_edges;
  for (int e = 0; e < mesh.num_edges(); ++e)
    if (edge_marked[e]) bisect_edges.insert(edge_key(mesh.edge(e)[0], mesh.edge(e)[1]));

  auto lineage = std::make_shared<Lineage>();
  lineage->coarse_vertices = mesh.num_vertices();
  lineage->coarse_triangles = nt;
  std::vector<Vec2> verts = mesh.vertices();
  std::vector<Triangle> tris;
  std::vector<Region> regs;
  std::unordered_map<std::uint64_t, int> midpoints;

  auto midpoint = [&](int a, int b) {
    auto [it, inserted] = midpoints.try_emplace(edge_key(a, b), static_cast<int>(verts.size()));
    if (inserted) {
      verts.push_back(0.5 * (verts[a] + verts[b]));
      lineage->midpoint_of.push_back({a, b});
    }
    return it->second;
  };

  auto bisect = [&](auto&& self, const Triangle& t, Region reg, int parent) -> void {
    if (!bisect_edges.contains(edge_key(t[1], t[2]))) {
      tris.push_back(t);
      regs.push_back(reg);
      lineage->parent.push_back(parent);
      return;
    }
    const int m = midpoint(t[1], t[2]);
    self(self, Triangle{m, t[0], t[1]}, reg, parent);
    self(self, Triangle{m, t[2], t[0]}, reg, parent);
  };
  for (int k = 0; k < nt; ++k) bisect(bisect, mesh.triangle(k), mesh.region(k), k);

  return TriMesh(std::move(verts), std::move(tris), std::move(regs), std::move(lineage));
}

TriMesh refine_uniform(const TriMesh& mesh, int passes) {
  if (passes < 1) throw InvalidArgument("refine_uniform needs at least one pass");
  std::vector<int> all(mesh.num_triangles());
  std::iota(all.begin(), all.end(), 0);
  TriMesh out = refine(mesh, all);
  for (int p = 1; p < passes; ++p) {
    std::vector<int> every(out.num_triangles());
    std::iota(every.begin(), every.end(), 0);
    TriMesh next = refine(out, every);
    // compose lineages so the result still refers to `mesh`
    auto composed = std::make_shared<Lineage>(*out.lineage());
    const Lineage& step = *next.lineage();
    composed->parent.resize(step.parent.size());
    for (std::size_t k = 0; k < step.parent.size(); ++k) composed->parent[k] = out.lineage()->parent[step.parent[k]];
    composed->midpoint_of.insert(composed->midpoint_of.end(), step.midpoint_of.begin(), step.midpoint_of.end());
    out = TriMesh(next.vertices(), next.triangles(), next.regions(), std::move(composed));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<int> mark_dorfler(std::span<const double> indicators, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw InvalidArgument("theta must lie in (0, 1]");
  bool any = false;
  for (double v : indicators) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("indicators must be finite and nonnegative");
    any = any || v > 0.0;
  }
  if (!any) throw InvalidArgument("nothing to mark");

  std::vector<int> order(indicators.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return indicators[a] > indicators[b]; });
  double total = 0.0;
  for (int k : order) total += indicators[k] * indicators[k];
  const double target = theta * theta * total;

  std::vector<int> chosen;
  double acc = 0.0;
  for (int k : order) {
    acc += indicators[k] * indicators[k];
    chosen.push_back(k);
    if (acc >= target) break;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

SubMesh extract_region(const TriMesh& mesh, Region region) {
  SubMesh out;
  std::vector<int> local(mesh.num_vertices(), -1);
  for (int k = 0; k < mesh.num_triangles(); ++k)
    if (mesh.region(k) == region)
      for (int v : mesh.triangle(k)) local[v] = 0;
  std::vector<Vec2> verts;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (local[v] == 0) {
      local[v] = static_cast<int>(verts.size());
      verts.push_back(mesh.vertex(v));
      out.vertex_map.push_back(v);
    }
  std::vector<Triangle> tris;
  for (int k = 0; k < mesh.num_triangles(); ++k)
    if (mesh.region(k) == region) {
      const Triangle& t = mesh.triangle(k);
      tris.push_back({local[t[0]], local[t[1]], local[t[2]]});
      out.triangle_map.push_back(k);
    }
  if (tris.empty()) throw GeometryError(std::string("no triangles tagged ") + to_string(region));
  std::vector<Region> regs(tris.size(), region);
  out.mesh = std::make_shared<const TriMesh>(std::move(verts), std::move(tris), std::move(regs));
  return out;
}

}  // namespace pbe
