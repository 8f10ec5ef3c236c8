#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "pbe/geometry.hpp"

namespace pbe {

enum class Region : std::uint8_t { Molecule, Solvent };
enum class EdgeTag : std::uint8_t { None, Outer, Interface };

const char* to_string(Region r);
const char* to_string(EdgeTag t);

using Triangle = std::array<int, 3>;

/** \brief Provenance of a mesh produced by refine().
 *
 * parent[k] is the coarse triangle containing fine triangle k; vertices with
 * id >= coarse_vertices are edge midpoints of the recorded endpoint pair.
 */
struct Lineage {
  int coarse_vertices = 0;
  int coarse_triangles = 0;
  std::vector<int> parent;
  std::vector<std::array<int, 2>> midpoint_of;  // indexed by (v - coarse_vertices)
};

/** \brief Conforming triangulation with region tags.
 *
 * Triangles are stored counter-clockwise; (v1, v2) is the refinement edge and
 * local edge i is the one opposite local vertex i. Edges are numbered in order
 * of first appearance and oriented from the lower to the higher vertex id.
 */
class TriMesh {
 public:
  TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles, std::vector<Region> regions,
          std::shared_ptr<const Lineage> lineage = nullptr);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const Vec2& vertex(int v) const { return vertices_[v]; }
  const Triangle& triangle(int k) const { return triangles_[k]; }
  Region region(int k) const { return regions_[k]; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Region>& regions() const { return regions_; }

  const std::array<int, 2>& edge(int e) const { return edges_[e]; }
  EdgeTag edge_tag(int e) const { return edge_tags_[e]; }
  // Adjacent triangles; second entry is -1 on the outer boundary.
  const std::array<int, 2>& edge_triangles(int e) const { return edge_triangles_[e]; }
  int triangle_edge(int k, int i) const { return triangle_edges_[k][i]; }
  // +1 if local edge i of k, traversed counter-clockwise, runs along the global orientation.
  double edge_sign(int k, int i) const;
  double edge_length(int e) const;
  // Unit normal rotating the global edge direction clockwise.
  Vec2 edge_normal(int e) const;

  std::array<Vec2, 3> corners(int k) const;
  double area(int k) const { return areas_[k]; }
  double diameter(int k) const;
  Vec2 centroid(int k) const;
  // Gradients of the three barycentric coordinates.
  std::array<Vec2, 3> barycentric_gradients(int k) const;

  bool on_outer_boundary(int v) const { return vertex_flags_[v] & 1; }
  bool on_interface(int v) const { return vertex_flags_[v] & 2; }

  double total_area() const;
  double max_diameter() const;
  // Number of closed loops formed by interface edges.
  int interface_loops() const;
  std::vector<int> interface_edges() const;

  const Lineage* lineage() const { return lineage_.get(); }

 private:
  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Region> regions_;
  std::vector<double> areas_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<EdgeTag> edge_tags_;
  std::vector<std::array<int, 2>> edge_triangles_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<std::uint8_t> vertex_flags_;
  std::shared_ptr<const Lineage> lineage_;
};

using MeshPtr = std::shared_ptr<const TriMesh>;

struct DiskInSquare {
  double side = 10.0;
  Vec2 center{};
  double radius = 1.0;
};

/** Structured mesh of the square [-side/2, side/2]^2 with an inscribed disk polygon. */
TriMesh build_disk_in_square(double square_side, Vec2 disk_center, double disk_radius, double target_h);
inline TriMesh build_disk_in_square(const DiskInSquare& g, double target_h) {
  return build_disk_in_square(g.side, g.center, g.radius, target_h);
}

/** Newest-vertex bisection of the marked triangles plus conformity closure. */
TriMesh refine(const TriMesh& mesh, std::span<const int> marked);
TriMesh refine_uniform(const TriMesh& mesh, int passes = 1);

/** Greedy bulk criterion; returns ascending element ids. */
std::vector<int> mark_dorfler(std::span<const double> indicators, double theta);

struct SubMesh {
  MeshPtr mesh;
  std::vector<int> vertex_map;    // sub vertex -> parent vertex
  std::vector<int> triangle_map;  // sub triangle -> parent triangle
};

SubMesh extract_region(const TriMesh& mesh, Region region);

void write_mesh(std::ostream& out, const TriMesh& mesh);
TriMesh read_mesh(std::istream& in);

}  // namespace pbe
