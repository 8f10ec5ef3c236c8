#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "pbe/error.hpp"
#include "pbe/mesh.hpp"

namespace pbe {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_mesh(std::ostream& out, const TriMesh& mesh) {
  out << "pbemesh 1\n";
  for (const Vec2& p : mesh.vertices()) out << "V " << fmt17(p.x) << ' ' << fmt17(p.y) << '\n';
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const Triangle& t = mesh.triangle(k);
    out << "T " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << to_string(mesh.region(k)) << '\n';
  }
  for (int e = 0; e < mesh.num_edges(); ++e)
    if (mesh.edge_tag(e) != EdgeTag::None)
      out << "E " << mesh.edge(e)[0] << ' ' << mesh.edge(e)[1] << ' ' << to_string(mesh.edge_tag(e)) << '\n';
  if (!out) throw IoError("failed writing mesh");
}

TriMesh read_mesh(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("pbemesh 1", 0) != 0) throw IoError("missing 'pbemesh 1' header");
  std::vector<Vec2> verts;
  std::vector<Triangle> tris;
  std::vector<Region> regs;
  std::set<std::tuple<int, int, std::string>> tagged;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    auto bad = [&] { return IoError("malformed mesh line " + std::to_string(lineno)); };
    if (kind == "V") {
      Vec2 p;
      if (!(ls >> p.x >> p.y)) throw bad();
      verts.push_back(p);
    } else if (kind == "T") {
      Triangle t;
      std::string reg;
      if (!(ls >> t[0] >> t[1] >> t[2] >> reg)) throw bad();
      if (reg == "MOLECULE") regs.push_back(Region::Molecule);
      else if (reg == "SOLVENT") regs.push_back(Region::Solvent);
      else throw bad();
      tris.push_back(t);
    } else if (kind == "E") {
      int a, b;
      std::string tag;
      if (!(ls >> a >> b >> tag) || (tag != "OUTER" && tag != "INTERFACE")) throw bad();
      tagged.emplace(std::min(a, b), std::max(a, b), tag);
    } else {
      throw bad();
    }
  }
  TriMesh mesh(std::move(verts), std::move(tris), std::move(regs));
  std::set<std::tuple<int, int, std::string>> derived;
  for (int e = 0; e < mesh.num_edges(); ++e)
    if (mesh.edge_tag(e) != EdgeTag::None) derived.emplace(mesh.edge(e)[0], mesh.edge(e)[1], to_string(mesh.edge_tag(e)));
  if (derived != tagged) throw IoError("edge tags in file disagree with the mesh topology");
  return mesh;
}

}  // namespace pbe
