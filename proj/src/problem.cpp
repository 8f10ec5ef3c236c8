#include "pbe/problem.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pbe/error.hpp"

namespace pbe {

void ProblemSpec::validate() const {
  if (!(eps_m > 0.0) || !(eps_s > 0.0)) throw InvalidArgument("dielectric constants must be positive");
  if (!(ks2 >= 0.0)) throw InvalidArgument("ks2 must be nonnegative");
  if (!(charge_scale > 0.0)) throw InvalidArgument("charge_scale must be positive");
  if (dimension != 2 && dimension != 3) throw InvalidArgument("dimension must be 2 or 3");
  if (!std::isfinite(g)) throw InvalidArgument("boundary value g must be finite");
}

void ProblemSpec::validate_geometry(const DiskInSquare& geom, double clearance) const {
  for (std::size_t i = 0; i < charges.size(); ++i) {
    const Vec2 p{charges[i].position.x, charges[i].position.y};
    const double gap = geom.radius - norm(p - geom.center);
    if (!(gap > 0.0) || gap < clearance)
      throw InvalidArgument("charge " + std::to_string(i) + " is too close to the molecular surface");
  }
}

std::vector<Charge> read_charges(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open charge file " + path);
  std::vector<Charge> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::vector<double> nums;
    double v;
    while (ls >> v) nums.push_back(v);
    if (!ls.eof()) throw IoError(path + ":" + std::to_string(lineno) + ": not a number");
    if (nums.empty()) continue;
    Charge c;
    if (nums.size() == 3) {
      c.position = {nums[0], nums[1], 0.0};
    } else if (nums.size() == 4) {
      c.position = {nums[0], nums[1], nums[2]};
    } else {
      throw IoError(path + ":" + std::to_string(lineno) + ": expected 'x y [z] valence'");
    }
    const double z = nums.back();
    if (z != std::round(z)) throw IoError(path + ":" + std::to_string(lineno) + ": valence must be an integer");
    c.valence = static_cast<int>(z);
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------

GreenFunction::GreenFunction(const ProblemSpec& spec, double length_scale)
    : charges_(spec.charges), dimension_(spec.dimension), singular_radius_(1e-12 * length_scale) {
  coef_ = dimension_ == 2 ? -spec.charge_scale / (2.0 * std::numbers::pi * spec.eps_m)
                          : spec.charge_scale / (4.0 * std::numbers::pi * spec.eps_m);
}

void GreenFunction::check(double r) const {
  if (!(r > singular_radius_)) throw SingularPointError("singular point: evaluation at a charge location");
}

double GreenFunction::value(const Vec2& x) const {
  if (dimension_ == 3) return value(Vec3{x.x, x.y, 0.0});
  double s = 0.0;
  for (const Charge& c : charges_) {
    const double r = std::hypot(x.x - c.position.x, x.y - c.position.y);
    check(r);
    s += c.valence * std::log(r);
  }
  return coef_ * s;
}

Vec2 GreenFunction::gradient(const Vec2& x) const {
  if (dimension_ == 3) {
    const Vec3 g = gradient(Vec3{x.x, x.y, 0.0});
    return {g.x, g.y};
  }
  Vec2 s;
  for (const Charge& c : charges_) {
    const Vec2 d{x.x - c.position.x, x.y - c.position.y};
    const double r2 = norm2(d);
    check(std::sqrt(r2));
    s += (c.valence / r2) * d;
  }
  return coef_ * s;
}

double GreenFunction::value(const Vec3& x) const {
  if (dimension_ == 2) return value(Vec2{x.x, x.y});
  double s = 0.0;
  for (const Charge& c : charges_) {
    const double r = std::sqrt((x.x - c.position.x) * (x.x - c.position.x) + (x.y - c.position.y) * (x.y - c.position.y) +
                               (x.z - c.position.z) * (x.z - c.position.z));
    check(r);
    s += c.valence / r;
  }
  return coef_ * s;
}

Vec3 GreenFunction::gradient(const Vec3& x) const {
  if (dimension_ == 2) {
    const Vec2 g = gradient(Vec2{x.x, x.y});
    return {g.x, g.y, 0.0};
  }
  Vec3 s;
  for (const Charge& c : charges_) {
    const double dx = x.x - c.position.x, dy = x.y - c.position.y, dz = x.z - c.position.z;
    const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
    check(r);
    const double f = -c.valence / (r * r * r);
    s.x += f * dx;
    s.y += f * dy;
    s.z += f * dz;
  }
  return {coef_ * s.x, coef_ * s.y, coef_ * s.z};
}

GreenSample eval_G(const ProblemSpec& spec, std::span<const Vec3> points, double length_scale) {
  const GreenFunction g(spec, length_scale);
  GreenSample out;
  out.values.reserve(points.size());
  out.gradients.reserve(points.size());
  for (const Vec3& p : points) {
    out.values.push_back(g.value(p));
    out.gradients.push_back(g.gradient(p));
  }
  return out;
}

double friedrichs_bound(Shape shape, double size, int dimension) {
  if (!(size > 0.0)) throw InvalidArgument("domain size must be positive");
  if (shape == Shape::Cube && dimension == 3) return size * std::sqrt(3.0) / (3.0 * std::numbers::pi);
  if (shape == Shape::Square && dimension == 2) return size * std::sqrt(2.0) / (2.0 * std::numbers::pi);
  if (shape == Shape::Disk && dimension == 2) return size / 2.4048255576957728;
  throw InvalidArgument("unsupported shape for the Friedrichs bound");
}

// ---------------------------------------------------------------------------

InterfaceFlux InterfaceFlux::two_term(const ProblemSpec& spec, double length_scale) {
  InterfaceFlux f;
  f.kind_ = Kind::TwoTerm;
  f.eps_m_ = spec.eps_m;
  f.coef_solvent_ = spec.eps_m - spec.eps_s;
  f.green_ = std::make_shared<GreenFunction>(spec, length_scale);
  return f;
}

InterfaceFlux InterfaceFlux::three_term(const ProblemSpec& spec, std::shared_ptr<const FluxFieldRT0> flux_h,
                                        double length_scale) {
  if (!flux_h) throw InvalidArgument("three-term interface flux needs the harmonic flux");
  if (flux_h->support() != Support::Molecule)
    throw InvalidArgument("harmonic flux must be supported on the molecule sub-mesh");
  InterfaceFlux f;
  f.kind_ = Kind::ThreeTerm;
  f.eps_m_ = spec.eps_m;
  f.coef_solvent_ = spec.eps_m;
  f.green_ = std::make_shared<GreenFunction>(spec, length_scale);
  f.flux_h_ = std::move(flux_h);
  return f;
}

int InterfaceFlux::degree(Region r) const {
  if (kind_ == Kind::None) return 2;
  if (r == Region::Molecule) return kPolyDegree;
  return green_->empty() ? kPolyDegree : kNonlinearDegree;
}

void InterfaceFlux::check_mesh(const TriMesh& mesh) const {
  if (kind_ == Kind::ThreeTerm && &flux_h_->mesh() != &mesh)
    throw InvalidArgument("harmonic flux is defined on a different mesh");
}

Vec2 InterfaceFlux::value(const TriMesh& mesh, int k, const Vec2& x) const {
  switch (kind_) {
    case Kind::None: return {};
    case Kind::TwoTerm:
      if (mesh.region(k) == Region::Molecule || coef_solvent_ == 0.0 || green_->empty()) return {};
      return coef_solvent_ * green_->gradient(x);
    case Kind::ThreeTerm:
      if (mesh.region(k) == Region::Molecule) return -eps_m_ * flux_h_->value(k, x);
      if (green_->empty()) return {};
      return coef_solvent_ * green_->gradient(x);
  }
  return {};
}

Vec2 InterfaceFlux::integral(const TriMesh& mesh, int k) const {
  if (kind_ == Kind::None) return {};
  const auto p = mesh.corners(k);
  Vec2 s;
  for (const QuadPoint& q : triangle_rule(degree(mesh.region(k)))) s += q.weight * value(mesh, k, map_point(p, q.bary));
  return mesh.area(k) * s;
}

Eigen::VectorXd load_vector(const TriMesh& mesh, const InterfaceFlux& y_g) {
  y_g.check_mesh(mesh);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(mesh.num_vertices());
  if (y_g.kind() == InterfaceFlux::Kind::None) return b;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const Vec2 yk = y_g.integral(mesh, k);
    if (yk.x == 0.0 && yk.y == 0.0) continue;
    const auto grads = mesh.barycentric_gradients(k);
    const Triangle& t = mesh.triangle(k);
    for (int i = 0; i < 3; ++i) b[t[i]] += dot(yk, grads[i]);
  }
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.on_outer_boundary(v)) b[v] = 0.0;
  return b;
}

Eigen::VectorXd interface_load_2term(const TriMesh& mesh, const ProblemSpec& spec, double length_scale) {
  return load_vector(mesh, InterfaceFlux::two_term(spec, length_scale));
}

Eigen::VectorXd interface_load_3term(const TriMesh& mesh, const ProblemSpec& spec, const FluxFieldRT0& flux_h,
                                     double length_scale) {
  if (&flux_h.mesh() != &mesh) throw InvalidArgument("harmonic flux is defined on a different mesh");
  auto shared = std::make_shared<const FluxFieldRT0>(flux_h);
  return load_vector(mesh, InterfaceFlux::three_term(spec, shared, length_scale));
}

}  // namespace pbe
