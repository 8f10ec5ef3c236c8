#pragma once

#include <array>
#include <vector>

#include "pbe/geometry.hpp"

namespace pbe {

/** Point on the reference triangle with barycentric coordinates; weights sum to one. */
struct QuadPoint {
  std::array<double, 3> bary;
  double weight;
};

// Collapsed Gauss-Legendre rule exact for polynomials of total degree <= degree.
const std::vector<QuadPoint>& triangle_rule(int degree);

// Gauss-Legendre nodes and weights on [0, 1].
std::vector<std::array<double, 2>> gauss_legendre_01(int n);

inline Vec2 map_point(const std::array<Vec2, 3>& p, const std::array<double, 3>& b) {
  return b[0] * p[0] + b[1] * p[1] + b[2] * p[2];
}

constexpr int kPolyDegree = 4;
constexpr int kNonlinearDegree = 7;

}  // namespace pbe
