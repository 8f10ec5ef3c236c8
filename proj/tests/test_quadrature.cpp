#include <doctest.h>

#include <cmath>

#include "pbe/quadrature.hpp"

using namespace pbe;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

TEST_SUITE("quadrature") {
  TEST_CASE("weights sum to one and points lie inside") {
    for (int d = 1; d <= 12; ++d) {
      double s = 0.0;
      for (const QuadPoint& q : triangle_rule(d)) {
        s += q.weight;
        CHECK(q.weight > 0.0);
        CHECK(q.bary[0] + q.bary[1] + q.bary[2] == doctest::Approx(1.0).epsilon(1e-14));
        for (double b : q.bary) CHECK(b >= 0.0);
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
  }

  TEST_CASE("monomials up to the rule degree are exact") {
    // on the reference triangle: integral of x^a y^b = a! b! / (a + b + 2)!
    for (int d = 1; d <= 10; ++d) {
      const auto& rule = triangle_rule(d);
      for (int a = 0; a <= d; ++a)
        for (int b = 0; a + b <= d; ++b) {
          double s = 0.0;
          for (const QuadPoint& q : rule) s += q.weight * std::pow(q.bary[1], a) * std::pow(q.bary[2], b);
          const double exact = 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2);
          CHECK(s == doctest::Approx(exact).epsilon(1e-13));
        }
    }
  }

  TEST_CASE("Gauss-Legendre on [0, 1]") {
    double s = 0.0, m9 = 0.0;
    for (const auto& [x, w] : gauss_legendre_01(5)) {
      s += w;
      m9 += w * std::pow(x, 9);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m9 == doctest::Approx(0.1).epsilon(1e-14));
  }

  TEST_CASE("point mapping") {
    const std::array<Vec2, 3> p = {Vec2{1, 1}, Vec2{3, 1}, Vec2{1, 2}};
    const Vec2 c = map_point(p, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    CHECK(c.x == doctest::Approx(5.0 / 3));
    CHECK(c.y == doctest::Approx(4.0 / 3));
  }
}
