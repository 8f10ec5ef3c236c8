#include "pbe/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "pbe/error.hpp"

namespace pbe {

std::vector<std::array<double, 2>> gauss_legendre_01(int n) {
  if (n < 1) throw InvalidArgument("Gauss-Legendre needs at least one point");
  std::vector<std::array<double, 2>> out(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out[i] = {0.5 * (1.0 - x), 0.5 * w};
  }
  return out;
}

const std::vector<QuadPoint>& triangle_rule(int degree) {
  static std::map<int, std::vector<QuadPoint>> cache;
  static std::mutex guard;
  if (degree < 0) throw InvalidArgument("quadrature degree must be nonnegative");
  std::lock_guard lock(guard);
  auto it = cache.find(degree);
  if (it != cache.end()) return it->second;

  // x = u, y = v (1 - u); Jacobian (1 - u)
  const auto gu = gauss_legendre_01((degree + 3) / 2);
  const auto gv = gauss_legendre_01((degree + 2) / 2);
  std::vector<QuadPoint> rule;
  for (const auto& [u, wu] : gu)
    for (const auto& [v, wv] : gv) {
      const double x = u;
      const double y = v * (1.0 - u);
      rule.push_back({{1.0 - x - y, x, y}, 2.0 * wu * wv * (1.0 - u)});
    }
  return cache.emplace(degree, std::move(rule)).first->second;
}

}  // namespace pbe
