#include "dpg/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dpg {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute the derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

QuadratureRule triangle_quadrature(int q) {
  if (q < 0 || q > kMaxQuadratureDegree) {
    throw std::invalid_argument("triangle_quadrature: exactness " + std::to_string(q) + " outside [0, " +
                                std::to_string(kMaxQuadratureDegree) + "]");
  }
  // x^a y^b becomes a polynomial of degree a+b+1 in s (Jacobian 1-s) and b in t
  const int n = (q + 3) / 2;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadratureRule rule;
  rule.exactness = q;
  for (int i = 0; i < n; ++i) {
    const double s = 0.5 * (x[i] + 1.0);
    for (int j = 0; j < n; ++j) {
      const double t = 0.5 * (x[j] + 1.0);
      rule.points.push_back({s, t * (1.0 - s)});
      rule.weights.push_back(0.25 * w[i] * w[j] * (1.0 - s));
    }
  }
  return rule;
}

QuadratureRule edge_quadrature(int q) {
  if (q < 0 || q > 2 * kMaxQuadratureDegree) throw std::invalid_argument("edge_quadrature: exactness out of range");
  const int n = q / 2 + 1;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadratureRule rule;
  rule.exactness = q;
  for (int i = 0; i < n; ++i) {
    rule.points.push_back({0.5 * (x[i] + 1.0), 0.0});
    rule.weights.push_back(0.5 * w[i]);
  }
  return rule;
}

}  // namespace dpg
