#pragma once

#include <array>
#include <vector>

namespace dpg {

/// Rule on the reference triangle {(0,0),(1,0),(0,1)} (weights sum to 1/2)
/// or on the reference edge [0,1] (second coordinate unused, weights sum to 1).
struct QuadratureRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
  int exactness = 0;

  [[nodiscard]] int size() const { return static_cast<int>(weights.size()); }
};

inline constexpr int kMaxQuadratureDegree = 20;

/// Gauss-Legendre nodes and weights on [-1,1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed (Duffy) tensor Gauss-Legendre rule exact for total degree q.
/// Throws std::invalid_argument unless 0 <= q <= kMaxQuadratureDegree.
QuadratureRule triangle_quadrature(int q);

/// Gauss-Legendre rule on [0,1] exact for degree q.
QuadratureRule edge_quadrature(int q);

}  // namespace dpg
