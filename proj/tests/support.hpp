#pragma once

#include <cmath>
#include <random>

#include "dpg/basis.hpp"
#include "dpg/mesh.hpp"

namespace dpg::testing {

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

// counterclockwise triangle with angles bounded away from zero
inline std::array<Vertex, 3> random_triangle(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (;;) {
    std::array<Vertex, 3> v{Vertex{u(rng), u(rng)}, Vertex{u(rng), u(rng)}, Vertex{u(rng), u(rng)}};
    const double det = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y);
    if (std::abs(det) < 0.3) continue;
    if (det < 0) std::swap(v[1], v[2]);
    return v;
  }
}

inline Mesh single_triangle(const std::array<Vertex, 3>& v) {
  return Mesh({v[0], v[1], v[2]}, {Triangle{{0, 1, 2}, 0}});
}

inline Mesh reference_triangle() { return single_triangle({Vertex{0, 0}, Vertex{1, 0}, Vertex{0, 1}}); }

}  // namespace dpg::testing
