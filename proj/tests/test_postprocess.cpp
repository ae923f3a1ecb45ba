#include <cmath>
#include <random>

#include "doctest.h"
#include "dpg/adapt.hpp"
#include "dpg/postprocess.hpp"
#include "dpg/quadrature.hpp"
#include "support.hpp"

using namespace dpg;

namespace {

double element_mean(const ScalarBasis& basis, const Eigen::VectorXd& c, const ElementMap& map) {
  const QuadratureRule rule = triangle_quadrature(basis.degree());
  double s = 0.0, area = 0.0;
  for (int q = 0; q < rule.size(); ++q) {
    s += rule.weights[q] * map.det() * evaluate_expansion(basis, c, rule.points[q][0], rule.points[q][1]);
    area += rule.weights[q] * map.det();
  }
  return s / area;
}

Eigen::VectorXd project(int degree, const ScalarField& f, const ElementMap& map) {
  return project_l2(ScalarBasis(degree), triangle_quadrature(2 * degree + 4), f, map);
}

}  // namespace

TEST_CASE("postprocessing examples on the reference triangle") {
  const ElementMap ref(Vertex{0, 0}, Vertex{1, 0}, Vertex{0, 1});
  const ScalarBasis b1(1);
  SUBCASE("sigma = (1,0), u = 0 gives x - 1/3") {
    Eigen::VectorXd sigma(2);
    sigma << std::sqrt(0.5), 0.0;  // constant 1 in the orthonormal basis
    const Eigen::VectorXd w = postprocess_element(ref, 0, Eigen::VectorXd::Zero(1), sigma);
    for (const auto& pt : std::vector<std::array<double, 2>>{{0.1, 0.1}, {0.6, 0.2}, {0.0, 0.9}}) {
      CHECK(evaluate_expansion(b1, w, pt[0], pt[1]) == doctest::Approx(pt[0] - 1.0 / 3).epsilon(1e-12));
    }
  }
  SUBCASE("constants are kept") {
    Eigen::VectorXd u(1);
    u << 2.5 * std::sqrt(0.5);
    const Eigen::VectorXd w = postprocess_element(ref, 0, u, Eigen::VectorXd::Zero(2));
    CHECK(evaluate_expansion(b1, w, 0.2, 0.3) == doctest::Approx(2.5).epsilon(1e-13));
  }
}

TEST_CASE("postprocessing reproduces P^{p+1} and keeps the element mean") {
  std::mt19937 rng(41);
  for (int p = 0; p <= 3; ++p) {
    for (int i = 0; i < 4; ++i) {
      const auto v = dpg::testing::random_triangle(rng);
      const ElementMap map(v[0], v[1], v[2]);
      // q in P^{p+1}
      auto q = [p](double x, double y) { return 0.3 + std::pow(x - 0.2, p + 1) - 0.7 * std::pow(y, p) * x + y; };
      auto gq = [p](double x, double y) {
        const double dx = (p + 1) * std::pow(x - 0.2, p) - 0.7 * std::pow(y, p);
        const double dy = (p > 0 ? -0.7 * p * std::pow(y, p - 1) * x : 0.0) + 1.0;
        return Eigen::Vector2d(dx, dy);
      };
      Eigen::VectorXd sigma(2 * scalar_dim(p));
      sigma << project(p, [&](double x, double y) { return gq(x, y)[0]; }, map),
          project(p, [&](double x, double y) { return gq(x, y)[1]; }, map);
      if (p == 0) continue;  // grad q is only in P^p when p >= 1
      const Eigen::VectorXd u = project(p, q, map);
      const Eigen::VectorXd w = Postprocessor(p, p).element(map, u, sigma);
      const Eigen::VectorXd exact = project(p + 1, q, map);
      CHECK((w - exact).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, exact.cwiseAbs().maxCoeff()));
    }
  }
  // mean preservation with arbitrary data, both trial spaces
  for (int p = 0; p <= 2; ++p) {
    for (int ud : {p, p + 1}) {
      const auto v = dpg::testing::random_triangle(rng);
      const ElementMap map(v[0], v[1], v[2]);
      std::normal_distribution<double> n;
      Eigen::VectorXd u(scalar_dim(ud)), sigma(2 * scalar_dim(p));
      for (auto& c : u) c = n(rng);
      for (auto& c : sigma) c = n(rng);
      const Eigen::VectorXd w = Postprocessor(p, ud).element(map, u, sigma);
      const double mu = element_mean(ScalarBasis(ud), u, map);
      CHECK(std::abs(element_mean(ScalarBasis(p + 1), w, map) - mu) <= 1e-12 * std::max(1.0, std::abs(mu)));
    }
  }
}

TEST_CASE("postprocessing on tiny elements") {
  const double s = 1e-8;
  const ElementMap map(Vertex{0, 0}, Vertex{s, 0}, Vertex{0.2 * s, s});
  Eigen::VectorXd sigma(2);
  sigma << 1.0, -1.0;
  Eigen::VectorXd u(1);
  u << 1.0;
  const Eigen::VectorXd w = postprocess_element(map, 0, u, sigma);
  CHECK(w.allFinite());
  CHECK(element_mean(ScalarBasis(1), w, map) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("postprocess_all: zero solution, means and locality") {
  const ScalarField zero = [](double, double) { return 0.0; };
  const Mesh m = refine_uniform(refine_marked(unit_square_mesh(4), std::vector<int>{3}));
  REQUIRE(m.num_triangles() >= 100);
  {
    const Solution s = assemble_solve(m, TrialSpace{TrialKind::Standard, 1}, ProblemKind::ReactionDiffusion, zero, zero);
    const PostprocessedField f = postprocess_all(m, s);
    for (const auto& c : f.coefficients) CHECK(c.isZero(0.0));
  }
  const ManufacturedProblem p = square_smooth();
  Solution s = assemble_solve(m, TrialSpace{TrialKind::Standard, 1}, p.kind, p.f, p.dirichlet);
  const PostprocessedField f = postprocess_all(m, s);
  CHECK(f.degree == 2);
  CHECK_FALSE(f.from_augmented);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const ElementMap map = ElementMap::of(m, t);
    const double mu = element_mean(ScalarBasis(1), s.u_coefficients(t), map);
    CHECK(std::abs(element_mean(ScalarBasis(2), f.coefficients[t], map) - mu) <= 1e-12 * std::max(1e-3, std::abs(mu)));
  }
  // perturb the u and sigma dofs of one element
  const int target = 17;
  for (int id : s.dofs.element_dofs(target)) {
    if (id >= 0 && id < s.dofs.block_offset_trace()) s.free_values[id] += 0.25;
  }
  const PostprocessedField g = postprocess_all(m, s);
  for (int t = 0; t < m.num_triangles(); ++t) {
    if (t == target) {
      CHECK_FALSE(g.coefficients[t] == f.coefficients[t]);
    } else {
      CHECK(g.coefficients[t] == f.coefficients[t]);
    }
  }
}

TEST_CASE("postprocessing improves the smooth-problem error") {
  const ManufacturedProblem p = square_smooth();
  for (int deg : {0, 1}) {
    const LevelResult r = solve_level(refine_uniform(unit_square_mesh(4)), p, TrialSpace{TrialKind::Standard, deg}, true);
    REQUIRE(r.errors.err_u_post.has_value());
    CHECK(*r.errors.err_u_post < r.errors.err_u);
  }
}
