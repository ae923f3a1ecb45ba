#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "dpg/dpg.hpp"
#include "dpg/problems.hpp"
#include "dpg/quadrature.hpp"
#include "support.hpp"

using namespace dpg;
using dpg::testing::rel_diff;

namespace {

const std::vector<TrialSpace> kTrials{{TrialKind::Standard, 0}, {TrialKind::Standard, 1}, {TrialKind::Standard, 2},
                                      {TrialKind::Augmented, 0}, {TrialKind::Augmented, 1}, {TrialKind::Standard, 3}};

ElementGeometry geometry(const Mesh& mesh, int t = 0) { return ElementGeometry::of(mesh, t); }

// test vectors for v = 1 and tau = (1,0): phi_0 = sqrt(2) on the reference element
Eigen::VectorXd constant_test(const LocalAssembler& a, int block) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(a.test_dim());
  c[block * a.test_basis().dim()] = 1.0 / std::sqrt(2.0);
  return c;
}

ManufacturedProblem affine_poisson() {
  ManufacturedProblem p;
  p.name = "affine";
  p.kind = ProblemKind::Poisson;
  p.u = [](double x, double y) { return x + y; };
  p.grad_u = [](double, double) { return Eigen::Vector2d(1.0, 1.0); };
  p.f = [](double, double) { return 0.0; };
  p.dirichlet = p.u;
  return p;
}

// ||eps||_V^2 by direct quadrature of the recovered representer
double representer_norm_sq(const LocalAssembler& a, const ElementGeometry& g, const Eigen::VectorXd& eps) {
  const QuadratureRule rule = triangle_quadrature(2 * a.test_degree());
  double s = 0.0;
  for (int q = 0; q < rule.size(); ++q) {
    const auto tv = a.evaluate_test(g, eps, rule.points[q][0], rule.points[q][1]);
    s += rule.weights[q] * g.map.det() *
         (tv.v * tv.v + tv.grad_v.squaredNorm() + tv.tau.squaredNorm() + tv.div_tau * tv.div_tau);
  }
  return s;
}

}  // namespace

TEST_CASE("local layout and test space dimensions") {
  const LocalLayout s0(TrialSpace{TrialKind::Standard, 0});
  CHECK(s0.n_u == 1);
  CHECK(s0.n_sigma == 1);
  CHECK(s0.n_bubble == 0);
  CHECK(s0.n_flux == 1);
  CHECK(s0.size() == 1 + 2 + 3 + 0 + 3);
  const LocalLayout a1(TrialSpace{TrialKind::Augmented, 1});
  CHECK(a1.n_u == 6);
  CHECK(a1.n_sigma == 3);
  CHECK(a1.n_bubble == 1);
  CHECK(a1.n_flux == 2);
  const LocalAssembler asm2(TrialSpace{TrialKind::Standard, 2}, ProblemKind::Poisson);
  CHECK(asm2.test_degree() == 4);
  CHECK(asm2.test_dim() == 3 * scalar_dim(4));
}

TEST_CASE("Gram matrix") {
  const Mesh tri = dpg::testing::single_triangle({Vertex{0.1, 0.2}, Vertex{1.3, 0.4}, Vertex{0.5, 1.1}});
  const double area = tri.area(0);
  for (const auto& trial : kTrials) {
    const LocalAssembler a(trial, ProblemKind::ReactionDiffusion);
    const Eigen::MatrixXd g = a.gram(geometry(tri));
    const Eigen::VectorXd v1 = constant_test(a, 0), tx = constant_test(a, 1);
    CHECK(rel_diff(v1.dot(g * v1), area) < 1e-13);
    CHECK(rel_diff(tx.dot(g * tx), area) < 1e-13);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-14 * g.cwiseAbs().maxCoeff());
  }
  std::mt19937 rng(17);
  for (int i = 0; i < 10; ++i) {
    const Mesh m = dpg::testing::single_triangle(dpg::testing::random_triangle(rng));
    for (const auto& trial : kTrials) {
      const LocalAssembler a(trial, ProblemKind::Poisson);
      const Eigen::MatrixXd g = a.gram(geometry(m));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
      const Eigen::MatrixXd r = a.gram_factor(geometry(m));
      CHECK((r.transpose() * r - g).cwiseAbs().maxCoeff() < 1e-12 * g.cwiseAbs().maxCoeff());
      CHECK(r.isUpperTriangular());
    }
  }
}

TEST_CASE("coupling entries") {
  const Mesh tri = dpg::testing::single_triangle({Vertex{0.0, 0.0}, Vertex{2.0, 0.5}, Vertex{0.3, 1.0}});
  const double area = tri.area(0);
  const TrialSpace trial{TrialKind::Standard, 1};
  Eigen::VectorXd u1 = Eigen::VectorXd::Zero(LocalLayout(trial).size());
  u1[0] = 1.0 / std::sqrt(2.0);
  {
    const LocalAssembler a(trial, ProblemKind::ReactionDiffusion);
    CHECK(rel_diff(constant_test(a, 0).dot(a.coupling(geometry(tri)) * u1), area) < 1e-13);
  }
  {
    const LocalAssembler a(trial, ProblemKind::Poisson);
    CHECK(std::abs(constant_test(a, 0).dot(a.coupling(geometry(tri)) * u1)) < 1e-14);
  }
}

TEST_CASE("exact solutions have zero local residual") {
  std::mt19937 rng(23);
  const ScalarField u = [](double x, double y) { return x + y; };
  const VectorField grad = [](double, double) { return Eigen::Vector2d(1.0, 1.0); };
  for (int i = 0; i < 5; ++i) {
    const Mesh m = dpg::testing::single_triangle(dpg::testing::random_triangle(rng));
    const auto g = geometry(m);
    for (const auto& trial : {TrialSpace{TrialKind::Standard, 1}, TrialSpace{TrialKind::Augmented, 0},
                              TrialSpace{TrialKind::Standard, 2}, TrialSpace{TrialKind::Augmented, 2}}) {
      {
        const LocalAssembler a(trial, ProblemKind::Poisson);
        const Eigen::VectorXd x = a.interpolate(g, u, grad);
        const Eigen::VectorXd res = a.coupling(g) * x - a.load(g, [](double, double) { return 0.0; });
        CHECK(res.cwiseAbs().maxCoeff() < 1e-12);
      }
      {
        // -Δu + u = u for affine u
        const LocalAssembler a(trial, ProblemKind::ReactionDiffusion);
        const Eigen::VectorXd x = a.interpolate(g, u, grad);
        const Eigen::VectorXd res = a.coupling(g) * x - a.load(g, u);
        CHECK(res.cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("load vector") {
  const Mesh ref = dpg::testing::reference_triangle();
  const LocalAssembler a(TrialSpace{TrialKind::Standard, 0}, ProblemKind::ReactionDiffusion);
  const auto g = geometry(ref);
  CHECK(a.load(g, [](double, double) { return 0.0; }).isZero(0.0));
  const Eigen::VectorXd one = a.load(g, [](double, double) { return 1.0; });
  CHECK(constant_test(a, 0).dot(one) == doctest::Approx(0.5).epsilon(1e-14));
  const Eigen::VectorXd fx = a.load(g, [](double x, double) { return x; });
  CHECK(constant_test(a, 0).dot(fx) == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(fx.tail(2 * a.test_basis().dim()).isZero(0.0));
}

TEST_CASE("static condensation") {
  SUBCASE("hand example") {
    LocalSystem s;
    s.gram = Eigen::MatrixXd::Identity(2, 2);
    s.coupling = Eigen::MatrixXd(2, 1);
    s.coupling << 1.0, 0.0;
    s.load = Eigen::Vector2d(1.0, 0.0);
    const CondensedSystem c = condense(s);
    CHECK(c.matrix(0, 0) == doctest::Approx(1.0));
    CHECK(c.rhs[0] == doctest::Approx(1.0));
    s.gram_factor = Eigen::MatrixXd::Identity(2, 2);
    CHECK(condense(s).matrix(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("indefinite Gram is rejected") {
    LocalSystem s;
    s.gram = -Eigen::MatrixXd::Identity(2, 2);
    s.coupling = Eigen::MatrixXd::Ones(2, 1);
    s.load = Eigen::Vector2d::Zero();
    CHECK_THROWS_AS(condense(s), SolverError);
  }
  SUBCASE("element systems") {
    std::mt19937 rng(29);
    for (int i = 0; i < 5; ++i) {
      const Mesh m = dpg::testing::single_triangle(dpg::testing::random_triangle(rng));
      const LocalAssembler a(TrialSpace{TrialKind::Augmented, 1}, ProblemKind::ReactionDiffusion);
      const LocalSystem s = a.local_system(geometry(m), [](double x, double y) { return x * y; });
      const CondensedSystem c = condense(s);
      CHECK((c.matrix - c.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-13 * c.matrix.cwiseAbs().maxCoeff());
      // the factored and the plain Cholesky path agree
      LocalSystem plain = s;
      plain.gram_factor.resize(0, 0);
      const CondensedSystem d = condense(plain);
      CHECK((c.matrix - d.matrix).cwiseAbs().maxCoeff() < 1e-10 * c.matrix.cwiseAbs().maxCoeff());
      CHECK((c.rhs - d.rhs).cwiseAbs().maxCoeff() < 1e-10 * c.rhs.cwiseAbs().maxCoeff());
      CHECK((c.matrix * Eigen::VectorXd::Zero(c.matrix.cols())).isZero(0.0));
    }
  }
  SUBCASE("tiny elements stay factorizable") {
    const double s = 1e-9;
    const Mesh m = dpg::testing::single_triangle({Vertex{0, 0}, Vertex{s, 0}, Vertex{0.3 * s, 0.8 * s}});
    const LocalAssembler a(TrialSpace{TrialKind::Standard, 2}, ProblemKind::Poisson);
    const CondensedSystem c = condense(a.local_system(geometry(m), [](double, double) { return 1.0; }));
    CHECK(c.matrix.allFinite());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.matrix);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10 * eig.eigenvalues().maxCoeff());
  }
}

TEST_CASE("dof map") {
  const Mesh m = unit_square_mesh(1);
  const DofMap d0(m, TrialSpace{TrialKind::Standard, 0});
  // u 2, sigma 4, no interior vertices or bubbles, 5 flux dofs
  CHECK(d0.num_free() == 11);
  CHECK(d0.num_constrained() == 4);
  const Mesh m2 = unit_square_mesh(2);
  for (const auto& trial : kTrials) {
    const DofMap d(m2, trial);
    const LocalLayout l(trial);
    const int nt = m2.num_triangles(), ne = m2.num_edges();
    int interior_vertices = 0, interior_edges = 0;
    for (int v = 0; v < m2.num_vertices(); ++v) interior_vertices += d.constrained_vertex(v) < 0;
    for (const auto& e : m2.edges()) interior_edges += !e.boundary;
    CHECK(d.num_free() == nt * (l.n_u + 2 * l.n_sigma) + interior_vertices + interior_edges * l.n_bubble + ne * l.n_flux);
    CHECK(d.block_offset_sigma() == nt * l.n_u);
    CHECK(d.block_offset_trace() == nt * (l.n_u + 2 * l.n_sigma));
    std::vector<int> seen(d.num_free(), 0);
    for (int t = 0; t < nt; ++t) {
      for (int id : d.element_dofs(t)) {
        if (id >= 0) {
          REQUIRE(id < d.num_free());
          ++seen[id];
        } else {
          CHECK(-(id + 1) < d.num_constrained());
        }
      }
    }
    for (int c : seen) CHECK(c >= 1);
    // flux signs are opposite across interior edges
    for (int e = 0; e < ne; ++e) {
      const auto& edge = m2.edges()[e];
      if (edge.boundary) continue;
      int signs[2];
      for (int s = 0; s < 2; ++s) {
        const int t = edge.elements[s];
        for (int k = 0; k < 3; ++k) {
          if (m2.triangle_edge(t, k) == e) signs[s] = d.edge_sign(t, k);
        }
      }
      CHECK(signs[0] == -signs[1]);
    }
  }
}

TEST_CASE("zero data gives the zero solution") {
  const Mesh m = unit_square_mesh(3);
  const ScalarField zero = [](double, double) { return 0.0; };
  for (const auto& trial : kTrials) {
    const Solution s = assemble_solve(m, trial, ProblemKind::ReactionDiffusion, zero, zero);
    CHECK(s.free_values.isZero(0.0));
    for (const auto& eps : s.representers) CHECK(eps.isZero(0.0));
    CHECK(estimator(s, m).eta == 0.0);
  }
}

TEST_CASE("affine Poisson solution is reproduced") {
  const ManufacturedProblem p = affine_poisson();
  const Mesh m = refine_marked(unit_square_mesh(2), std::vector<int>{0, 5});
  for (const auto& trial : {TrialSpace{TrialKind::Augmented, 0}, TrialSpace{TrialKind::Standard, 1},
                            TrialSpace{TrialKind::Augmented, 1}}) {
    const Solution s = assemble_solve(m, trial, p.kind, p.f, p.dirichlet);
    const Estimate e = estimator(s, m);
    const ErrorReport r = error_report(m, s, nullptr, p, e.eta);
    CHECK(r.err_u <= 1e-8);
    CHECK(r.err_sigma <= 1e-8);
    CHECK(e.eta <= 1e-8);
  }
}

TEST_CASE("Dirichlet trace values") {
  const ManufacturedProblem p = affine_poisson();
  const Mesh m = unit_square_mesh(2);
  const TrialSpace trial{TrialKind::Standard, 1};
  const Solution s = assemble_solve(m, trial, p.kind, p.f, p.dirichlet);
  const LocalLayout l(trial);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Eigen::VectorXd x = s.element_values(t);
    for (int k = 0; k < 3; ++k) {
      const int v = m.triangles()[t].v[k];
      if (s.dofs.constrained_vertex(v) < 0) continue;
      CHECK(x[l.vertex_offset() + k] == doctest::Approx(p.u(m.vertices()[v].x, m.vertices()[v].y)).epsilon(1e-14));
    }
  }
}

TEST_CASE("Galerkin orthogonality and estimator consistency") {
  const ManufacturedProblem sq = square_smooth();
  const ManufacturedProblem ls = lshape_singular();
  const Mesh msq = refine_marked(unit_square_mesh(2), std::vector<int>{1, 2, 6});
  const Mesh mls = refine_uniform(lshape_mesh());
  for (const auto& trial : kTrials) {
    for (const auto* prob : {&sq, &ls}) {
      const Mesh& m = prob == &sq ? msq : mls;
      const Solution s = assemble_solve(m, trial, prob->kind, prob->f, prob->dirichlet);
      CHECK(s.diagnostics.orthogonality_defect <= 1e-8 * s.diagnostics.orthogonality_scale);
      const Estimate e = estimator(s, m);
      double sum = 0.0;
      for (double v : e.local) sum += v * v;
      CHECK(rel_diff(e.eta, std::sqrt(sum)) < 1e-13);
      const LocalAssembler a(trial, prob->kind);
      for (int t = 0; t < m.num_triangles(); t += 3) {
        const double direct = representer_norm_sq(a, ElementGeometry::of(m, t), s.representers[t]);
        CHECK(rel_diff(direct, e.local[t] * e.local[t]) < 1e-12);
      }
    }
  }
}

TEST_CASE("iterative and direct solvers agree") {
  const ManufacturedProblem p = square_smooth();
  const Mesh m = unit_square_mesh(4);
  const TrialSpace trial{TrialKind::Standard, 1};
  SolverOptions cg;
  cg.solver = LinearSolverKind::ConjugateGradient;
  const Solution a = assemble_solve(m, trial, p.kind, p.f, p.dirichlet);
  const Solution b = assemble_solve(m, trial, p.kind, p.f, p.dirichlet, cg);
  CHECK(b.diagnostics.method == "conjugate-gradient");
  CHECK((a.free_values - b.free_values).cwiseAbs().maxCoeff() < 1e-7 * a.free_values.cwiseAbs().maxCoeff());
  CHECK(b.diagnostics.orthogonality_defect <= 1e-8 * b.diagnostics.orthogonality_scale);
}

TEST_CASE("sequential and threaded assembly agree bitwise") {
  const ManufacturedProblem p = lshape_singular();
  const Mesh m = refine_uniform(refine_uniform(lshape_mesh()));
  SolverOptions seq;
  seq.sequential = true;
  const Solution a = assemble_solve(m, TrialSpace{TrialKind::Standard, 1}, p.kind, p.f, p.dirichlet, seq);
  const Solution b = assemble_solve(m, TrialSpace{TrialKind::Standard, 1}, p.kind, p.f, p.dirichlet);
  CHECK(a.free_values == b.free_values);
}

TEST_CASE("estimator decreases under uniform refinement on the smooth problem") {
  const ManufacturedProblem p = square_smooth();
  for (const auto& trial : {TrialSpace{TrialKind::Standard, 0}, TrialSpace{TrialKind::Augmented, 1}}) {
    Mesh m = unit_square_mesh(2);
    double last = INFINITY;
    for (int level = 0; level < 4; ++level) {
      if (level > 0) m = refine_uniform(m);
      const double eta = estimator(assemble_solve(m, trial, p.kind, p.f, p.dirichlet), m).eta;
      CHECK(eta < last);
      last = eta;
    }
  }
}
