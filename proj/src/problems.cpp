#include "dpg/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dpg {

Mesh ManufacturedProblem::initial_mesh(int square_subdivisions) const {
  return domain == Domain::Square ? unit_square_mesh(square_subdivisions) : lshape_mesh();
}

ManufacturedProblem square_smooth() {
  ManufacturedProblem p;
  p.name = "square";
  p.domain = Domain::Square;
  p.kind = ProblemKind::ReactionDiffusion;
  p.regularity = Regularity::Smooth;
  p.u = [](double x, double y) { return x * (1.0 - x) * y * (1.0 - y); };
  p.grad_u = [](double x, double y) {
    return Eigen::Vector2d((1.0 - 2.0 * x) * y * (1.0 - y), x * (1.0 - x) * (1.0 - 2.0 * y));
  };
  p.f = [](double x, double y) {
    return 2.0 * x * (1.0 - x) + 2.0 * y * (1.0 - y) + x * (1.0 - x) * y * (1.0 - y);
  };
  p.dirichlet = [](double, double) { return 0.0; };
  return p;
}

namespace {

// Polar angle θ in [0, 2π) of the mesh; Ω sees θ in [0, 3π/2] so the cut
// lies on the slit.
double mesh_angle(double x, double y) {
  double theta = std::atan2(y, x);
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  return theta;
}

// The solution's φ vanishes along the positive y-axis (θ = π/2), i.e. φ in
// [-π/2, π]. This is plain atan2 on the L-shape with the third quadrant removed,
// rotated onto our mesh. Putting φ = 0 on a corner edge instead removes the
// component along r^{2/3} sin(2θ/3) and changes the L^2 rates.
constexpr double kPhiOrigin = std::numbers::pi / 2.0;

}  // namespace

ManufacturedProblem lshape_singular() {
  ManufacturedProblem p;
  p.name = "lshape";
  p.domain = Domain::LShape;
  p.kind = ProblemKind::Poisson;
  p.regularity = Regularity::CornerSingular;
  p.u = [](double x, double y) {
    const double r = std::hypot(x, y);
    if (r == 0.0) return 0.0;
    return std::pow(r, 2.0 / 3.0) * std::cos(2.0 / 3.0 * (mesh_angle(x, y) - kPhiOrigin));
  };
  p.grad_u = [](double x, double y) {
    const double r = std::hypot(x, y);
    if (r == 0.0) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      return Eigen::Vector2d(nan, nan);
    }
    const double theta = mesh_angle(x, y);
    const double phi = theta - kPhiOrigin;
    const double scale = 2.0 / 3.0 * std::pow(r, -1.0 / 3.0);
    const double radial = scale * std::cos(2.0 * phi / 3.0);
    const double angular = -scale * std::sin(2.0 * phi / 3.0);
    const double c = std::cos(theta), s = std::sin(theta);
    return Eigen::Vector2d(radial * c - angular * s, radial * s + angular * c);
  };
  p.f = [](double, double) { return 0.0; };
  p.dirichlet = p.u;
  p.singular_point = Eigen::Vector2d::Zero();
  return p;
}

namespace {

// Local index of the vertex at `point`, or -1.
int singular_vertex(const Mesh& mesh, int t, const std::optional<Eigen::Vector2d>& point) {
  if (!point) return -1;
  for (int k = 0; k < 3; ++k) {
    const Vertex& v = mesh.vertices()[mesh.triangles()[t].v[k]];
    if (v.x == (*point)[0] && v.y == (*point)[1]) return k;
  }
  return -1;
}

}  // namespace

ErrorReport error_report(const Mesh& mesh, const Solution& solution, const PostprocessedField* postprocessed,
                         const ManufacturedProblem& problem, double eta, int quadrature_bump) {
  const int p = solution.trial.p;
  const QuadratureRule rule = triangle_quadrature(std::min(2 * (p + 3) + 4 + quadrature_bump, kMaxQuadratureDegree));
  const ScalarBasis u_basis(solution.trial.u_degree());
  const ScalarBasis sigma_basis(p);
  std::optional<ScalarBasis> post_basis;
  if (postprocessed) post_basis.emplace(postprocessed->degree);
  const Eigen::MatrixXd u_values = u_basis.evaluate(rule.points).values;
  const Eigen::MatrixXd sigma_values = sigma_basis.evaluate(rule.points).values;
  Eigen::MatrixXd post_values;
  if (postprocessed) post_values = post_basis->evaluate(rule.points).values;

  const int ns = sigma_basis.dim();
  double eu = 0.0, es = 0.0, ep = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ElementMap map = ElementMap::of(mesh, t);
    const Eigen::VectorXd uc = solution.u_coefficients(t);
    const Eigen::VectorXd sc = solution.sigma_coefficients(t);
    const int k = singular_vertex(mesh, t, problem.singular_point);

    Eigen::RowVectorXd uh, sx, sy, up;
    ElementMap qmap = map;
    if (k < 0) {
      uh = uc.transpose() * u_values;
      sx = sc.head(ns).transpose() * sigma_values;
      sy = sc.tail(ns).transpose() * sigma_values;
      if (postprocessed) up = postprocessed->coefficients[t].transpose() * post_values;
    } else {
      // rotate so the singular vertex lands on reference (1,0), where the rule collapses
      const auto& v = mesh.triangles()[t].v;
      const auto& xs = mesh.vertices();
      qmap = ElementMap(xs[v[(k + 2) % 3]], xs[v[k]], xs[v[(k + 1) % 3]]);
      const int nq = rule.size();
      uh.resize(nq), sx.resize(nq), sy.resize(nq), up.resize(nq);
      for (int q = 0; q < nq; ++q) {
        const Eigen::Vector2d r = map.inverse(qmap.map(rule.points[q][0], rule.points[q][1]));
        uh[q] = u_basis.values_at(r[0], r[1]).dot(uc);
        const Eigen::VectorXd sv = sigma_basis.values_at(r[0], r[1]);
        sx[q] = sv.dot(sc.head(ns));
        sy[q] = sv.dot(sc.tail(ns));
        if (postprocessed) up[q] = post_basis->values_at(r[0], r[1]).dot(postprocessed->coefficients[t]);
      }
    }
    for (int q = 0; q < rule.size(); ++q) {
      const Eigen::Vector2d x = qmap.map(rule.points[q][0], rule.points[q][1]);
      const double w = rule.weights[q] * qmap.det();
      const double u = problem.u(x[0], x[1]);
      const Eigen::Vector2d g = problem.grad_u(x[0], x[1]);
      eu += w * (u - uh[q]) * (u - uh[q]);
      es += w * ((g[0] - sx[q]) * (g[0] - sx[q]) + (g[1] - sy[q]) * (g[1] - sy[q]));
      if (postprocessed) ep += w * (u - up[q]) * (u - up[q]);
    }
  }
  ErrorReport report;
  report.err_u = std::sqrt(eu);
  report.err_sigma = std::sqrt(es);
  if (postprocessed) report.err_u_post = std::sqrt(ep);
  report.eta = eta;
  return report;
}

}  // namespace dpg
