#include "dpg/basis.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace dpg {

void legendre(int n, double x, double* p, double* dp) {
  p[0] = 1.0;
  if (dp) dp[0] = 0.0;
  if (n == 0) return;
  p[1] = x;
  if (dp) dp[1] = 1.0;
  for (int k = 2; k <= n; ++k) {
    p[k] = ((2.0 * k - 1.0) * x * p[k - 1] - (k - 1.0) * p[k - 2]) / k;
    if (dp) dp[k] = dp[k - 2] + (2.0 * k - 1.0) * p[k - 1];
  }
}

ScalarBasis::ScalarBasis(int degree) : degree_(degree), dim_(scalar_dim(degree)) {
  if (degree < 0) throw std::invalid_argument("ScalarBasis: negative degree");
  for (int total = 0; total <= degree; ++total) {
    for (int b = 0; b <= total; ++b) exponents_.push_back({total - b, b});
  }
  const QuadratureRule rule = triangle_quadrature(2 * degree);
  raw_mass_ = Eigen::MatrixXd::Zero(dim_, dim_);
  Eigen::VectorXd v(dim_), gx(dim_), gy(dim_);
  for (int q = 0; q < rule.size(); ++q) {
    raw_eval(rule.points[q][0], rule.points[q][1], v.data(), gx.data(), gy.data());
    raw_mass_.noalias() += rule.weights[q] * v * v.transpose();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(raw_mass_);
  if (llt.info() != Eigen::Success) throw std::runtime_error("ScalarBasis: reference mass matrix not SPD");
  const Eigen::MatrixXd lower = llt.matrixL();
  transform_ = lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(dim_, dim_));
}

namespace {

// Jacobi P_n^{(alpha,0)}(w) and derivatives, n = 0..N
void jacobi(int N, double alpha, double w, double* p, double* dp) {
  p[0] = 1.0;
  dp[0] = 0.0;
  if (N == 0) return;
  p[1] = 0.5 * ((alpha + 2.0) * w + alpha);
  dp[1] = 0.5 * (alpha + 2.0);
  for (int n = 2; n <= N; ++n) {
    const double c = 2.0 * n + alpha;
    const double a1 = 2.0 * n * (n + alpha) * (c - 2.0);
    const double a2 = (c - 1.0) * alpha * alpha;
    const double a3 = (c - 2.0) * (c - 1.0) * c;
    const double a4 = 2.0 * (n + alpha - 1.0) * (n - 1.0) * c;
    p[n] = ((a2 + a3 * w) * p[n - 1] - a4 * p[n - 2]) / a1;
    dp[n] = ((a2 + a3 * w) * dp[n - 1] + a3 * p[n - 1] - a4 * dp[n - 2]) / a1;
  }
}

}  // namespace

// Collapsed-coordinate (Dubiner) products, orthogonal on the reference triangle:
// t^a P_a((2x - t)/t) P_b^{(2a+1,0)}(2y - 1) with t = 1 - y. The scaled Legendre
// factor is a polynomial and obeys (n+1) q_{n+1} = (2n+1) z q_n - n t^2 q_{n-1}.
void ScalarBasis::raw_eval(double x, double y, double* v, double* gx, double* gy) const {
  constexpr int kMax = 32;
  std::array<double, kMax> q{}, qx{}, qy{}, jp{}, jdp{};
  const double t = 1.0 - y, z = 2.0 * x - t;
  q[0] = 1.0;
  if (degree_ >= 1) {
    q[1] = z;
    qx[1] = 2.0;
    qy[1] = 1.0;
  }
  for (int n = 1; n < degree_; ++n) {
    q[n + 1] = ((2.0 * n + 1.0) * z * q[n] - n * t * t * q[n - 1]) / (n + 1.0);
    qx[n + 1] = ((2.0 * n + 1.0) * (2.0 * q[n] + z * qx[n]) - n * t * t * qx[n - 1]) / (n + 1.0);
    qy[n + 1] = ((2.0 * n + 1.0) * (q[n] + z * qy[n]) - n * (-2.0 * t * q[n - 1] + t * t * qy[n - 1])) / (n + 1.0);
  }
  int last_a = -1;
  for (int i = 0; i < dim_; ++i) {
    const auto [a, b] = exponents_[i];
    if (a != last_a) {
      jacobi(degree_ - a, 2.0 * a + 1.0, 2.0 * y - 1.0, jp.data(), jdp.data());
      last_a = a;
    }
    v[i] = q[a] * jp[b];
    if (gx) {
      gx[i] = qx[a] * jp[b];
      gy[i] = qy[a] * jp[b] + 2.0 * q[a] * jdp[b];
    }
  }
}

BasisTable ScalarBasis::evaluate(const std::vector<std::array<double, 2>>& points) const {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd v(dim_, n), gx(dim_, n), gy(dim_, n);
  for (Eigen::Index q = 0; q < n; ++q) raw_eval(points[q][0], points[q][1], v.col(q).data(), gx.col(q).data(), gy.col(q).data());
  return {transform_ * v, transform_ * gx, transform_ * gy};
}

Eigen::VectorXd ScalarBasis::values_at(double x, double y) const {
  Eigen::VectorXd v(dim_);
  raw_eval(x, y, v.data(), nullptr, nullptr);
  return transform_ * v;
}

Eigen::VectorXd EdgeBasis::values_at(double s) const {
  Eigen::VectorXd p(degree_ + 1);
  legendre(degree_, 2.0 * s - 1.0, p.data());
  for (int k = 0; k <= degree_; ++k) p[k] *= std::sqrt(2.0 * k + 1.0);
  return p;
}

ElementMap::ElementMap(const Vertex& a, const Vertex& b, const Vertex& c) {
  origin_ = {a.x, a.y};
  jacobian_ << b.x - a.x, c.x - a.x, b.y - a.y, c.y - a.y;
  det_ = jacobian_.determinant();
  if (!(det_ > 0.0)) throw std::invalid_argument("ElementMap: non-positive Jacobian determinant");
  inverse_ = jacobian_.inverse();
  inverse_transpose_ = inverse_.transpose();
}

ElementMap ElementMap::of(const Mesh& mesh, int t) {
  const auto& v = mesh.triangles()[t].v;
  return {mesh.vertices()[v[0]], mesh.vertices()[v[1]], mesh.vertices()[v[2]]};
}

void physical_gradients(const BasisTable& table, const ElementMap& map, Eigen::MatrixXd& gx, Eigen::MatrixXd& gy) {
  const Eigen::Matrix2d& k = map.inverse_transpose();
  gx = k(0, 0) * table.dx + k(0, 1) * table.dy;
  gy = k(1, 0) * table.dx + k(1, 1) * table.dy;
}

Eigen::VectorXd project_l2(const ScalarBasis& basis, const QuadratureRule& rule, const ScalarField& f,
                           const ElementMap& map) {
  const BasisTable table = basis.evaluate(rule.points);
  Eigen::VectorXd weighted(rule.size());
  Eigen::VectorXd fw(rule.size());
  for (int q = 0; q < rule.size(); ++q) {
    const Eigen::Vector2d x = map.map(rule.points[q][0], rule.points[q][1]);
    weighted[q] = rule.weights[q] * map.det();
    fw[q] = weighted[q] * f(x[0], x[1]);
  }
  const Eigen::MatrixXd mass = table.values * weighted.asDiagonal() * table.values.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(mass);
  if (llt.info() != Eigen::Success) throw std::runtime_error("project_l2: local mass matrix is singular");
  return llt.solve(table.values * fw);
}

double evaluate_expansion(const ScalarBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& coefficients, double xi,
                          double eta) {
  return basis.values_at(xi, eta).dot(coefficients);
}

}  // namespace dpg
