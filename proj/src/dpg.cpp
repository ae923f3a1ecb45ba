#include "dpg/dpg.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace dpg {

namespace {

constexpr int kAssemblyBlock = 512;

// Runs body(t) for t in [begin, end), in parallel unless `sequential`.
// The first exception thrown by any iteration is rethrown on the caller.
template <class Body>
void for_each_element(int begin, int end, bool sequential, Body&& body) {
  std::exception_ptr error;
#pragma omp parallel for schedule(static) if (!sequential)
  for (int t = begin; t < end; ++t) {
    try {
      body(t);
    } catch (...) {
#pragma omp critical(dpg_for_each_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

std::array<Eigen::Vector2d, 3> reference_vertices() {
  return {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 1.0)};
}

// Edge modes of the continuous trace: 4 s (1-s) P_m(2s-1), m < n.
Eigen::VectorXd bubbles(int n, double s) {
  Eigen::VectorXd b(n);
  if (n == 0) return b;
  std::array<double, 32> p{};
  legendre(n - 1, 2.0 * s - 1.0, p.data());
  for (int m = 0; m < n; ++m) b[m] = 4.0 * s * (1.0 - s) * p[m];
  return b;
}

// L^2 projection of g - (linear interpolant) onto the edge modes, on the
// segment a -> b parameterized by s in [0,1].
Eigen::VectorXd project_edge_modes(int n, const Eigen::Vector2d& a, const Eigen::Vector2d& b, double ga, double gb,
                                   const ScalarField& g, const QuadratureRule& rule) {
  if (n == 0) return {};
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int q = 0; q < rule.size(); ++q) {
    const double s = rule.points[q][0];
    const Eigen::Vector2d x = a + s * (b - a);
    const Eigen::VectorXd bq = bubbles(n, s);
    mass.noalias() += rule.weights[q] * bq * bq.transpose();
    rhs.noalias() += rule.weights[q] * (g(x[0], x[1]) - ((1.0 - s) * ga + s * gb)) * bq;
  }
  return mass.llt().solve(rhs);
}

}  // namespace

std::string to_string(TrialKind kind) { return kind == TrialKind::Standard ? "standard" : "augmented"; }
std::string to_string(ProblemKind kind) { return kind == ProblemKind::Poisson ? "poisson" : "reaction-diffusion"; }

LocalLayout::LocalLayout(TrialSpace trial)
    : n_u(scalar_dim(trial.u_degree())), n_sigma(scalar_dim(trial.p)), n_bubble(trial.p), n_flux(trial.p + 1) {
  if (trial.p < 0) throw std::invalid_argument("trial space: polynomial degree must be >= 0");
}

DofMap::DofMap(const Mesh& mesh, TrialSpace trial) : trial_(trial), layout_(trial) {
  const int nt = mesh.num_triangles();
  const int nv = mesh.num_vertices();
  const int ne = mesh.num_edges();

  std::vector<char> boundary_vertex(static_cast<std::size_t>(nv), 0);
  for (const auto& e : mesh.edges()) {
    if (e.boundary) boundary_vertex[e.v[0]] = boundary_vertex[e.v[1]] = 1;
  }

  offset_sigma_ = nt * layout_.n_u;
  offset_trace_ = offset_sigma_ + nt * 2 * layout_.n_sigma;

  int next_free = offset_trace_;
  std::vector<int> free_vertex(static_cast<std::size_t>(nv), -1);
  constrained_vertex_.assign(static_cast<std::size_t>(nv), -1);
  for (int v = 0; v < nv; ++v) {
    if (boundary_vertex[v]) {
      constrained_vertex_[v] = num_constrained_++;
    } else {
      free_vertex[v] = next_free++;
    }
  }
  std::vector<int> free_edge(static_cast<std::size_t>(ne), -1);
  constrained_edge_.assign(static_cast<std::size_t>(ne), -1);
  for (int e = 0; e < ne; ++e) {
    if (layout_.n_bubble == 0) continue;
    if (mesh.edges()[e].boundary) {
      constrained_edge_[e] = num_constrained_;
      num_constrained_ += layout_.n_bubble;
    } else {
      free_edge[e] = next_free;
      next_free += layout_.n_bubble;
    }
  }
  offset_flux_ = next_free;
  num_free_ = offset_flux_ + ne * layout_.n_flux;

  const int n_local = layout_.size();
  local_to_global_.assign(static_cast<std::size_t>(nt) * n_local, 0);
  edge_signs_.resize(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    int* dofs = local_to_global_.data() + static_cast<std::size_t>(t) * n_local;
    const auto& tv = mesh.triangles()[t].v;
    for (int j = 0; j < layout_.n_u; ++j) dofs[j] = t * layout_.n_u + j;
    for (int c = 0; c < 2; ++c) {
      for (int j = 0; j < layout_.n_sigma; ++j) {
        dofs[layout_.sigma_offset(c) + j] = offset_sigma_ + (2 * t + c) * layout_.n_sigma + j;
      }
    }
    for (int i = 0; i < 3; ++i) {
      const int v = tv[i];
      dofs[layout_.vertex_offset() + i] = free_vertex[v] >= 0 ? free_vertex[v] : -(constrained_vertex_[v] + 1);
    }
    for (int k = 0; k < 3; ++k) {
      const int e = mesh.triangle_edge(t, k);
      edge_signs_[t][k] = tv[(k + 1) % 3] < tv[(k + 2) % 3] ? 1 : -1;
      for (int m = 0; m < layout_.n_bubble; ++m) {
        dofs[layout_.bubble_offset(k) + m] = free_edge[e] >= 0 ? free_edge[e] + m : -(constrained_edge_[e] + m + 1);
      }
      for (int m = 0; m < layout_.n_flux; ++m) dofs[layout_.flux_offset(k) + m] = offset_flux_ + e * layout_.n_flux + m;
    }
  }
}

ElementGeometry ElementGeometry::of(const Mesh& mesh, int t) {
  ElementGeometry g;
  const auto& v = mesh.triangles()[t].v;
  for (int i = 0; i < 3; ++i) g.vertices[i] = mesh.vertices()[v[i]];
  g.map = ElementMap(g.vertices[0], g.vertices[1], g.vertices[2]);
  for (int k = 0; k < 3; ++k) g.edge_sign[k] = v[(k + 1) % 3] < v[(k + 2) % 3] ? 1 : -1;
  return g;
}

CondensedSystem condense(const LocalSystem& local) {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  if (local.gram_factor.size() > 0) {
    const auto lower = local.gram_factor.transpose().triangularView<Eigen::Lower>();
    x = lower.solve(local.coupling);
    y = lower.solve(local.load);
  } else {
    Eigen::LLT<Eigen::MatrixXd> llt(local.gram);
    if (llt.info() != Eigen::Success) throw SolverError("condense: test Gram matrix is not positive definite");
    x = llt.matrixL().solve(local.coupling);
    y = llt.matrixL().solve(local.load);
  }
  if (!x.allFinite() || !y.allFinite()) throw SolverError("condense: singular test Gram factor");
  CondensedSystem out;
  out.matrix.noalias() = x.transpose() * x;
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  out.rhs.noalias() = x.transpose() * y;
  return out;
}

LocalAssembler::LocalAssembler(TrialSpace trial, ProblemKind problem, int enrichment, int quadrature_bump)
    : trial_(trial),
      problem_(problem),
      enrichment_(enrichment),
      layout_(trial),
      test_basis_(trial.p + enrichment),
      u_basis_(trial.u_degree()),
      sigma_basis_(trial.p),
      flux_basis_(trial.p) {
  if (enrichment < 1) throw std::invalid_argument("LocalAssembler: test enrichment must be >= 1");
  if (quadrature_bump < 0) throw std::invalid_argument("LocalAssembler: negative quadrature bump");
  const int degree = 2 * (test_basis_.degree() + 1) + quadrature_bump;
  volume_rule_ = triangle_quadrature(degree);
  edge_rule_ = edge_quadrature(degree);
  test_table_ = test_basis_.evaluate(volume_rule_.points);
  u_table_ = u_basis_.evaluate(volume_rule_.points);
  sigma_table_ = sigma_basis_.evaluate(volume_rule_.points);

  const auto ref = reference_vertices();
  for (int k = 0; k < 3; ++k) {
    for (int flip = 0; flip < 2; ++flip) {
      const Eigen::Vector2d& a = flip == 0 ? ref[(k + 1) % 3] : ref[(k + 2) % 3];
      const Eigen::Vector2d& b = flip == 0 ? ref[(k + 2) % 3] : ref[(k + 1) % 3];
      EdgeTable& table = edge_tables_[2 * k + flip];
      for (int q = 0; q < edge_rule_.size(); ++q) {
        const Eigen::Vector2d x = a + edge_rule_.points[q][0] * (b - a);
        table.ref.push_back({x[0], x[1]});
      }
      table.test = test_basis_.evaluate(table.ref);
    }
  }
  bubble_table_.resize(layout_.n_bubble, edge_rule_.size());
  flux_table_.resize(layout_.n_flux, edge_rule_.size());
  for (int q = 0; q < edge_rule_.size(); ++q) {
    bubble_table_.col(q) = bubbles(layout_.n_bubble, edge_rule_.points[q][0]);
    flux_table_.col(q) = flux_basis_.values_at(edge_rule_.points[q][0]);
  }
}

Eigen::VectorXd LocalAssembler::bubble_values(double s) const { return bubbles(layout_.n_bubble, s); }

Eigen::MatrixXd LocalAssembler::gram(const ElementGeometry& element) const {
  const int n = test_basis_.dim();
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(volume_rule_.weights.data(), volume_rule_.size()) *
                            element.map.det();
  Eigen::MatrixXd gx, gy;
  physical_gradients(test_table_, element.map, gx, gy);
  const Eigen::MatrixXd& v = test_table_.values;
  const Eigen::MatrixXd mass = v * w.asDiagonal() * v.transpose();
  const Eigen::MatrixXd kxx = gx * w.asDiagonal() * gx.transpose();
  const Eigen::MatrixXd kyy = gy * w.asDiagonal() * gy.transpose();
  const Eigen::MatrixXd kxy = gx * w.asDiagonal() * gy.transpose();

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  g.block(0, 0, n, n) = mass + kxx + kyy;
  g.block(n, n, n, n) = mass + kxx;
  g.block(2 * n, 2 * n, n, n) = mass + kyy;
  g.block(n, 2 * n, n, n) = kxy;
  g.block(2 * n, n, n, n) = kxy.transpose();
  return g;
}

Eigen::MatrixXd LocalAssembler::gram_factor(const ElementGeometry& element) const {
  const int n = test_basis_.dim();
  const int nq = volume_rule_.size();
  const Eigen::RowVectorXd sw =
      (Eigen::Map<const Eigen::VectorXd>(volume_rule_.weights.data(), nq) * element.map.det()).cwiseSqrt().transpose();
  Eigen::MatrixXd gx, gy;
  physical_gradients(test_table_, element.map, gx, gy);
  const Eigen::MatrixXd v = (test_table_.values.array().rowwise() * sw.array()).transpose();
  const Eigen::MatrixXd dx = (gx.array().rowwise() * sw.array()).transpose();
  const Eigen::MatrixXd dy = (gy.array().rowwise() * sw.array()).transpose();

  // v block: value and gradient rows
  Eigen::MatrixXd a(3 * nq, n);
  a << v, dx, dy;
  // tau block: both components and the divergence
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3 * nq, 2 * n);
  b.block(0, 0, nq, n) = v;
  b.block(nq, n, nq, n) = v;
  b.block(2 * nq, 0, nq, n) = dx;
  b.block(2 * nq, n, nq, n) = dy;

  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  r.topLeftCorner(n, n) = Eigen::HouseholderQR<Eigen::MatrixXd>(a).matrixQR().topRows(n).triangularView<Eigen::Upper>();
  r.bottomRightCorner(2 * n, 2 * n) =
      Eigen::HouseholderQR<Eigen::MatrixXd>(b).matrixQR().topRows(2 * n).triangularView<Eigen::Upper>();
  return r;
}

Eigen::MatrixXd LocalAssembler::coupling(const ElementGeometry& element) const {
  const int n = test_basis_.dim();
  const LocalLayout& lay = layout_;
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(volume_rule_.weights.data(), volume_rule_.size()) *
                            element.map.det();
  Eigen::MatrixXd gx, gy;
  physical_gradients(test_table_, element.map, gx, gy);
  const Eigen::MatrixXd& v = test_table_.values;
  const Eigen::MatrixXd& u = u_table_.values;
  const Eigen::MatrixXd& s = sigma_table_.values;

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3 * n, lay.size());
  // (u, div tau + v) for reaction-diffusion, (u, div tau) for Poisson
  if (problem_ == ProblemKind::ReactionDiffusion) b.block(0, 0, n, lay.n_u) = v * w.asDiagonal() * u.transpose();
  b.block(n, 0, n, lay.n_u) = gx * w.asDiagonal() * u.transpose();
  b.block(2 * n, 0, n, lay.n_u) = gy * w.asDiagonal() * u.transpose();
  // (sigma, tau + grad v)
  const Eigen::MatrixXd vs = v * w.asDiagonal() * s.transpose();
  b.block(0, lay.sigma_offset(0), n, lay.n_sigma) = gx * w.asDiagonal() * s.transpose();
  b.block(0, lay.sigma_offset(1), n, lay.n_sigma) = gy * w.asDiagonal() * s.transpose();
  b.block(n, lay.sigma_offset(0), n, lay.n_sigma) = vs;
  b.block(2 * n, lay.sigma_offset(1), n, lay.n_sigma) = vs;

  // -<u-hat, tau . n_T> - <sigma-hat, v> on each edge, integrated in the
  // global (low -> high) edge parameter
  const int ne = edge_rule_.size();
  for (int k = 0; k < 3; ++k) {
    const int sign = element.edge_sign[k];
    const Vertex& p1 = element.vertices[(k + 1) % 3];
    const Vertex& p2 = element.vertices[(k + 2) % 3];
    const double len = std::hypot(p2.x - p1.x, p2.y - p1.y);
    const Eigen::Vector2d normal((p2.y - p1.y) / len, -(p2.x - p1.x) / len);  // outward for CCW
    const int start = sign > 0 ? (k + 1) % 3 : (k + 2) % 3;
    const int end = sign > 0 ? (k + 2) % 3 : (k + 1) % 3;
    const Eigen::MatrixXd& ve = edge_table(k, sign).test.values;

    Eigen::MatrixXd trace(3 + lay.n_bubble, ne);  // hats at start/end, then edge modes
    trace.setZero();
    Eigen::VectorXd we(ne);
    for (int q = 0; q < ne; ++q) {
      const double sq = edge_rule_.points[q][0];
      we[q] = edge_rule_.weights[q] * len;
      trace(start, q) = 1.0 - sq;
      trace(end, q) = sq;
    }
    if (lay.n_bubble > 0) trace.bottomRows(lay.n_bubble) = bubble_table_;

    const Eigen::MatrixXd vt = ve * we.asDiagonal() * trace.transpose();  // n x (3 + n_bubble)
    b.block(n, lay.vertex_offset(), n, 3) -= normal.x() * vt.leftCols(3);
    b.block(2 * n, lay.vertex_offset(), n, 3) -= normal.y() * vt.leftCols(3);
    if (lay.n_bubble > 0) {
      b.block(n, lay.bubble_offset(k), n, lay.n_bubble) -= normal.x() * vt.rightCols(lay.n_bubble);
      b.block(2 * n, lay.bubble_offset(k), n, lay.n_bubble) -= normal.y() * vt.rightCols(lay.n_bubble);
    }
    b.block(0, lay.flux_offset(k), n, lay.n_flux) -= static_cast<double>(sign) * (ve * we.asDiagonal() * flux_table_.transpose());
  }
  return b;
}

Eigen::VectorXd LocalAssembler::load(const ElementGeometry& element, const ScalarField& f) const {
  const int n = test_basis_.dim();
  Eigen::VectorXd fw(volume_rule_.size());
  for (int q = 0; q < volume_rule_.size(); ++q) {
    const Eigen::Vector2d x = element.map.map(volume_rule_.points[q][0], volume_rule_.points[q][1]);
    fw[q] = volume_rule_.weights[q] * element.map.det() * f(x[0], x[1]);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(3 * n);
  out.head(n) = test_table_.values * fw;
  return out;
}

LocalSystem LocalAssembler::local_system(const ElementGeometry& element, const ScalarField& f) const {
  return {gram(element), gram_factor(element), coupling(element), load(element, f)};
}

Eigen::VectorXd LocalAssembler::interpolate(const ElementGeometry& element, const ScalarField& u,
                                            const VectorField& grad_u) const {
  const LocalLayout& lay = layout_;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(lay.size());
  out.segment(lay.u_offset(), lay.n_u) = project_l2(u_basis_, volume_rule_, u, element.map);
  for (int c = 0; c < 2; ++c) {
    out.segment(lay.sigma_offset(c), lay.n_sigma) =
        project_l2(sigma_basis_, volume_rule_, [&](double x, double y) { return grad_u(x, y)[c]; }, element.map);
  }
  for (int i = 0; i < 3; ++i) out[lay.vertex_offset() + i] = u(element.vertices[i].x, element.vertices[i].y);
  for (int k = 0; k < 3; ++k) {
    const int sign = element.edge_sign[k];
    const int start = sign > 0 ? (k + 1) % 3 : (k + 2) % 3;
    const int end = sign > 0 ? (k + 2) % 3 : (k + 1) % 3;
    const Eigen::Vector2d a(element.vertices[start].x, element.vertices[start].y);
    const Eigen::Vector2d b(element.vertices[end].x, element.vertices[end].y);
    if (lay.n_bubble > 0) {
      out.segment(lay.bubble_offset(k), lay.n_bubble) = project_edge_modes(
          lay.n_bubble, a, b, out[lay.vertex_offset() + start], out[lay.vertex_offset() + end], u, edge_rule_);
    }
    const Eigen::Vector2d tangent = (b - a).normalized();
    const Eigen::Vector2d edge_normal(tangent.y(), -tangent.x());
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(lay.n_flux);
    for (int q = 0; q < edge_rule_.size(); ++q) {
      const double s = edge_rule_.points[q][0];
      const Eigen::Vector2d x = a + s * (b - a);
      coeffs += edge_rule_.weights[q] * grad_u(x[0], x[1]).dot(edge_normal) * flux_table_.col(q);
    }
    out.segment(lay.flux_offset(k), lay.n_flux) = coeffs;
  }
  return out;
}

LocalAssembler::TestValue LocalAssembler::evaluate_test(const ElementGeometry& element,
                                                        const Eigen::VectorXd& coefficients, double xi,
                                                        double eta) const {
  const int n = test_basis_.dim();
  const BasisTable table = test_basis_.evaluate({{xi, eta}});
  Eigen::MatrixXd gx, gy;
  physical_gradients(table, element.map, gx, gy);
  const auto cv = coefficients.segment(0, n);
  const auto cx = coefficients.segment(n, n);
  const auto cy = coefficients.segment(2 * n, n);
  TestValue out;
  out.v = table.values.col(0).dot(cv);
  out.grad_v = {gx.col(0).dot(cv), gy.col(0).dot(cv)};
  out.tau = {table.values.col(0).dot(cx), table.values.col(0).dot(cy)};
  out.div_tau = gx.col(0).dot(cx) + gy.col(0).dot(cy);
  return out;
}

Eigen::VectorXd Solution::element_values(int t) const {
  const auto ids = dofs.element_dofs(t);
  Eigen::VectorXd out(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = ids[i] >= 0 ? free_values[ids[i]] : constrained_values[-ids[i] - 1];
  }
  return out;
}

Eigen::VectorXd Solution::u_coefficients(int t) const {
  const auto& lay = dofs.layout();
  return free_values.segment(static_cast<Eigen::Index>(t) * lay.n_u, lay.n_u);
}

Eigen::VectorXd Solution::sigma_coefficients(int t) const {
  const auto& lay = dofs.layout();
  return free_values.segment(dofs.block_offset_sigma() + static_cast<Eigen::Index>(t) * 2 * lay.n_sigma,
                             2 * lay.n_sigma);
}

Eigen::VectorXd dirichlet_lift(const Mesh& mesh, const DofMap& dofs, const ScalarField& g, int quadrature_degree) {
  Eigen::VectorXd values = Eigen::VectorXd::Zero(dofs.num_constrained());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const int c = dofs.constrained_vertex(v);
    if (c >= 0) values[c] = g(mesh.vertices()[v].x, mesh.vertices()[v].y);
  }
  const int n_bubble = dofs.layout().n_bubble;
  if (n_bubble == 0) return values;
  const QuadratureRule rule = edge_quadrature(quadrature_degree);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const int c = dofs.constrained_edge_offset(e);
    if (c < 0) continue;
    const auto& edge = mesh.edges()[e];
    const Vertex& va = mesh.vertices()[edge.v[0]];
    const Vertex& vb = mesh.vertices()[edge.v[1]];
    const double ga = values[dofs.constrained_vertex(edge.v[0])];
    const double gb = values[dofs.constrained_vertex(edge.v[1])];
    values.segment(c, n_bubble) =
        project_edge_modes(n_bubble, {va.x, va.y}, {vb.x, vb.y}, ga, gb, g, rule);
  }
  return values;
}

Solution assemble_solve(const Mesh& mesh, TrialSpace trial, ProblemKind problem, const ScalarField& f,
                        const ScalarField& dirichlet, const SolverOptions& options) {
  Solution sol;
  sol.trial = trial;
  sol.problem = problem;
  sol.options = options;
  sol.dofs = DofMap(mesh, trial);
  const LocalAssembler assembler(trial, problem, options.enrichment, options.quadrature_bump);
  sol.constrained_values =
      dirichlet_lift(mesh, sol.dofs, dirichlet, 2 * (assembler.test_degree() + 1) + options.quadrature_bump);

  const int nt = mesh.num_triangles();
  const int n_free = sol.dofs.num_free();
  const int n_local = assembler.trial_dim();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_free);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(nt) * n_local * n_local);

  std::vector<CondensedSystem> block(kAssemblyBlock);
  for (int begin = 0; begin < nt; begin += kAssemblyBlock) {
    const int end = std::min(nt, begin + kAssemblyBlock);
    for_each_element(begin, end, options.sequential, [&](int t) {
      block[t - begin] = condense(assembler.local_system(ElementGeometry::of(mesh, t), f));
    });
    for (int t = begin; t < end; ++t) {
      const CondensedSystem& local = block[t - begin];
      const auto ids = sol.dofs.element_dofs(t);
      for (int i = 0; i < n_local; ++i) {
        const int gi = ids[i];
        if (gi < 0) continue;
        rhs[gi] += local.rhs[i];
        for (int j = 0; j < n_local; ++j) {
          const int gj = ids[j];
          if (gj >= 0) {
            triplets.emplace_back(gi, gj, local.matrix(i, j));
          } else {
            rhs[gi] -= local.matrix(i, j) * sol.constrained_values[-gj - 1];
          }
        }
      }
    }
  }

  Eigen::SparseMatrix<double> matrix(n_free, n_free);
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  triplets.clear();
  triplets.shrink_to_fit();

  const double rhs_norm = rhs.norm();
  auto relative_residual = [&](const Eigen::VectorXd& x) {
    return rhs_norm > 0.0 ? (rhs - matrix * x).norm() / rhs_norm : (matrix * x).norm();
  };

  if (options.solver == LinearSolverKind::Direct) {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt(matrix);
    if (llt.info() != Eigen::Success) {
      throw SolverError("assemble_solve: condensed matrix is not positive definite");
    }
    sol.free_values = llt.solve(rhs);
    sol.diagnostics.method = "sparse-cholesky";
    sol.diagnostics.relative_residual = relative_residual(sol.free_values);
    // a couple of refinement sweeps in case the factorization lost digits
    for (int sweep = 0; sweep < 2 && sol.diagnostics.relative_residual > options.tolerance; ++sweep) {
      sol.free_values += llt.solve(rhs - matrix * sol.free_values);
      sol.diagnostics.relative_residual = relative_residual(sol.free_values);
      ++sol.diagnostics.iterations;
    }
    if (sol.diagnostics.relative_residual > options.tolerance) {
      throw SolverError("assemble_solve: direct solve reached relative residual " +
                        std::to_string(sol.diagnostics.relative_residual));
    }
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(options.tolerance);
    cg.setMaxIterations(static_cast<Eigen::Index>(50.0 * std::sqrt(static_cast<double>(n_free))) + 1);
    cg.compute(matrix);
    sol.free_values = cg.solve(rhs);
    sol.diagnostics.method = "conjugate-gradient";
    sol.diagnostics.iterations = static_cast<int>(cg.iterations());
    sol.diagnostics.relative_residual = relative_residual(sol.free_values);
    if (cg.info() != Eigen::Success) {
      throw SolverError("assemble_solve: conjugate gradient did not converge after " +
                        std::to_string(cg.iterations()) + " iterations (relative residual " +
                        std::to_string(sol.diagnostics.relative_residual) + ")");
    }
  }

  // eps_T = G_T^{-1} (F_T - B_T u_T); accumulate B^T eps for the orthogonality check
  sol.representers.assign(static_cast<std::size_t>(nt), {});
  sol.residual_norms_sq.assign(static_cast<std::size_t>(nt), 0.0);
  std::vector<Eigen::VectorXd> action(kAssemblyBlock);
  Eigen::VectorXd bt_eps = Eigen::VectorXd::Zero(n_free);
  for (int begin = 0; begin < nt; begin += kAssemblyBlock) {
    const int end = std::min(nt, begin + kAssemblyBlock);
    for_each_element(begin, end, options.sequential, [&](int t) {
      const LocalSystem local = assembler.local_system(ElementGeometry::of(mesh, t), f);
      const Eigen::VectorXd y = local.gram_factor.transpose().triangularView<Eigen::Lower>().solve(
          local.load - local.coupling * sol.element_values(t));
      sol.representers[t] = local.gram_factor.triangularView<Eigen::Upper>().solve(y);
      sol.residual_norms_sq[t] = y.squaredNorm();
      action[t - begin] = local.coupling.transpose() * sol.representers[t];
    });
    for (int t = begin; t < end; ++t) {
      const auto ids = sol.dofs.element_dofs(t);
      for (int i = 0; i < n_local; ++i) {
        if (ids[i] >= 0) bt_eps[ids[i]] += action[t - begin][i];
      }
    }
  }
  sol.diagnostics.orthogonality_defect = n_free > 0 ? bt_eps.lpNorm<Eigen::Infinity>() : 0.0;
  sol.diagnostics.orthogonality_scale = n_free > 0 ? rhs.lpNorm<Eigen::Infinity>() : 0.0;
  return sol;
}

Estimate estimator(const Solution& solution, const Mesh& mesh) {
  const LocalAssembler assembler(solution.trial, solution.problem, solution.options.enrichment,
                                 solution.options.quadrature_bump);
  Estimate out;
  out.local.assign(static_cast<std::size_t>(mesh.num_triangles()), 0.0);
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    double sq;
    if (solution.residual_norms_sq.size() == solution.representers.size()) {
      sq = solution.residual_norms_sq[t];
    } else {
      const Eigen::VectorXd& eps = solution.representers[t];
      sq = eps.dot(assembler.gram(ElementGeometry::of(mesh, t)) * eps);
    }
    out.local[t] = std::sqrt(std::max(sq, 0.0));
    sum += out.local[t] * out.local[t];
  }
  out.eta = std::sqrt(sum);
  return out;
}

}  // namespace dpg
