#include "dpg/postprocess.hpp"

#include <stdexcept>
#include <string>

namespace dpg {

Postprocessor::Postprocessor(int p, int u_degree)
    : post_basis_(p + 1), u_basis_(u_degree), sigma_basis_(p), rule_(triangle_quadrature(2 * (p + 2))) {
  post_table_ = post_basis_.evaluate(rule_.points);
  u_values_ = u_basis_.evaluate(rule_.points).values;
  sigma_values_ = sigma_basis_.evaluate(rule_.points).values;
}

Eigen::VectorXd Postprocessor::element(const ElementMap& map, const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& sigma) const {
  const int n = post_basis_.dim();
  const int ns = sigma_basis_.dim();
  if (u.size() != u_basis_.dim() || sigma.size() != 2 * ns) {
    throw std::invalid_argument("Postprocessor: coefficient vector sizes do not match the bases");
  }
  const Eigen::VectorXd w =
      Eigen::Map<const Eigen::VectorXd>(rule_.weights.data(), rule_.size()) * map.det();
  Eigen::MatrixXd gx, gy;
  physical_gradients(post_table_, map, gx, gy);

  const Eigen::RowVectorXd sx = sigma.head(ns).transpose() * sigma_values_;
  const Eigen::RowVectorXd sy = sigma.tail(ns).transpose() * sigma_values_;
  const Eigen::RowVectorXd uh = u.transpose() * u_values_;

  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n + 1, n + 1);
  system.topLeftCorner(n, n) = gx * w.asDiagonal() * gx.transpose() + gy * w.asDiagonal() * gy.transpose();
  // constraint row in reference measure, otherwise it scales like |T| against O(1) stiffness
  const Eigen::VectorXd mean = post_table_.values * (w / map.det());
  system.block(0, n, n, 1) = mean;
  system.block(n, 0, 1, n) = mean.transpose();

  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = gx * sx.cwiseProduct(w.transpose()).transpose() + gy * sy.cwiseProduct(w.transpose()).transpose();
  rhs[n] = uh.dot(w) / map.det();

  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw std::runtime_error("Postprocessor: singular bordered Neumann system");
  return lu.solve(rhs).head(n);
}

Eigen::VectorXd postprocess_element(const ElementMap& map, int p, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& sigma) {
  const int u_degree = u.size() == scalar_dim(p + 1) ? p + 1 : p;
  return Postprocessor(p, u_degree).element(map, u, sigma);
}

PostprocessedField postprocess_all(const Mesh& mesh, const Solution& solution) {
  const Postprocessor post(solution.trial.p, solution.trial.u_degree());
  PostprocessedField field;
  field.degree = post.degree();
  field.from_augmented = solution.trial.kind == TrialKind::Augmented;
  field.coefficients.resize(static_cast<std::size_t>(mesh.num_triangles()));
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    try {
      field.coefficients[t] =
          post.element(ElementMap::of(mesh, t), solution.u_coefficients(t), solution.sigma_coefficients(t));
    } catch (const std::exception& e) {
      throw std::runtime_error("postprocess_all: element " + std::to_string(t) + ": " + e.what());
    }
  }
  return field;
}

}  // namespace dpg
