#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dpg/basis.hpp"
#include "dpg/dpg.hpp"
#include "dpg/mesh.hpp"

namespace dpg {

/// Elementwise P^{p+1} field, coefficients in ScalarBasis(degree) per element.
struct PostprocessedField {
  int degree = 0;
  /// Set when the input came from the augmented trial space; the superconvergence
  /// estimate only covers the standard space.
  bool from_augmented = false;
  std::vector<Eigen::VectorXd> coefficients;
};

/// Local Neumann solve: find w in P^{p+1}(T) with
///   (grad w, grad v)_T = (sigma_h, grad v)_T  for all v in P^{p+1}(T),
///   (w, 1)_T = (u_h, 1)_T,
/// realized as the stiffness matrix bordered by the mean functional
/// (one Lagrange multiplier).
class Postprocessor {
 public:
  Postprocessor(int p, int u_degree);

  [[nodiscard]] int degree() const { return post_basis_.degree(); }
  [[nodiscard]] const ScalarBasis& basis() const { return post_basis_; }

  /// `u` in ScalarBasis(u_degree), `sigma` = [sigma_x | sigma_y] in ScalarBasis(p).
  [[nodiscard]] Eigen::VectorXd element(const ElementMap& map, const Eigen::VectorXd& u,
                                        const Eigen::VectorXd& sigma) const;

 private:
  ScalarBasis post_basis_;
  ScalarBasis u_basis_;
  ScalarBasis sigma_basis_;
  QuadratureRule rule_;
  BasisTable post_table_;
  Eigen::MatrixXd u_values_;
  Eigen::MatrixXd sigma_values_;
};

/// Convenience wrapper; the field degree of `u` is inferred from its size.
Eigen::VectorXd postprocess_element(const ElementMap& map, int p, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& sigma);

/// Applies the local solve on every element. Errors are rethrown with the
/// element index attached.
PostprocessedField postprocess_all(const Mesh& mesh, const Solution& solution);

}  // namespace dpg
