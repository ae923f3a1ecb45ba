#pragma once

#include <array>
#include <functional>

#include <Eigen/Dense>

#include "dpg/mesh.hpp"
#include "dpg/quadrature.hpp"

namespace dpg {

using ScalarField = std::function<double(double, double)>;
using VectorField = std::function<Eigen::Vector2d(double, double)>;

inline constexpr int scalar_dim(int q) { return (q + 1) * (q + 2) / 2; }

/// Values and reference gradients of a basis at a set of points; one row per
/// basis function, one column per point.
struct BasisTable {
  Eigen::MatrixXd values;
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;
};

/// Orthonormal basis of P^q on the reference triangle.
///
/// Built from collapsed-coordinate Legendre/Jacobi products of degree a+b <= q,
/// ordered by total degree, and orthonormalized against the reference mass
/// matrix by a Cholesky (Gram) factorization. Because the
/// factor is triangular the first scalar_dim(q') functions span P^{q'}, and
/// function 0 is the constant sqrt(2).
class ScalarBasis {
 public:
  explicit ScalarBasis(int degree);

  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] int dim() const { return dim_; }

  [[nodiscard]] BasisTable evaluate(const std::vector<std::array<double, 2>>& points) const;
  [[nodiscard]] Eigen::VectorXd values_at(double x, double y) const;

  /// Mass matrix of the pre-orthonormalization products; exposed for
  /// conditioning diagnostics.
  [[nodiscard]] const Eigen::MatrixXd& raw_mass() const { return raw_mass_; }

 private:
  void raw_eval(double x, double y, double* v, double* gx, double* gy) const;

  int degree_;
  int dim_;
  std::vector<std::array<int, 2>> exponents_;
  Eigen::MatrixXd raw_mass_;
  Eigen::MatrixXd transform_;  // phi = transform_ * raw
};

/// L^2(0,1)-orthonormal Legendre polynomials sqrt(2k+1) P_k(2s-1), k <= q.
class EdgeBasis {
 public:
  explicit EdgeBasis(int degree) : degree_(degree) {}
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] int dim() const { return degree_ + 1; }
  [[nodiscard]] Eigen::VectorXd values_at(double s) const;

 private:
  int degree_;
};

/// Legendre P_0..P_n at x, with derivatives.
void legendre(int n, double x, double* p, double* dp = nullptr);

/// Affine map x = origin + J xi from the reference triangle.
class ElementMap {
 public:
  ElementMap() = default;
  ElementMap(const Vertex& a, const Vertex& b, const Vertex& c);
  static ElementMap of(const Mesh& mesh, int t);

  [[nodiscard]] Eigen::Vector2d map(double xi, double eta) const { return origin_ + jacobian_ * Eigen::Vector2d(xi, eta); }
  [[nodiscard]] Eigen::Vector2d inverse(const Eigen::Vector2d& x) const { return inverse_ * (x - origin_); }
  [[nodiscard]] const Eigen::Matrix2d& jacobian() const { return jacobian_; }
  /// J^{-T}: maps reference gradients to physical gradients.
  [[nodiscard]] const Eigen::Matrix2d& inverse_transpose() const { return inverse_transpose_; }
  [[nodiscard]] double det() const { return det_; }

 private:
  Eigen::Vector2d origin_ = Eigen::Vector2d::Zero();
  Eigen::Matrix2d jacobian_ = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d inverse_ = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d inverse_transpose_ = Eigen::Matrix2d::Identity();
  double det_ = 1.0;
};

/// Physical gradients from a reference table under `map`.
void physical_gradients(const BasisTable& table, const ElementMap& map, Eigen::MatrixXd& gx, Eigen::MatrixXd& gy);

/// L^2(T) projection of f onto P^q(T) in the ScalarBasis of degree q.
/// The rule must be exact to at least 2q. Throws std::runtime_error if the
/// local mass matrix is not positive definite.
Eigen::VectorXd project_l2(const ScalarBasis& basis, const QuadratureRule& rule, const ScalarField& f,
                           const ElementMap& map);

/// Evaluates sum_i c_i phi_i at a reference point.
double evaluate_expansion(const ScalarBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& coefficients, double xi,
                          double eta);

}  // namespace dpg
