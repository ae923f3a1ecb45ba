#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dpg/basis.hpp"
#include "dpg/mesh.hpp"
#include "dpg/quadrature.hpp"

namespace dpg {

/// Thrown when a linear solve fails: non-SPD Gram or condensed matrix, or the
/// iterative solver hitting its cap.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TrialKind { Standard, Augmented };
enum class ProblemKind { ReactionDiffusion, Poisson };

/// U_hp (Standard) or U_hp^+ (Augmented). The flux sigma is in (P^p)^2, the
/// trace u-hat is the trace of continuous P^{p+1}, the normal flux is
/// edgewise P^p; only the field u is raised to P^{p+1} in the augmented space.
struct TrialSpace {
  TrialKind kind = TrialKind::Standard;
  int p = 0;

  [[nodiscard]] int u_degree() const { return kind == TrialKind::Augmented ? p + 1 : p; }
};

std::string to_string(TrialKind kind);
std::string to_string(ProblemKind kind);

/// Sizes and offsets of one element's trial vector:
///   [u | sigma_x | sigma_y | u-hat vertices (3) | u-hat edge modes (3p) | flux (3(p+1))]
/// Edge-indexed blocks run over local edges k = 0,1,2 (edge k opposite vertex k).
struct LocalLayout {
  int n_u = 0;
  int n_sigma = 0;  // per component
  int n_bubble = 0;  // u-hat modes per edge
  int n_flux = 0;    // normal-flux modes per edge

  explicit LocalLayout(TrialSpace trial = {});

  [[nodiscard]] int u_offset() const { return 0; }
  [[nodiscard]] int sigma_offset(int component) const { return n_u + component * n_sigma; }
  [[nodiscard]] int vertex_offset() const { return n_u + 2 * n_sigma; }
  [[nodiscard]] int bubble_offset(int k) const { return vertex_offset() + 3 + k * n_bubble; }
  [[nodiscard]] int flux_offset(int k) const { return vertex_offset() + 3 + 3 * n_bubble + k * n_flux; }
  [[nodiscard]] int size() const { return vertex_offset() + 3 + 3 * n_bubble + 3 * n_flux; }
};

/// Global trial numbering. Free dofs are numbered
/// [u | sigma | u-hat vertices | u-hat edge modes | flux]; u-hat dofs on the
/// boundary are Dirichlet-constrained and numbered separately.
/// Local-to-global entries >= 0 are free dofs, entries < 0 encode
/// constrained dof c as -(c+1).
class DofMap {
 public:
  DofMap() = default;
  DofMap(const Mesh& mesh, TrialSpace trial);

  [[nodiscard]] TrialSpace trial() const { return trial_; }
  [[nodiscard]] const LocalLayout& layout() const { return layout_; }
  /// D_h: dimension of the discrete trial space (free dofs only).
  [[nodiscard]] int num_free() const { return num_free_; }
  [[nodiscard]] int num_constrained() const { return num_constrained_; }
  [[nodiscard]] std::span<const int> element_dofs(int t) const {
    return {local_to_global_.data() + static_cast<std::size_t>(t) * layout_.size(),
            static_cast<std::size_t>(layout_.size())};
  }
  /// +1 if local edge k of triangle t runs low -> high vertex index.
  [[nodiscard]] int edge_sign(int t, int k) const { return edge_signs_[static_cast<std::size_t>(t)][k]; }

  /// Constrained dof ids for a boundary vertex / boundary edge (-1 if free).
  [[nodiscard]] int constrained_vertex(int v) const { return constrained_vertex_[v]; }
  [[nodiscard]] int constrained_edge_offset(int e) const { return constrained_edge_[e]; }

  [[nodiscard]] int block_offset_u() const { return 0; }
  [[nodiscard]] int block_offset_sigma() const { return offset_sigma_; }
  [[nodiscard]] int block_offset_trace() const { return offset_trace_; }
  [[nodiscard]] int block_offset_flux() const { return offset_flux_; }

 private:
  TrialSpace trial_{};
  LocalLayout layout_{};
  int num_free_ = 0;
  int num_constrained_ = 0;
  int offset_sigma_ = 0;
  int offset_trace_ = 0;
  int offset_flux_ = 0;
  std::vector<int> local_to_global_;
  std::vector<std::array<int, 3>> edge_signs_;
  std::vector<int> constrained_vertex_;
  std::vector<int> constrained_edge_;
};

/// Element data needed by local assembly.
struct ElementGeometry {
  ElementMap map;
  std::array<Vertex, 3> vertices{};
  std::array<int, 3> edge_sign{1, 1, 1};

  static ElementGeometry of(const Mesh& mesh, int t);
};

/// Per-element test Gram G_T, coupling B_T (test x trial) and load F_T.
struct LocalSystem {
  Eigen::MatrixXd gram;
  Eigen::MatrixXd gram_factor;  // upper triangular R with G = R^T R; empty: factor gram by Cholesky
  Eigen::MatrixXd coupling;
  Eigen::VectorXd load;
};

struct CondensedSystem {
  Eigen::MatrixXd matrix;  // B^T G^{-1} B
  Eigen::VectorXd rhs;     // B^T G^{-1} F
};

/// S = B^T G^{-1} B and r = B^T G^{-1} F via the stored factor of G, or a
/// Cholesky factor if none is given. Throws SolverError if G is not positive definite.
CondensedSystem condense(const LocalSystem& local);

/// Reference-element tables and the per-element forms. The broken test space
/// is P^{r}(T) x P^{r}(T)^2 with r = p + enrichment; test vectors are laid out
/// [v | tau_x | tau_y].
class LocalAssembler {
 public:
  LocalAssembler(TrialSpace trial, ProblemKind problem, int enrichment = 2, int quadrature_bump = 0);

  [[nodiscard]] TrialSpace trial() const { return trial_; }
  [[nodiscard]] ProblemKind problem() const { return problem_; }
  [[nodiscard]] int enrichment() const { return enrichment_; }
  [[nodiscard]] int test_degree() const { return test_basis_.degree(); }
  [[nodiscard]] int test_dim() const { return 3 * test_basis_.dim(); }
  [[nodiscard]] int trial_dim() const { return layout_.size(); }
  [[nodiscard]] const LocalLayout& layout() const { return layout_; }
  [[nodiscard]] const ScalarBasis& test_basis() const { return test_basis_; }
  [[nodiscard]] const ScalarBasis& u_basis() const { return u_basis_; }
  [[nodiscard]] const ScalarBasis& sigma_basis() const { return sigma_basis_; }
  [[nodiscard]] const QuadratureRule& volume_rule() const { return volume_rule_; }

  /// Broken V-inner product (v,mu) + (grad v, grad mu) + (tau,lambda) + (div tau, div lambda).
  [[nodiscard]] Eigen::MatrixXd gram(const ElementGeometry& element) const;
  /// Upper triangular R with R^T R = gram(element), from a QR factorization of
  /// the weighted point values. On small elements the divergence-free tau modes
  /// sit at |T| relative to O(1) entries, and forming G first loses them.
  [[nodiscard]] Eigen::MatrixXd gram_factor(const ElementGeometry& element) const;
  /// Ultra-weak form b(trial_j, test_i).
  [[nodiscard]] Eigen::MatrixXd coupling(const ElementGeometry& element) const;
  /// (f, v_i)_T; zero on the tau rows.
  [[nodiscard]] Eigen::VectorXd load(const ElementGeometry& element, const ScalarField& f) const;
  [[nodiscard]] LocalSystem local_system(const ElementGeometry& element, const ScalarField& f) const;

  /// Local trial vector interpolating an exact solution: L^2 projections of
  /// u and grad u, vertex values plus edge projection for the trace, and the
  /// edgewise projection of grad u . n_edge for the flux.
  [[nodiscard]] Eigen::VectorXd interpolate(const ElementGeometry& element, const ScalarField& u,
                                            const VectorField& grad_u) const;

  /// Value of the representer eps = (v, tau) at a reference point.
  struct TestValue {
    double v;
    Eigen::Vector2d grad_v;
    Eigen::Vector2d tau;
    double div_tau;
  };
  [[nodiscard]] TestValue evaluate_test(const ElementGeometry& element, const Eigen::VectorXd& coefficients,
                                        double xi, double eta) const;

  /// u-hat edge modes on the globally oriented edge parameter s in [0,1].
  [[nodiscard]] Eigen::VectorXd bubble_values(double s) const;

 private:
  struct EdgeTable {
    BasisTable test;                          // test basis at the edge points
    std::vector<std::array<double, 2>> ref;  // reference coordinates
  };
  [[nodiscard]] const EdgeTable& edge_table(int k, int sign) const { return edge_tables_[2 * k + (sign > 0 ? 0 : 1)]; }

  TrialSpace trial_;
  ProblemKind problem_;
  int enrichment_;
  LocalLayout layout_;
  ScalarBasis test_basis_;
  ScalarBasis u_basis_;
  ScalarBasis sigma_basis_;
  EdgeBasis flux_basis_;
  QuadratureRule volume_rule_;
  QuadratureRule edge_rule_;
  BasisTable test_table_;
  BasisTable u_table_;
  BasisTable sigma_table_;
  std::array<EdgeTable, 6> edge_tables_;
  Eigen::MatrixXd bubble_table_;  // n_bubble x n_edge_points, global parameter
  Eigen::MatrixXd flux_table_;    // n_flux x n_edge_points
};

enum class LinearSolverKind { Direct, ConjugateGradient };

struct SolverOptions {
  int enrichment = 2;
  int quadrature_bump = 0;
  LinearSolverKind solver = LinearSolverKind::Direct;
  double tolerance = 1e-10;
  /// Forces single-threaded local assembly. Results do not depend on this.
  bool sequential = false;
};

struct SolverDiagnostics {
  std::string method;
  int iterations = 0;
  double relative_residual = 0.0;
  /// max_j |(B^T eps)_j| over free trial dofs, and the max-norm of the
  /// condensed right-hand side it is measured against.
  double orthogonality_defect = 0.0;
  double orthogonality_scale = 0.0;
};

/// Discrete solution u_h together with the per-element residual representers.
struct Solution {
  TrialSpace trial;
  ProblemKind problem = ProblemKind::ReactionDiffusion;
  SolverOptions options;
  DofMap dofs;
  Eigen::VectorXd free_values;
  Eigen::VectorXd constrained_values;
  std::vector<Eigen::VectorXd> representers;  // eps_T per element
  std::vector<double> residual_norms_sq;  // eps_T^T G_T eps_T, evaluated through the Gram factor
  SolverDiagnostics diagnostics;

  [[nodiscard]] int num_dofs() const { return dofs.num_free(); }
  /// Local trial vector of element t (constrained dofs filled in).
  [[nodiscard]] Eigen::VectorXd element_values(int t) const;
  [[nodiscard]] Eigen::VectorXd u_coefficients(int t) const;
  /// [sigma_x | sigma_y] coefficients.
  [[nodiscard]] Eigen::VectorXd sigma_coefficients(int t) const;
};

/// Dirichlet values for the constrained u-hat dofs: nodal interpolation at
/// boundary vertices plus the edgewise L^2 projection of the remainder onto
/// the edge modes.
Eigen::VectorXd dirichlet_lift(const Mesh& mesh, const DofMap& dofs, const ScalarField& g, int quadrature_degree);

/// Solves the practical DPG system with elementwise static condensation of
/// the residual representer. Throws SolverError on solver failure.
Solution assemble_solve(const Mesh& mesh, TrialSpace trial, ProblemKind problem, const ScalarField& f,
                        const ScalarField& dirichlet, const SolverOptions& options = {});

struct Estimate {
  double eta = 0.0;
  std::vector<double> local;  // eta(T)
};

/// eta(T)^2 = eps_T^T G_T eps_T, eta^2 = sum_T eta(T)^2.
Estimate estimator(const Solution& solution, const Mesh& mesh);

}  // namespace dpg
