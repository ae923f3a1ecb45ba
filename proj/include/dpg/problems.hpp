#pragma once

#include <optional>
#include <string>

#include "dpg/basis.hpp"
#include "dpg/dpg.hpp"
#include "dpg/mesh.hpp"
#include "dpg/postprocess.hpp"

namespace dpg {

enum class Domain { Square, LShape };
enum class Regularity { Smooth, CornerSingular };

struct ManufacturedProblem {
  std::string name;
  Domain domain = Domain::Square;
  ProblemKind kind = ProblemKind::ReactionDiffusion;
  Regularity regularity = Regularity::Smooth;
  ScalarField u;
  VectorField grad_u;
  ScalarField f;
  ScalarField dirichlet;
  /// Point where the solution is singular; error quadrature on elements with
  /// this vertex collapses onto it.
  std::optional<Eigen::Vector2d> singular_point;

  [[nodiscard]] Mesh initial_mesh(int square_subdivisions = 2) const;
};

/// u = x(1-x)y(1-y) on (0,1)^2, -Δu + u = f, homogeneous Dirichlet data.
ManufacturedProblem square_smooth();

/// u = r^{2/3} cos(2φ/3) on the L-shape, φ = θ - π/2 in [-π/2, π] where θ is
/// the counterclockwise angle from the positive x-axis; -Δu = 0 with u as
/// Dirichlet data. At the origin u = 0 and
/// the gradient is NaN (singular).
ManufacturedProblem lshape_singular();

struct ErrorReport {
  double err_u = 0.0;
  double err_sigma = 0.0;
  std::optional<double> err_u_post;
  double eta = 0.0;
};

/// L^2(Ω) errors by elementwise quadrature of exactness 2(p+3)+4+bump. The
/// collapsed vertex of the rule is placed on the problem's singular point.
ErrorReport error_report(const Mesh& mesh, const Solution& solution, const PostprocessedField* postprocessed,
                         const ManufacturedProblem& problem, double eta, int quadrature_bump = 0);

}  // namespace dpg
