#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dpg/convergence.hpp"
#include "dpg/dpg.hpp"
#include "dpg/mesh.hpp"
#include "dpg/postprocess.hpp"
#include "dpg/problems.hpp"

namespace dpg {

struct MarkParams {
  double theta = 0.25;
};

/// Bulk criterion: smallest set M with theta * sum eta(T)^2 <= sum_{T in M} eta(T)^2,
/// taken greedily from the largest contributions (ties by ascending index).
/// Returns indices in selection order; empty if every estimate is zero.
/// Throws std::invalid_argument for theta outside (0,1) or negative estimates.
std::vector<int> mark(std::span<const double> local_estimates, double theta);

/// Everything produced by one SOLVE -> ESTIMATE pass on a mesh.
struct LevelResult {
  Solution solution;
  Estimate estimate;
  std::optional<PostprocessedField> postprocessed;
  ErrorReport errors;
  ConvergenceRecord record;
};

LevelResult solve_level(const Mesh& mesh, const ManufacturedProblem& problem, TrialSpace trial, bool postprocess,
                        const SolverOptions& options = {}, int level = 0);

struct AdaptiveParams {
  MarkParams marking;
  long max_dofs = 100000;
  int max_steps = 50;
  bool postprocess = true;
  SolverOptions solver;
};

struct AdaptiveStep {
  Mesh mesh;
  LevelResult result;
  std::vector<int> marked;
};

struct AdaptiveRun {
  std::vector<AdaptiveStep> steps;
  bool converged = false;  // stopped because the estimator vanished

  [[nodiscard]] std::vector<ConvergenceRecord> records() const;
};

/// SOLVE -> ESTIMATE -> MARK -> REFINE from the problem's initial mesh until
/// D_h reaches max_dofs or max_steps solves have been done. `on_step` sees
/// each step right after its solve (before marking).
AdaptiveRun adaptive_loop(const ManufacturedProblem& problem, TrialSpace trial, const AdaptiveParams& params,
                          const Mesh* initial_mesh = nullptr,
                          const std::function<void(const AdaptiveStep&)>& on_step = {});

}  // namespace dpg
