#include "dpg/adapt.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dpg {

std::vector<int> mark(std::span<const double> local_estimates, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("mark: theta must lie in (0,1)");
  const auto n = static_cast<int>(local_estimates.size());
  std::vector<double> squares(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(local_estimates[i] >= 0.0)) throw std::invalid_argument("mark: estimates must be nonnegative");
    squares[i] = local_estimates[i] * local_estimates[i];
    total += squares[i];
  }
  if (total == 0.0) return {};

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return squares[a] > squares[b]; });

  std::vector<int> selected;
  double accumulated = 0.0;
  for (int idx : order) {
    selected.push_back(idx);
    accumulated += squares[idx];
    if (accumulated >= theta * total) break;
  }
  return selected;
}

LevelResult solve_level(const Mesh& mesh, const ManufacturedProblem& problem, TrialSpace trial, bool postprocess,
                        const SolverOptions& options, int level) {
  LevelResult out;
  out.solution = assemble_solve(mesh, trial, problem.kind, problem.f, problem.dirichlet, options);
  out.estimate = estimator(out.solution, mesh);
  if (postprocess) out.postprocessed = postprocess_all(mesh, out.solution);
  out.errors = error_report(mesh, out.solution, out.postprocessed ? &*out.postprocessed : nullptr, problem,
                            out.estimate.eta, options.quadrature_bump);
  out.record.level = level;
  out.record.dofs = out.solution.num_dofs();
  out.record.h_max = mesh.h_max();
  out.record.err_u = out.errors.err_u;
  out.record.err_sigma = out.errors.err_sigma;
  out.record.err_u_post = out.errors.err_u_post;
  out.record.eta = out.estimate.eta;
  return out;
}

std::vector<ConvergenceRecord> AdaptiveRun::records() const {
  std::vector<ConvergenceRecord> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.result.record);
  compute_rates(out);
  return out;
}

AdaptiveRun adaptive_loop(const ManufacturedProblem& problem, TrialSpace trial, const AdaptiveParams& params,
                          const Mesh* initial_mesh, const std::function<void(const AdaptiveStep&)>& on_step) {
  if (params.max_steps < 1) throw std::invalid_argument("adaptive_loop: max_steps must be >= 1");
  AdaptiveRun run;
  Mesh mesh = initial_mesh ? *initial_mesh : problem.initial_mesh();
  for (int step = 0; step < params.max_steps; ++step) {
    LevelResult result = solve_level(mesh, problem, trial, params.postprocess, params.solver, step);
    const long dofs = result.record.dofs;
    if (!run.steps.empty() && dofs <= run.steps.back().result.record.dofs) {
      throw std::logic_error("adaptive_loop: refinement did not increase the number of unknowns");
    }
    run.steps.push_back({mesh, std::move(result), {}});
    if (on_step) on_step(run.steps.back());
    if (dofs >= params.max_dofs || step + 1 == params.max_steps) break;

    AdaptiveStep& current = run.steps.back();
    current.marked = mark(current.result.estimate.local, params.marking.theta);
    if (current.marked.empty()) {
      if (current.result.estimate.eta > 0.0) throw std::logic_error("adaptive_loop: nothing marked for a nonzero estimator");
      run.converged = true;
      break;
    }
    mesh = refine_marked(mesh, current.marked);
  }
  return run;
}

}  // namespace dpg
