// dpg-lab: convergence studies for the ultra-weak DPG solver.
//
//   dpg-lab run --problem square --p 0 --trial augmented --mode uniform --levels 5 --out square.csv
//
// Exit status: 0 success, 2 bad configuration, 3 solver failure.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "dpg/mesh.hpp"
#include "dpg/study.hpp"

namespace {

constexpr int kExitBadConfig = 2;
constexpr int kExitSolverFailure = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ultra-weak DPG convergence studies"};
  app.require_subcommand(1);

  dpg::StudyConfig config;
  std::string mesh_out;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run a uniform or adaptive convergence study and write a CSV table");
  const std::map<std::string, dpg::Domain> problems{{"square", dpg::Domain::Square}, {"lshape", dpg::Domain::LShape}};
  const std::map<std::string, dpg::TrialKind> trials{{"standard", dpg::TrialKind::Standard},
                                                     {"augmented", dpg::TrialKind::Augmented}};
  const std::map<std::string, dpg::StudyMode> modes{{"uniform", dpg::StudyMode::Uniform},
                                                    {"adaptive", dpg::StudyMode::Adaptive}};
  run->add_option("--problem", config.problem, "square (reaction-diffusion) or lshape (Poisson)")
      ->required()
      ->transform(CLI::CheckedTransformer(problems, CLI::ignore_case));
  run->add_option("--p", config.p, "Polynomial degree p")->required();
  run->add_option("--trial", config.trial, "standard or augmented trial space")
      ->transform(CLI::CheckedTransformer(trials, CLI::ignore_case))
      ->capture_default_str();
  run->add_option("--mode", config.mode, "uniform or adaptive refinement")
      ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case))
      ->capture_default_str();
  run->add_option("--theta", config.theta, "Bulk marking parameter")->capture_default_str();
  run->add_option("--levels", config.levels, "Uniform levels, or adaptive step cap")->capture_default_str();
  run->add_option("--max-dofs", config.max_dofs, "Adaptive stopping threshold on D_h")->capture_default_str();
  run->add_flag("--postprocess", config.postprocess, "Compute the elementwise postprocessed field");
  run->add_option("--out", config.output, "CSV output path")->required();
  run->add_flag("--seq", config.sequential, "Single-threaded local assembly");
  run->add_option("--tol", config.tolerance, "Linear solver relative tolerance")->capture_default_str();
  run->add_option("--quad-bump", config.quadrature_bump, "Extra quadrature exactness")->capture_default_str();
  run->add_option("--initial-n", config.initial_subdivisions, "Square: initial subdivisions per side")
      ->capture_default_str();
  run->add_option("--enrichment", config.enrichment, "Test space enrichment")->capture_default_str();
  run->add_option("--mesh-out", mesh_out, "Write the final mesh in the plain-text mesh format");
  run->add_flag("-q,--quiet", quiet, "Do not echo the table to stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitBadConfig;
  }

  try {
    const auto records = dpg::run_study(config);
    if (!quiet) {
      std::cout << dpg::kCsvHeader << '\n';
      for (const auto& r : records) std::cout << dpg::csv_row(r) << '\n';
    }
    if (!mesh_out.empty()) {
      dpg::Mesh mesh = dpg::problem_for(config).initial_mesh(config.initial_subdivisions);
      if (config.mode == dpg::StudyMode::Uniform) {
        for (int level = 1; level < config.levels; ++level) mesh = dpg::refine_uniform(mesh);
        dpg::write_mesh(mesh_out, mesh);
      } else {
        std::cerr << "dpg-lab: --mesh-out is only supported for uniform studies\n";
      }
    }
  } catch (const dpg::ConfigError& e) {
    std::cerr << "dpg-lab: invalid configuration: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const dpg::SolverError& e) {
    std::cerr << "dpg-lab: solver failure: " << e.what() << '\n';
    return kExitSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "dpg-lab: " << e.what() << '\n';
    return kExitSolverFailure;
  }
  return 0;
}
