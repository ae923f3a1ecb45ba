#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpg/convergence.hpp"
#include "dpg/dpg.hpp"
#include "dpg/problems.hpp"

namespace dpg {

/// Invalid study configuration (CLI exit status 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class StudyMode { Uniform, Adaptive };

struct StudyConfig {
  Domain problem = Domain::Square;  // square: reaction-diffusion, lshape: Poisson
  int p = 0;
  TrialKind trial = TrialKind::Standard;
  StudyMode mode = StudyMode::Uniform;
  double theta = 0.25;
  int levels = 5;  // uniform: number of meshes; adaptive: step cap
  long max_dofs = 100000;  // adaptive only
  bool postprocess = false;
  std::string output;  // CSV path; empty for none
  double tolerance = 1e-10;
  int quadrature_bump = 0;
  bool sequential = false;
  int initial_subdivisions = 2;  // square only
  int enrichment = 2;
};

/// Throws ConfigError describing the first invalid field.
void validate(const StudyConfig& config);

ManufacturedProblem problem_for(const StudyConfig& config);

/// Runs the refinement sequence and returns one record per level, rates
/// filled in. When `config.output` is set the CSV is written row by row, so a
/// solver failure (SolverError, rethrown) leaves the partial table on disk.
std::vector<ConvergenceRecord> run_study(const StudyConfig& config);

inline constexpr const char* kCsvHeader =
    "level,dofs,h_max,err_u,err_sigma,err_u_post,eta,eoc_u,eoc_sigma,eoc_post,eoc_eta";

/// 17 significant digits, empty cells for missing values, LF endings.
std::string csv_row(const ConvergenceRecord& record);
void write_csv(std::ostream& out, const std::vector<ConvergenceRecord>& records);
std::vector<ConvergenceRecord> read_csv(std::istream& in);

}  // namespace dpg
