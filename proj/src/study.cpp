#include "dpg/study.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "dpg/adapt.hpp"

namespace dpg {

void validate(const StudyConfig& c) {
  if (c.p < 0 || c.p > 6) throw ConfigError("p must lie in [0, 6]");
  if (!(c.theta > 0.0 && c.theta < 1.0)) throw ConfigError("theta must lie in (0, 1)");
  if (c.levels < 1) throw ConfigError("levels must be >= 1");
  if (c.max_dofs < 1) throw ConfigError("max-dofs must be >= 1");
  if (!(c.tolerance > 0.0 && c.tolerance < 1.0)) throw ConfigError("solver tolerance must lie in (0, 1)");
  if (c.quadrature_bump < 0) throw ConfigError("quadrature bump must be >= 0");
  if (c.initial_subdivisions < 1) throw ConfigError("initial subdivisions must be >= 1");
  if (c.enrichment < 1) throw ConfigError("test enrichment must be >= 1");
  if (2 * (c.p + c.enrichment + 1) + c.quadrature_bump > kMaxQuadratureDegree) {
    throw ConfigError("p + enrichment + quadrature bump exceed the supported quadrature degree");
  }
}

ManufacturedProblem problem_for(const StudyConfig& config) {
  return config.problem == Domain::Square ? square_smooth() : lshape_singular();
}

namespace {

void append_cell(std::string& out, const std::optional<double>& value) {
  out += ',';
  if (!value) return;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *value);
  out += buf;
}

std::optional<double> parse_cell(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0') throw std::runtime_error("read_csv: bad numeric cell '" + cell + "'");
  return v;
}

}  // namespace

std::string csv_row(const ConvergenceRecord& r) {
  std::string out = std::to_string(r.level) + ',' + std::to_string(r.dofs);
  append_cell(out, r.h_max);
  append_cell(out, r.err_u);
  append_cell(out, r.err_sigma);
  append_cell(out, r.err_u_post);
  append_cell(out, r.eta);
  append_cell(out, r.eoc_u);
  append_cell(out, r.eoc_sigma);
  append_cell(out, r.eoc_post);
  append_cell(out, r.eoc_eta);
  return out;
}

void write_csv(std::ostream& out, const std::vector<ConvergenceRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) out << csv_row(r) << '\n';
}

std::vector<ConvergenceRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("read_csv: unexpected header");
  std::vector<ConvergenceRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 11) throw std::runtime_error("read_csv: expected 11 cells, got " + std::to_string(cells.size()));
    ConvergenceRecord r;
    r.level = std::stoi(cells[0]);
    r.dofs = std::stol(cells[1]);
    r.h_max = parse_cell(cells[2]).value_or(0.0);
    r.err_u = parse_cell(cells[3]);
    r.err_sigma = parse_cell(cells[4]);
    r.err_u_post = parse_cell(cells[5]);
    r.eta = parse_cell(cells[6]);
    r.eoc_u = parse_cell(cells[7]);
    r.eoc_sigma = parse_cell(cells[8]);
    r.eoc_post = parse_cell(cells[9]);
    r.eoc_eta = parse_cell(cells[10]);
    out.push_back(r);
  }
  return out;
}

std::vector<ConvergenceRecord> run_study(const StudyConfig& config) {
  validate(config);
  const ManufacturedProblem problem = problem_for(config);
  const TrialSpace trial{config.trial, config.p};
  SolverOptions solver;
  solver.enrichment = config.enrichment;
  solver.quadrature_bump = config.quadrature_bump;
  solver.tolerance = config.tolerance;
  solver.sequential = config.sequential;

  std::ofstream csv;
  if (!config.output.empty()) {
    csv.open(config.output, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!csv) throw ConfigError("cannot open output file " + config.output);
    csv << kCsvHeader << '\n' << std::flush;
  }

  std::vector<ConvergenceRecord> records;
  auto emit = [&](const ConvergenceRecord& record) {
    records.push_back(record);
    compute_rates(records);
    if (csv.is_open()) csv << csv_row(records.back()) << '\n' << std::flush;
  };

  Mesh mesh = problem.initial_mesh(config.initial_subdivisions);
  if (config.mode == StudyMode::Uniform) {
    for (int level = 0; level < config.levels; ++level) {
      if (level > 0) mesh = refine_uniform(mesh);
      emit(solve_level(mesh, problem, trial, config.postprocess, solver, level).record);
    }
  } else {
    AdaptiveParams params;
    params.marking.theta = config.theta;
    params.max_dofs = config.max_dofs;
    params.max_steps = config.levels;
    params.postprocess = config.postprocess;
    params.solver = solver;
    adaptive_loop(problem, trial, params, &mesh, [&](const AdaptiveStep& step) { emit(step.result.record); });
  }
  return records;
}

}  // namespace dpg
