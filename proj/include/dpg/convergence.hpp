#pragma once

#include <optional>
#include <span>
#include <vector>

namespace dpg {

/// One row of a convergence table. Rates are slopes against D_h:
/// eoc = -log(e_{i+1}/e_i) / log(D_{i+1}/D_i), empty on the first row.
struct ConvergenceRecord {
  int level = 0;
  long dofs = 0;
  double h_max = 0.0;
  std::optional<double> err_u;
  std::optional<double> err_sigma;
  std::optional<double> err_u_post;
  std::optional<double> eta;
  std::optional<double> eoc_u;
  std::optional<double> eoc_sigma;
  std::optional<double> eoc_post;
  std::optional<double> eoc_eta;

  bool operator==(const ConvergenceRecord&) const = default;
};

enum class Column { ErrU, ErrSigma, ErrUPost, Eta };

std::optional<double> column_value(const ConvergenceRecord& record, Column column);

/// Fills the eoc_* fields of every record from its predecessor.
void compute_rates(std::vector<ConvergenceRecord>& records);

/// Negated least-squares slope of log(e) against log(D_h) over the last
/// `window` records. Missing or non-positive values are dropped with a warning
/// on stderr. Throws std::invalid_argument if window < 2 or fewer than two
/// usable points remain.
double fit_slope(std::span<const ConvergenceRecord> records, Column column, int window);

/// Number of trailing records with D_h >= D_last / dof_ratio.
int span_window(std::span<const ConvergenceRecord> records, double dof_ratio);

/// fit_slope over the trailing records spanning a factor dof_ratio in D_h.
/// Adaptive steps grow D_h by a few ten percent, so a fixed count of steps
/// covers too short a range for a stable slope; 16 matches three uniform levels.
double fit_slope_span(std::span<const ConvergenceRecord> records, Column column, double dof_ratio = 16.0);

}  // namespace dpg
