#include "dpg/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace dpg {

std::optional<double> column_value(const ConvergenceRecord& record, Column column) {
  switch (column) {
    case Column::ErrU:
      return record.err_u;
    case Column::ErrSigma:
      return record.err_sigma;
    case Column::ErrUPost:
      return record.err_u_post;
    case Column::Eta:
      return record.eta;
  }
  return std::nullopt;
}

namespace {

std::optional<double> rate(const std::optional<double>& prev, const std::optional<double>& next, long d0, long d1) {
  if (!prev || !next || *prev <= 0.0 || *next <= 0.0 || d0 <= 0 || d1 <= 0 || d0 == d1) return std::nullopt;
  return -std::log(*next / *prev) / std::log(static_cast<double>(d1) / static_cast<double>(d0));
}

}  // namespace

void compute_rates(std::vector<ConvergenceRecord>& records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    if (i == 0) {
      r.eoc_u = r.eoc_sigma = r.eoc_post = r.eoc_eta = std::nullopt;
      continue;
    }
    const auto& q = records[i - 1];
    r.eoc_u = rate(q.err_u, r.err_u, q.dofs, r.dofs);
    r.eoc_sigma = rate(q.err_sigma, r.err_sigma, q.dofs, r.dofs);
    r.eoc_post = rate(q.err_u_post, r.err_u_post, q.dofs, r.dofs);
    r.eoc_eta = rate(q.eta, r.eta, q.dofs, r.dofs);
  }
}

double fit_slope(std::span<const ConvergenceRecord> records, Column column, int window) {
  if (window < 2) throw std::invalid_argument("fit_slope: window must be >= 2");
  const std::size_t first = records.size() > static_cast<std::size_t>(window) ? records.size() - window : 0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t i = first; i < records.size(); ++i) {
    const auto value = column_value(records[i], column);
    if (!value || !(*value > 0.0) || records[i].dofs <= 0) {
      std::cerr << "fit_slope: skipping level " << records[i].level << " (missing or non-positive value)\n";
      continue;
    }
    const double x = std::log(static_cast<double>(records[i].dofs));
    const double y = std::log(*value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("fit_slope: fewer than two usable points");
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0) throw std::invalid_argument("fit_slope: degenerate abscissae");
  return -(n * sxy - sx * sy) / denom;
}

int span_window(std::span<const ConvergenceRecord> records, double dof_ratio) {
  if (!(dof_ratio > 1.0)) throw std::invalid_argument("span_window: dof ratio must be > 1");
  if (records.empty()) return 0;
  const double floor = static_cast<double>(records.back().dofs) / dof_ratio;
  int k = 0;
  for (auto it = records.rbegin(); it != records.rend() && static_cast<double>(it->dofs) >= floor; ++it) ++k;
  return k;
}

double fit_slope_span(std::span<const ConvergenceRecord> records, Column column, double dof_ratio) {
  return fit_slope(records, column, std::max(span_window(records, dof_ratio), 2));
}

}  // namespace dpg
