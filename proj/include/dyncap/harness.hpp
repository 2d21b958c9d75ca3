#pragma once

#include <string>
#include <vector>

#include "dyncap/config.hpp"
#include "dyncap/driver.hpp"

namespace dyncap {

struct RunOutputs {
  bool write_csv = true;
  bool write_summary = true;
  bool write_vtk = true;  // also gated by RunConfig::write_vtk
};

/// Runs the recharge problem described by `config`, writing iterations.csv,
/// summary.txt and VTK snapshots into config.output_dir.
RunReport run_config(const RunConfig& config, const RunOutputs& outputs = {});

/// Mesh counts for a uniform spacing: nx = width / dx, ny = height / dx.
/// Throws ConfigError unless both are integers.
std::pair<Index, Index> cells_for_spacing(const Domain2D& domain, double dx);

struct ComparisonRow {
  Strategy strategy = Strategy::MonLScheme;
  double dt = 0.0;
  double dx = 0.0;
  Index nx = 0;
  Index ny = 0;
  long total_iterations = 0;
  bool converged = false;
  int steps_completed = 0;
  int steps_total = 0;
  std::string directory;
};

struct ComparisonPlan {
  std::vector<Strategy> strategies;
  std::vector<double> dts;
  std::vector<double> dxs;
  std::string output_dir;  // empty: nothing written
  int jobs = 1;
};

/// Runs every (strategy, dt, dx) cell; with jobs > 1 cells run concurrently
/// into distinct directories. Rows come back in plan order.
std::vector<ComparisonRow> run_comparison(const RunConfig& base, const ComparisonPlan& plan);

/// strategy,dt,dx,nx,ny,total_iterations,converged,steps_completed,steps_total
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace dyncap
