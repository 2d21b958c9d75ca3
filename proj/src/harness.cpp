#include "dyncap/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "dyncap/error.hpp"
#include "dyncap/output.hpp"
#include "dyncap/problem.hpp"

namespace dyncap {

RunReport run_config(const RunConfig& config, const RunOutputs& outputs) {
  config.validate();
  const FeSpace space(GridMesh(config.domain, config.nx, config.ny), config.element);
  const Problem problem = recharge_problem(config.domain);
  const TimeGrid grid = TimeGrid::make(config.T, config.dt);
  const std::filesystem::path dir(config.output_dir);

  RunOptions options;
  options.policy = config.policy;
  if (outputs.write_vtk && config.write_vtk) {
    options.on_step = [&](int step, const StateTriple& state) {
      const bool due = step == 0 || step == grid.N || (config.snapshot_every > 0 && step % config.snapshot_every == 0);
      if (due) write_vtk_snapshot(space.mesh(), state, grid.time(step), (dir / snapshot_filename(step)).string());
    };
  }
  RunReport report = run_simulation(space, problem, config.constitutive, config.scheme, grid, options);
  if (outputs.write_csv) write_iteration_csv(report, config.scheme.strategy, (dir / "iterations.csv").string());
  if (outputs.write_summary) write_text_file((dir / "summary.txt").string(), run_summary(report, config.scheme.strategy));
  return report;
}

std::pair<Index, Index> cells_for_spacing(const Domain2D& domain, double dx) {
  if (!(dx > 0.0)) throw ConfigError("dx must be > 0");
  auto count = [dx](double length) {
    const double r = length / dx;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-9 * n) throw ConfigError("dx does not divide the domain");
    return static_cast<Index>(n);
  };
  return {count(domain.width()), count(domain.height())};
}

namespace {

std::string cell_name(Strategy s, double dt, double dx) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_dt%g_dx%g", to_string(s).c_str(), dt, dx);
  return buf;
}

}  // namespace

std::vector<ComparisonRow> run_comparison(const RunConfig& base, const ComparisonPlan& plan) {
  std::vector<ComparisonRow> rows;
  std::vector<RunConfig> configs;
  for (Strategy s : plan.strategies) {
    for (double dt : plan.dts) {
      for (double dx : plan.dxs) {
        RunConfig c = base;
        c.scheme.strategy = s;
        c.dt = dt;
        std::tie(c.nx, c.ny) = cells_for_spacing(c.domain, dx);
        c.validate();
        ComparisonRow row;
        row.strategy = s;
        row.dt = dt;
        row.dx = dx;
        row.nx = c.nx;
        row.ny = c.ny;
        if (!plan.output_dir.empty()) {
          row.directory = (std::filesystem::path(plan.output_dir) / cell_name(s, dt, dx)).string();
          c.output_dir = row.directory;
        }
        rows.push_back(row);
        configs.push_back(std::move(c));
      }
    }
  }

  const bool write = !plan.output_dir.empty();
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(rows.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      try {
        const RunReport r = run_config(configs[i], {write, write, false});
        rows[i].total_iterations = r.total_iterations();
        rows[i].converged = r.converged;
        rows[i].steps_completed = r.steps_completed();
        rows[i].steps_total = r.steps_total;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(plan.jobs, static_cast<int>(rows.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (write) write_text_file((std::filesystem::path(plan.output_dir) / "comparison.csv").string(), comparison_csv(rows));
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "strategy,dt,dx,nx,ny,total_iterations,converged,steps_completed,steps_total\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%d,%d,%ld,%s,%d,%d\n", to_string(r.strategy).c_str(), r.dt, r.dx,
                  r.nx, r.ny, r.total_iterations, r.converged ? "true" : "false", r.steps_completed, r.steps_total);
    out += buf;
  }
  return out;
}

}  // namespace dyncap
