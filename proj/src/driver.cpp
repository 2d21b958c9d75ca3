#include "dyncap/driver.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "dyncap/error.hpp"

namespace dyncap {

TimeGrid TimeGrid::make(double T, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be > 0");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T must be > 0");
  const double ratio = T / dt;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, n)) {
    throw ConfigError("T must be an integer multiple of dt");
  }
  TimeGrid g;
  g.T = T;
  g.N = static_cast<int>(n);
  g.dt = T / g.N;
  return g;
}

std::string IterationRecord::scheme_label(Strategy s) const {
  std::string label = to_string(s);
  if (!is_mixed(s)) return label;
  label += ':';
  for (Linearization l : schemes) label += l == Linearization::Newton ? 'N' : 'L';
  return label;
}

int RunReport::steps_completed() const {
  int n = 0;
  for (const auto& r : records) n += r.converged ? 1 : 0;
  return n;
}

long RunReport::total_iterations() const {
  return std::accumulate(records.begin(), records.end(), 0L,
                         [](long acc, const IterationRecord& r) { return acc + r.iterations; });
}

namespace {

Linearization fixed_linearization(Strategy s) {
  return s == Strategy::MonNewton || s == Strategy::SplitNewton ? Linearization::Newton : Linearization::LScheme;
}

}  // namespace

std::pair<StateTriple, IterationRecord> advance_time_step(const FeSpace& space, const Problem& problem,
                                                          const ConstitutiveSet& set, const SchemeConfig& config,
                                                          SchemeWorkspace& workspace, const StateTriple& prev,
                                                          double t_n, double dt) {
  const auto start = std::chrono::steady_clock::now();
  IterationRecord rec;
  rec.time = t_n;
  rec.dt = dt;

  StepContext ctx(space, problem, set, config, workspace, prev, t_n, dt);
  StateTriple iter = ctx.initial_iterate();
  for (double& th : iter.theta.values) th = clamp_theta(th, set, &ctx.clamp_events);
  ctx.initialize_active_set(iter);

  std::vector<IterationInfo> info;
  const bool monolithic = is_monolithic(config.strategy);
  for (int j = 1; j <= config.max_iter; ++j) {
    const Linearization lin =
        is_mixed(config.strategy) ? mixed_controller(info, config) : fixed_linearization(config.strategy);
    StateTriple next;
    try {
      if (monolithic) {
        next = lin == Linearization::Newton ? newton_iteration_monolithic(ctx, iter)
                                            : lscheme_iteration_monolithic(ctx, iter);
      } else {
        next = splitting_iteration(ctx, iter, lin);
      }
    } catch (const Error& e) {
      rec.failure = e.what();
      break;
    }
    const ConvergenceResult conv = convergence_check(iter, next, space.mass(), config.tol, config.norm);
    info.push_back({lin, conv.norms});
    rec.history.push_back(conv.norms);
    rec.schemes.push_back(lin);
    rec.iterations = j;
    rec.final_norms = conv.norms;
    iter = std::move(next);
    if (!conv.norms.finite() || conv.norms.max() > config.divergence_limit) {
      rec.failure = "diverged";
      break;
    }
    if (conv.converged && !ctx.active_set_changed) {
      rec.converged = true;
      break;
    }
  }
  if (!rec.converged && rec.failure.empty()) rec.failure = "max_iter reached";
  rec.clamp_events = ctx.clamp_events;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  iter.time = t_n;
  return {std::move(iter), std::move(rec)};
}

namespace {

// Recursive halving: tries the step, then two half steps, up to `depth` times.
std::pair<StateTriple, IterationRecord> advance_with_halving(const FeSpace& space, const Problem& problem,
                                                             const ConstitutiveSet& set, const SchemeConfig& config,
                                                             SchemeWorkspace& ws, const StateTriple& prev,
                                                             double t_n, double dt, int depth) {
  auto [state, rec] = advance_time_step(space, problem, set, config, ws, prev, t_n, dt);
  if (rec.converged || depth <= 0) return {std::move(state), std::move(rec)};
  const double half = 0.5 * dt;
  auto [mid, r1] = advance_with_halving(space, problem, set, config, ws, prev, t_n - half, half, depth - 1);
  IterationRecord merged = r1;
  merged.iterations += rec.iterations;
  if (!r1.converged) return {std::move(mid), std::move(merged)};
  auto [end, r2] = advance_with_halving(space, problem, set, config, ws, mid, t_n, half, depth - 1);
  merged.iterations += r2.iterations;
  merged.converged = r2.converged;
  merged.failure = r2.failure;
  merged.final_norms = r2.final_norms;
  merged.history.insert(merged.history.end(), r2.history.begin(), r2.history.end());
  merged.schemes.insert(merged.schemes.end(), r2.schemes.begin(), r2.schemes.end());
  merged.clamp_events += r2.clamp_events + rec.clamp_events;
  merged.wall_seconds += r2.wall_seconds + rec.wall_seconds;
  merged.substeps = r1.substeps + r2.substeps;
  merged.time = t_n;
  merged.dt = dt;
  return {std::move(end), std::move(merged)};
}

}  // namespace

RunReport run_simulation(const FeSpace& space, const Problem& problem, const ConstitutiveSet& set,
                         const SchemeConfig& config, const TimeGrid& grid, const RunOptions& options) {
  config.validate();
  set.validate();
  RunReport report;
  report.steps_total = grid.N;
  SchemeWorkspace workspace;
  StateTriple state = StateTriple::initial(space, problem);
  if (options.on_step) options.on_step(0, state);
  report.converged = true;
  for (int n = 1; n <= grid.N; ++n) {
    const double t_n = grid.time(n);
    const int depth = options.policy == FailurePolicy::Halve ? options.max_halvings : 0;
    auto [next, rec] = advance_with_halving(space, problem, set, config, workspace, state, t_n, grid.dt, depth);
    rec.step = n;
    rec.time = t_n;
    const bool ok = rec.converged;
    report.records.push_back(std::move(rec));
    if (!ok) {
      report.converged = false;
      report.final_state = std::move(next);
      return report;
    }
    state = std::move(next);
    if (options.on_step) options.on_step(n, state);
  }
  report.final_state = std::move(state);
  return report;
}

}  // namespace dyncap
