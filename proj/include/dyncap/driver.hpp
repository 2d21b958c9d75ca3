#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dyncap/schemes.hpp"

namespace dyncap {

/// Uniform time grid on (0, T]: N steps of size dt, t_n = T n / N.
struct TimeGrid {
  double T = 0.0;
  double dt = 0.0;
  int N = 0;

  /// Throws ConfigError unless T / dt is an integer (to 1e-9 relative).
  static TimeGrid make(double T, double dt);
  double time(int n) const { return T * n / N; }
};

struct IterationRecord {
  int step = 0;
  double time = 0.0;
  double dt = 0.0;
  int iterations = 0;
  bool converged = false;
  IterationNorms final_norms;
  std::vector<IterationNorms> history;
  std::vector<Linearization> schemes;
  long clamp_events = 0;
  double wall_seconds = 0.0;
  int substeps = 1;     // > 1 only when the step was halved
  std::string failure;  // empty on success

  /// "MON-LS", or for mixed strategies "MON-Mixed:LLNNN".
  std::string scheme_label(Strategy s) const;
};

enum class FailurePolicy { Abort, Halve };

struct RunOptions {
  FailurePolicy policy = FailurePolicy::Abort;
  int max_halvings = 4;
  /// Called after the initial state (step 0) and after every completed step.
  std::function<void(int step, const StateTriple& state)> on_step;
};

struct RunReport {
  std::vector<IterationRecord> records;
  StateTriple final_state;
  int steps_total = 0;
  bool converged = false;

  int steps_completed() const;
  long total_iterations() const;
};

/// One backward Euler step from `prev` to t_n.
std::pair<StateTriple, IterationRecord> advance_time_step(const FeSpace& space, const Problem& problem,
                                                          const ConstitutiveSet& set, const SchemeConfig& config,
                                                          SchemeWorkspace& workspace, const StateTriple& prev,
                                                          double t_n, double dt);

RunReport run_simulation(const FeSpace& space, const Problem& problem, const ConstitutiveSet& set,
                         const SchemeConfig& config, const TimeGrid& grid, const RunOptions& options = {});

}  // namespace dyncap
