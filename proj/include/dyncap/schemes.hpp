#pragma once

#include <span>
#include <string>
#include <vector>

#include "dyncap/constitutive.hpp"
#include "dyncap/fem.hpp"
#include "dyncap/linalg.hpp"
#include "dyncap/problem.hpp"

namespace dyncap {

/// Nodal pressure head, water content and concentration at one time level
/// or iterate.
struct StateTriple {
  DofField psi{FieldKind::PressureHead, {}};
  DofField theta{FieldKind::WaterContent, {}};
  DofField c{FieldKind::Concentration, {}};
  double time = 0.0;

  static StateTriple initial(const FeSpace& space, const Problem& problem);
};

enum class Strategy { MonNewton, MonLScheme, SplitNewton, SplitLScheme, MonMixed, SplitMixed };
enum class Linearization { Newton, LScheme };
/// Water flux in the transport equation: from the previous time level or
/// from the current flow iterate.
enum class FluxLag { PreviousTime, CurrentIterate };
/// L1 stabilisation of the Richards row: on gradients of the increments
/// (L <grad du, grad v>) or on the increments themselves (L <du, v>).
enum class LSchemeForm { Gradient, Mass };
/// Splitting: one linearisation sweep per coupling sweep (merged) or inner
/// iteration of each block to tolerance (nested).
enum class SplittingMode { Merged, Nested };
enum class NormKind { L2, Euclidean };
/// Sign of the convective flux in the transport weak form:
/// Literal -> <D grad c + u c, grad v>, Physical -> <D grad c - u c, grad v>.
enum class ConvectionForm { Literal, Physical };
/// Which pressure head selects the saturated (psi > 0) or unsaturated branch
/// of K inside a time step: the current iterate, or the previous time level.
enum class ConductivityBranch { Iterate, PreviousTime };
/// Enforcing theta_eps <= theta <= 1 after each iteration. ActiveSet clamps
/// and then holds clamped nodes at the bound in later solves until the
/// capillarity residual points back inside; Clamp only projects the iterate.
enum class ThetaBounds { ActiveSet, Clamp };

std::string to_string(Strategy s);
std::string to_string(Linearization l);
std::string to_string(FluxLag f);
std::string to_string(LSchemeForm f);
std::string to_string(SplittingMode m);
std::string to_string(NormKind k);
std::string to_string(ConvectionForm f);
std::string to_string(ConductivityBranch b);
std::string to_string(ThetaBounds b);

bool is_monolithic(Strategy s);
bool is_mixed(Strategy s);

struct SchemeConfig {
  Strategy strategy = Strategy::MonLScheme;
  double L1_psi = 0.01;
  double L1_theta = 0.01;
  double L2 = 0.01;
  double L3 = 0.1;
  double tol = 1e-6;
  int max_iter = 100;
  int mixed_switch = 5;
  double mixed_switch_tol = 1e-2;
  bool mixed_fallback = false;
  FluxLag flux_lag = FluxLag::PreviousTime;
  LSchemeForm lscheme_form = LSchemeForm::Gradient;
  SplittingMode splitting_mode = SplittingMode::Merged;
  NormKind norm = NormKind::L2;
  double divergence_limit = 1e8;
  bool mass_lumping = false;
  ConvectionForm convection_form = ConvectionForm::Literal;
  ConductivityBranch conductivity_branch = ConductivityBranch::PreviousTime;
  ThetaBounds theta_bounds = ThetaBounds::ActiveSet;

  void validate() const;
  bool operator==(const SchemeConfig&) const = default;
};

struct IterationNorms {
  double psi = 0.0;
  double theta = 0.0;
  double c = 0.0;

  double max() const;
  bool finite() const;
};

struct ConvergenceResult {
  bool converged = false;
  IterationNorms norms;
};

/// Converged iff all three increment norms are strictly below tol.
ConvergenceResult convergence_check(const StateTriple& prev_iter, const StateTriple& curr_iter,
                                    const CsrMatrix& mass, double tol, NormKind norm = NormKind::L2);

struct IterationInfo {
  Linearization scheme = Linearization::LScheme;
  IterationNorms norms;
};

/// Mixed controller: L-scheme while the iteration index is at most
/// mixed_switch and the last increment is above mixed_switch_tol, Newton
/// afterwards. With mixed_fallback, a Newton iteration whose increment grows
/// by more than 10x sends the rest of the time step back to the L-scheme.
Linearization mixed_controller(std::span<const IterationInfo> history, const SchemeConfig& config);

/// Water-content bound state per node: 0 free, +1 held at 1, -1 held at theta_eps.
using ActiveSet = std::vector<signed char>;

/// Reusable linear-solver state shared by all steps of one run.
struct SchemeWorkspace {
  BlockSolver solver;
};

/// Everything one backward Euler step needs: previous level, boundary data
/// and sources at t_n, the lagged water flux, and the water-content active set.
class StepContext {
public:
  StepContext(const FeSpace& space, const Problem& problem, const ConstitutiveSet& set,
              const SchemeConfig& config, SchemeWorkspace& workspace, const StateTriple& prev, double t_n,
              double dt);

  const FeSpace& space;
  const Problem& problem;
  const ConstitutiveSet& set;
  const SchemeConfig& config;
  SchemeWorkspace& workspace;
  const StateTriple& prev;
  double t;
  double dt;

  DirichletValues psi_bc;
  DirichletValues c_bc;
  Vector s1_load;    // integral of S1 phi_i at t_n
  Vector spsi_load;  // integral of S_psi phi_i at t_n
  Vector s2_load;    // integral of S2 phi_i at t_n
  QpVectorField lagged_flux;
  QpField branch_psi;          // previous-level psi at quadrature points
  Vector prev_transport_mass;  // integral of theta^{n-1} c^{n-1} phi_i
  CsrMatrix diffusion;         // unweighted D stiffness
  CsrMatrix mass;              // unweighted mass, row-lumped when configured
  ActiveSet active;
  long clamp_events = 0;
  bool active_set_changed = false;  // set by the last iteration

  /// Previous state with Dirichlet values at t_n imposed.
  StateTriple initial_iterate() const;
  /// Activates bound nodes of `state` whose capillarity residual pushes outward.
  void initialize_active_set(const StateTriple& state);
  /// Post-iteration clamping of water content with active-set bookkeeping.
  /// Returns true when the active set changed.
  bool project_water_content(StateTriple& state);
  /// Residual of the capillarity relation at every node.
  Vector capillarity_residual(const StateTriple& state) const;
};

/// One iteration of the monolithic Newton method (coupled 3N x 3N system).
StateTriple newton_iteration_monolithic(StepContext& ctx, const StateTriple& iter);
/// One iteration of the monolithic L-scheme.
StateTriple lscheme_iteration_monolithic(StepContext& ctx, const StateTriple& iter);
/// One outer iteration of the splitting scheme: flow block with c frozen,
/// then transport with the new flow fields.
StateTriple splitting_iteration(StepContext& ctx, const StateTriple& iter, Linearization inner);

struct StepResidual {
  double richards = 0.0;
  double capillarity = 0.0;
  double transport = 0.0;
  double max() const;
};

/// Euclidean norms of the fully nonlinear discrete residuals, assembled
/// without any linearisation. Dirichlet rows and rows of water-content nodes
/// held at a bound are excluded.
StepResidual discrete_residual(const StepContext& ctx, const StateTriple& state);

}  // namespace dyncap
