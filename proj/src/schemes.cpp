#include "dyncap/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "dyncap/error.hpp"

namespace dyncap {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::MonNewton: return "MON-Newton";
    case Strategy::MonLScheme: return "MON-LS";
    case Strategy::SplitNewton: return "NonLinS-Newton";
    case Strategy::SplitLScheme: return "NonLinS-LS";
    case Strategy::MonMixed: return "MON-Mixed";
    case Strategy::SplitMixed: return "NonLinS-Mixed";
  }
  return "?";
}

std::string to_string(Linearization l) { return l == Linearization::Newton ? "Newton" : "LScheme"; }
std::string to_string(FluxLag f) { return f == FluxLag::PreviousTime ? "previous-time" : "current-iterate"; }
std::string to_string(LSchemeForm f) { return f == LSchemeForm::Gradient ? "gradient" : "mass"; }
std::string to_string(SplittingMode m) { return m == SplittingMode::Merged ? "merged" : "nested"; }
std::string to_string(NormKind k) { return k == NormKind::L2 ? "l2" : "euclidean"; }
std::string to_string(ConvectionForm f) { return f == ConvectionForm::Literal ? "literal" : "physical"; }
std::string to_string(ThetaBounds b) { return b == ThetaBounds::ActiveSet ? "active-set" : "clamp"; }
std::string to_string(ConductivityBranch b) {
  return b == ConductivityBranch::Iterate ? "iterate" : "previous-time";
}

bool is_monolithic(Strategy s) {
  return s == Strategy::MonNewton || s == Strategy::MonLScheme || s == Strategy::MonMixed;
}

bool is_mixed(Strategy s) { return s == Strategy::MonMixed || s == Strategy::SplitMixed; }

void SchemeConfig::validate() const {
  if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (mixed_switch < 0) throw ConfigError("mixed_switch must be >= 0");
  if (!(mixed_switch_tol >= 0.0)) throw ConfigError("mixed_switch_tol must be >= 0");
  if (!(divergence_limit > 0.0)) throw ConfigError("divergence_limit must be > 0");
  for (double l : {L1_psi, L1_theta, L2, L3}) {
    if (!(l >= 0.0)) throw ConfigError("L-scheme constants must be >= 0");
  }
  const bool uses_lscheme = strategy == Strategy::MonLScheme || strategy == Strategy::SplitLScheme || is_mixed(strategy);
  if (uses_lscheme && !(L1_psi > 0.0 && L1_theta > 0.0 && L2 > 0.0 && L3 > 0.0)) {
    throw ConfigError("L-scheme strategies need L1_psi, L1_theta, L2, L3 > 0");
  }
}

double IterationNorms::max() const { return std::max({psi, theta, c}); }

bool IterationNorms::finite() const { return std::isfinite(psi) && std::isfinite(theta) && std::isfinite(c); }

double StepResidual::max() const { return std::max({richards, capillarity, transport}); }

namespace {

Vector difference(std::span<const double> a, std::span<const double> b) {
  Vector d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

double field_norm(const CsrMatrix& mass, std::span<const double> v, NormKind kind) {
  return kind == NormKind::L2 ? discrete_l2_norm(mass, v) : norm2(v);
}

}  // namespace

ConvergenceResult convergence_check(const StateTriple& prev_iter, const StateTriple& curr_iter,
                                    const CsrMatrix& mass, double tol, NormKind norm) {
  ConvergenceResult r;
  r.norms.psi = field_norm(mass, difference(curr_iter.psi.values, prev_iter.psi.values), norm);
  r.norms.theta = field_norm(mass, difference(curr_iter.theta.values, prev_iter.theta.values), norm);
  r.norms.c = field_norm(mass, difference(curr_iter.c.values, prev_iter.c.values), norm);
  r.converged = r.norms.psi < tol && r.norms.theta < tol && r.norms.c < tol;
  return r;
}

Linearization mixed_controller(std::span<const IterationInfo> history, const SchemeConfig& config) {
  const auto newton_start = std::find_if(history.begin(), history.end(),
                                         [](const IterationInfo& h) { return h.scheme == Linearization::Newton; });
  if (newton_start != history.end()) {
    if (!config.mixed_fallback) return Linearization::Newton;
    // Once the Newton phase has started, any L-scheme entry marks a fallback.
    for (auto it = newton_start; it != history.end(); ++it) {
      if (it->scheme == Linearization::LScheme) return Linearization::LScheme;
    }
    const auto& last = history.back();
    if (history.size() >= 2) {
      const double before = history[history.size() - 2].norms.max();
      if (!last.norms.finite() || last.norms.max() > 10.0 * before) return Linearization::LScheme;
    }
    return Linearization::Newton;
  }
  const auto next_index = static_cast<int>(history.size()) + 1;
  if (next_index > config.mixed_switch) return Linearization::Newton;
  if (!history.empty() && history.back().norms.max() <= config.mixed_switch_tol) return Linearization::Newton;
  return Linearization::LScheme;
}

StateTriple StateTriple::initial(const FeSpace& space, const Problem& problem) {
  StateTriple s;
  s.psi.values = interpolate_nodal(space, problem.psi0);
  s.theta.values = interpolate_nodal(space, problem.theta0);
  s.c.values = interpolate_nodal(space, problem.c0);
  s.time = 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// step context

namespace {

CsrMatrix mass_op(const StepContext& ctx, std::span<const double> weight) {
  CsrMatrix m = assemble_weighted_mass_qp(ctx.space, weight);
  if (ctx.config.mass_lumping) m.lump_rows();
  return m;
}

Vector source_load(const FeSpace& space, const SpaceTimeFunction& f, double t) {
  if (!f) return Vector(static_cast<std::size_t>(space.num_nodes()), 0.0);
  return assemble_load_qp(space, evaluate_at_qp(space, [&](const Point& p) { return f(p, t); }));
}

double convection_sign(const SchemeConfig& config) {
  return config.convection_form == ConvectionForm::Literal ? 1.0 : -1.0;
}

struct QpEval {
  QpField theta, psi, c;
  QpVectorField grad_psi;
  QpField K, dK_theta, dK_psi, p, dp_theta, dp_c, tau, dtau, R, dR;
};

QpEval evaluate_qp(const StepContext& ctx, const StateTriple& s, long* events) {
  const FeSpace& space = ctx.space;
  const ConstitutiveSet& set = ctx.set;
  const bool lag_branch = ctx.config.conductivity_branch == ConductivityBranch::PreviousTime;
  QpEval q;
  q.theta = interpolate(space, s.theta.values);
  q.psi = interpolate(space, s.psi.values);
  q.c = interpolate(space, s.c.values);
  q.grad_psi = gradient(space, s.psi.values);
  const std::size_t n = q.theta.size();
  for (QpField* f : {&q.K, &q.dK_theta, &q.dK_psi, &q.p, &q.dp_theta, &q.dp_c, &q.tau, &q.dtau, &q.R, &q.dR}) {
    f->resize(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double th = clamp_theta(q.theta[i], set, events);
    q.theta[i] = th;
    const double branch = lag_branch ? ctx.branch_psi[i] : q.psi[i];
    q.K[i] = conductivity(th, branch, set.vg);
    const auto dk = conductivity_derivatives(th, branch, set.vg);
    q.dK_theta[i] = dk.d_theta;
    q.dK_psi[i] = dk.d_psi;
    const auto cp = capillary_pressure(th, q.c[i], set);
    q.p[i] = cp.p;
    q.dp_theta[i] = cp.dp_dtheta;
    q.dp_c[i] = cp.dp_dc;
    const auto tv = tau(th, set);
    q.tau[i] = tv.tau;
    q.dtau[i] = tv.dtau_dtheta;
    const auto rv = reaction(q.c[i], set);
    q.R[i] = rv.r;
    q.dR[i] = rv.dr_dc;
  }
  return q;
}

}  // namespace

StepContext::StepContext(const FeSpace& space_, const Problem& problem_, const ConstitutiveSet& set_,
                         const SchemeConfig& config_, SchemeWorkspace& workspace_, const StateTriple& prev_,
                         double t_n, double dt_)
    : space(space_),
      problem(problem_),
      set(set_),
      config(config_),
      workspace(workspace_),
      prev(prev_),
      t(t_n),
      dt(dt_) {
  if (!(dt > 0.0)) throw ConfigError("time step must be > 0");
  const auto n = static_cast<std::size_t>(space.num_nodes());
  if (prev.psi.size() != n || prev.theta.size() != n || prev.c.size() != n) {
    throw AssemblyError("previous state does not match the mesh");
  }
  if (problem.psi_dirichlet) psi_bc = problem.psi_dirichlet(space.mesh(), t);
  if (problem.c_dirichlet) c_bc = problem.c_dirichlet(space.mesh(), t);
  s1_load = source_load(space, problem.s1, t);
  spsi_load = source_load(space, problem.spsi, t);
  s2_load = source_load(space, problem.s2, t);
  branch_psi = interpolate(space, prev.psi.values);
  lagged_flux = compute_water_flux(space, prev.psi, prev.theta, set, &clamp_events);
  mass = space.mass();
  if (config.mass_lumping) mass.lump_rows();
  QpField th_prev = interpolate(space, prev.theta.values);
  prev_transport_mass = mass_op(*this, th_prev) * prev.c.values;
  diffusion = assemble_tensor_stiffness(space, set.diffusion);
  active.assign(n, 0);
}

StateTriple StepContext::initial_iterate() const {
  StateTriple s = prev;
  s.time = t;
  for (std::size_t k = 0; k < psi_bc.nodes.size(); ++k) {
    s.psi[static_cast<std::size_t>(psi_bc.nodes[k])] = psi_bc.values[k];
  }
  for (std::size_t k = 0; k < c_bc.nodes.size(); ++k) {
    s.c[static_cast<std::size_t>(c_bc.nodes[k])] = c_bc.values[k];
  }
  return s;
}

Vector StepContext::capillarity_residual(const StateTriple& state) const {
  const QpEval q = evaluate_qp(*this, state, nullptr);
  const QpField th_prev = interpolate(space, prev.theta.values);
  QpField f(q.theta.size());
  QpField g(q.theta.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = dt * (q.psi[i] + q.p[i]);
    g[i] = q.tau[i] * (q.theta[i] - th_prev[i]);
  }
  Vector r = assemble_load_qp(space, f);
  const Vector rg = assemble_load_qp(space, g);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= rg[i] + dt * spsi_load[i];
  return r;
}

void StepContext::initialize_active_set(const StateTriple& state) {
  std::fill(active.begin(), active.end(), 0);
  if (config.theta_bounds == ThetaBounds::Clamp) return;
  const auto& th = state.theta.values;
  const bool any = std::any_of(th.begin(), th.end(), [&](double v) { return v >= 1.0 || v <= set.theta_eps; });
  if (!any) return;
  const Vector r = capillarity_residual(state);
  for (std::size_t k = 0; k < th.size(); ++k) {
    if (th[k] >= 1.0 && r[k] > 0.0) active[k] = 1;
    if (th[k] <= set.theta_eps && r[k] < 0.0) active[k] = -1;
  }
}

bool StepContext::project_water_content(StateTriple& state) {
  auto& th = state.theta.values;
  if (config.theta_bounds == ThetaBounds::Clamp) {
    for (auto& v : th) v = clamp_theta(v, set, &clamp_events);
    active_set_changed = false;
    return false;
  }
  bool changed = false;
  bool any_active = false;
  for (std::size_t k = 0; k < th.size(); ++k) {
    if (active[k] == 0) {
      if (th[k] > 1.0) {
        th[k] = 1.0;
        active[k] = 1;
        ++clamp_events;
        changed = true;
      } else if (th[k] < set.theta_eps) {
        th[k] = set.theta_eps;
        active[k] = -1;
        ++clamp_events;
        changed = true;
      }
    } else {
      th[k] = active[k] > 0 ? 1.0 : set.theta_eps;
      any_active = true;
    }
  }
  if (any_active) {
    const Vector r = capillarity_residual(state);
    for (std::size_t k = 0; k < th.size(); ++k) {
      if ((active[k] > 0 && r[k] < 0.0) || (active[k] < 0 && r[k] > 0.0)) {
        active[k] = 0;
        changed = true;
      }
    }
  }
  active_set_changed = changed;
  return changed;
}

// ---------------------------------------------------------------------------
// linearised blocks

namespace {

struct FlowBlocks {
  CsrMatrix r_psi, r_theta, p_psi, p_theta;
  std::optional<CsrMatrix> p_c;
  Vector rhs_r, rhs_p;
};

struct TransportBlock {
  CsrMatrix t_c;
  Vector rhs;
};

void add_scaled(Vector& y, double s, std::span<const double> x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

// Richards row shared part: M theta^{n-1} - dt g_K + dt S1.
Vector richards_base_rhs(const StepContext& ctx, const QpEval& q) {
  Vector rhs = ctx.mass * ctx.prev.theta.values;
  add_scaled(rhs, -ctx.dt, assemble_gravity_load_qp(ctx.space, q.K));
  add_scaled(rhs, ctx.dt, ctx.s1_load);
  return rhs;
}

FlowBlocks newton_flow(const StepContext& ctx, const StateTriple& it, const QpEval& q, bool couple_c) {
  const auto& space = ctx.space;
  const double dt = ctx.dt;
  const std::size_t nq = q.theta.size();
  FlowBlocks f;

  // Richards: M theta + dt A_K psi + dt B_theta (theta - theta^j) + dt B_psi (psi - psi^j)
  f.r_psi = assemble_weighted_stiffness_qp(space, q.K);
  f.r_psi.scale(dt);
  f.rhs_r = richards_base_rhs(ctx, q);
  QpVectorField w(nq);
  for (std::size_t i = 0; i < nq; ++i) {
    w[i] = {q.dK_theta[i] * q.grad_psi[i][0], q.dK_theta[i] * (q.grad_psi[i][1] + 1.0)};
  }
  CsrMatrix b_theta = assemble_convection(space, w);
  b_theta.scale(dt);
  add_scaled(f.rhs_r, 1.0, b_theta * it.theta.values);
  f.r_theta = ctx.mass;
  f.r_theta.axpy(1.0, b_theta);
  if (std::any_of(q.dK_psi.begin(), q.dK_psi.end(), [](double v) { return v != 0.0; })) {
    for (std::size_t i = 0; i < nq; ++i) {
      w[i] = {q.dK_psi[i] * q.grad_psi[i][0], q.dK_psi[i] * (q.grad_psi[i][1] + 1.0)};
    }
    CsrMatrix b_psi = assemble_convection(space, w);
    b_psi.scale(dt);
    add_scaled(f.rhs_r, 1.0, b_psi * it.psi.values);
    f.r_psi.axpy(1.0, b_psi);
  }

  // Capillarity: dt M psi + [dt M_{p'} - M_tau - M_{tau' (theta^j - theta^{n-1})}] theta + dt M_{p_c} c
  const QpField th_prev = interpolate(space, ctx.prev.theta.values);
  QpField w_theta(nq);
  QpField w_tau(nq);
  QpField w_p(nq);
  for (std::size_t i = 0; i < nq; ++i) {
    w_theta[i] = dt * q.dp_theta[i] - q.tau[i] - q.dtau[i] * (q.theta[i] - th_prev[i]);
    w_tau[i] = q.tau[i];
    w_p[i] = -dt * q.p[i];
  }
  f.p_psi = ctx.mass;
  f.p_psi.scale(dt);
  f.p_theta = mass_op(ctx, w_theta);
  const CsrMatrix m_tau = mass_op(ctx, w_tau);
  f.rhs_p = assemble_load_qp(space, w_p);
  add_scaled(f.rhs_p, 1.0, f.p_theta * it.theta.values);
  add_scaled(f.rhs_p, 1.0, m_tau * difference(it.theta.values, ctx.prev.theta.values));
  add_scaled(f.rhs_p, dt, ctx.spsi_load);
  if (couple_c) {
    QpField w_c(nq);
    for (std::size_t i = 0; i < nq; ++i) w_c[i] = dt * q.dp_c[i];
    CsrMatrix p_c = mass_op(ctx, w_c);
    add_scaled(f.rhs_p, 1.0, p_c * it.c.values);
    f.p_c = std::move(p_c);
  }
  return f;
}

FlowBlocks lscheme_flow(const StepContext& ctx, const StateTriple& it, const QpEval& q) {
  const auto& space = ctx.space;
  const auto& cfg = ctx.config;
  const double dt = ctx.dt;
  const std::size_t nq = q.theta.size();
  FlowBlocks f;

  // Richards: M theta + dt A_K psi + L1_psi S (psi - psi^j) + L1_theta S (theta - theta^j)
  // with S = dt * stiffness (gradient form) or mass (mass form).
  const bool grad = cfg.lscheme_form == LSchemeForm::Gradient;
  CsrMatrix stab = grad ? space.stiffness() : ctx.mass;
  if (grad) stab.scale(dt);
  f.r_psi = assemble_weighted_stiffness_qp(space, q.K);
  f.r_psi.scale(dt);
  f.r_psi.axpy(cfg.L1_psi, stab);
  f.r_theta = ctx.mass;
  f.r_theta.axpy(cfg.L1_theta, stab);
  f.rhs_r = richards_base_rhs(ctx, q);
  const Vector sp = stab * it.psi.values;
  const Vector st = stab * it.theta.values;
  add_scaled(f.rhs_r, cfg.L1_psi, sp);
  add_scaled(f.rhs_r, cfg.L1_theta, st);

  // Capillarity: dt M psi - M_tau theta - L2 M theta = -dt <p^j, v> - M_tau theta^{n-1} - L2 M theta^j
  QpField w_p(nq);
  for (std::size_t i = 0; i < nq; ++i) w_p[i] = -dt * q.p[i];
  const CsrMatrix m_tau = mass_op(ctx, q.tau);
  f.p_psi = ctx.mass;
  f.p_psi.scale(dt);
  f.p_theta = m_tau;
  f.p_theta.scale(-1.0);
  f.p_theta.axpy(-cfg.L2, ctx.mass);
  f.rhs_p = assemble_load_qp(space, w_p);
  add_scaled(f.rhs_p, -1.0, m_tau * ctx.prev.theta.values);
  add_scaled(f.rhs_p, -cfg.L2, ctx.mass * it.theta.values);
  add_scaled(f.rhs_p, dt, ctx.spsi_load);
  return f;
}

/// Transport row with mass weight theta_mass, water flux u and the reaction
/// linearised around c^j = `c_iter`.
TransportBlock transport_block(const StepContext& ctx, std::span<const double> c_iter, const QpField& theta_mass,
                               const QpVectorField& u, const QpEval& q, Linearization lin) {
  const auto& space = ctx.space;
  const double dt = ctx.dt;
  const std::size_t nq = theta_mass.size();
  TransportBlock t;
  t.t_c = mass_op(ctx, theta_mass);
  t.t_c.axpy(dt, ctx.diffusion);
  CsrMatrix conv = assemble_convection(space, u);
  t.t_c.axpy(dt * convection_sign(ctx.config), conv);
  t.rhs = ctx.prev_transport_mass;
  add_scaled(t.rhs, dt, ctx.s2_load);
  QpField r(nq);
  for (std::size_t i = 0; i < nq; ++i) r[i] = -dt * q.R[i];
  add_scaled(t.rhs, 1.0, assemble_load_qp(space, r));
  if (lin == Linearization::Newton) {
    QpField w(nq);
    for (std::size_t i = 0; i < nq; ++i) w[i] = dt * q.dR[i];
    const CsrMatrix m_r = mass_op(ctx, w);
    t.t_c.axpy(1.0, m_r);
    add_scaled(t.rhs, 1.0, m_r * c_iter);
  } else {
    t.t_c.axpy(ctx.config.L3, ctx.mass);
    add_scaled(t.rhs, ctx.config.L3, ctx.mass * c_iter);
  }
  return t;
}

const QpField* branch_for_flux(const StepContext& ctx) {
  return ctx.config.conductivity_branch == ConductivityBranch::PreviousTime ? &ctx.branch_psi : nullptr;
}

QpVectorField transport_flux(StepContext& ctx, const StateTriple& flow_state) {
  if (ctx.config.flux_lag == FluxLag::PreviousTime) return ctx.lagged_flux;
  return compute_water_flux(ctx.space, flow_state.psi, flow_state.theta, ctx.set, &ctx.clamp_events,
                            branch_for_flux(ctx));
}

void constrain_flow(const StepContext& ctx, SparseSystem& sys) {
  apply_dirichlet(sys, 0, ctx.psi_bc);
  const auto n = static_cast<std::size_t>(ctx.space.num_nodes());
  for (std::size_t k = 0; k < n; ++k) {
    if (ctx.active[k] == 0) continue;
    sys.matrix.replace_row_by_identity(1, static_cast<Index>(k));
    sys.rhs[n + k] = ctx.active[k] > 0 ? 1.0 : ctx.set.theta_eps;
  }
}

StateTriple unpack(const StateTriple& iter, double t, const Vector& x, bool has_c) {
  StateTriple s = iter;
  s.time = t;
  const auto n = iter.psi.size();
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n), s.psi.values.begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(n), x.begin() + static_cast<std::ptrdiff_t>(2 * n),
            s.theta.values.begin());
  if (has_c) {
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(2 * n), x.begin() + static_cast<std::ptrdiff_t>(3 * n),
              s.c.values.begin());
  }
  return s;
}

StateTriple solve_monolithic(StepContext& ctx, const StateTriple& iter, FlowBlocks flow, TransportBlock tr) {
  const Index n = ctx.space.num_nodes();
  SparseSystem sys{BlockMatrix(3, n), {}};
  sys.matrix.set(0, 0, std::move(flow.r_psi));
  sys.matrix.set(0, 1, std::move(flow.r_theta));
  sys.matrix.set(1, 0, std::move(flow.p_psi));
  sys.matrix.set(1, 1, std::move(flow.p_theta));
  if (flow.p_c) sys.matrix.set(1, 2, std::move(*flow.p_c));
  sys.matrix.set(2, 2, std::move(tr.t_c));
  sys.rhs = std::move(flow.rhs_r);
  sys.rhs.insert(sys.rhs.end(), flow.rhs_p.begin(), flow.rhs_p.end());
  sys.rhs.insert(sys.rhs.end(), tr.rhs.begin(), tr.rhs.end());
  constrain_flow(ctx, sys);
  apply_dirichlet(sys, 2, ctx.c_bc);
  const Vector x = ctx.workspace.solver.solve(sys);
  StateTriple next = unpack(iter, ctx.t, x, true);
  ctx.project_water_content(next);
  return next;
}

StateTriple flow_sweep(StepContext& ctx, const StateTriple& iter, Linearization lin) {
  const QpEval q = evaluate_qp(ctx, iter, &ctx.clamp_events);
  FlowBlocks flow = lin == Linearization::Newton ? newton_flow(ctx, iter, q, false) : lscheme_flow(ctx, iter, q);
  SparseSystem sys{BlockMatrix(2, ctx.space.num_nodes()), {}};
  sys.matrix.set(0, 0, std::move(flow.r_psi));
  sys.matrix.set(0, 1, std::move(flow.r_theta));
  sys.matrix.set(1, 0, std::move(flow.p_psi));
  sys.matrix.set(1, 1, std::move(flow.p_theta));
  sys.rhs = std::move(flow.rhs_r);
  sys.rhs.insert(sys.rhs.end(), flow.rhs_p.begin(), flow.rhs_p.end());
  constrain_flow(ctx, sys);
  const Vector x = ctx.workspace.solver.solve(sys);
  StateTriple next = unpack(iter, ctx.t, x, false);
  ctx.project_water_content(next);
  return next;
}

StateTriple transport_sweep(StepContext& ctx, const StateTriple& state, Linearization lin) {
  const QpEval q = evaluate_qp(ctx, state, &ctx.clamp_events);
  const QpVectorField u = transport_flux(ctx, state);
  TransportBlock tr = transport_block(ctx, state.c.values, q.theta, u, q, lin);
  SparseSystem sys{BlockMatrix(1, ctx.space.num_nodes()), std::move(tr.rhs)};
  sys.matrix.set(0, 0, std::move(tr.t_c));
  apply_dirichlet(sys, 0, ctx.c_bc);
  StateTriple next = state;
  next.c.values = ctx.workspace.solver.solve(sys);
  return next;
}

}  // namespace

StateTriple newton_iteration_monolithic(StepContext& ctx, const StateTriple& iter) {
  const QpEval q = evaluate_qp(ctx, iter, &ctx.clamp_events);
  FlowBlocks flow = newton_flow(ctx, iter, q, true);
  const QpVectorField u = transport_flux(ctx, iter);
  TransportBlock tr = transport_block(ctx, iter.c.values, q.theta, u, q, Linearization::Newton);
  return solve_monolithic(ctx, iter, std::move(flow), std::move(tr));
}

StateTriple lscheme_iteration_monolithic(StepContext& ctx, const StateTriple& iter) {
  const QpEval q = evaluate_qp(ctx, iter, &ctx.clamp_events);
  FlowBlocks flow = lscheme_flow(ctx, iter, q);
  const QpVectorField u = transport_flux(ctx, iter);
  TransportBlock tr = transport_block(ctx, iter.c.values, q.theta, u, q, Linearization::LScheme);
  return solve_monolithic(ctx, iter, std::move(flow), std::move(tr));
}

StateTriple splitting_iteration(StepContext& ctx, const StateTriple& iter, Linearization inner) {
  if (ctx.config.splitting_mode == SplittingMode::Merged) {
    StateTriple flow = flow_sweep(ctx, iter, inner);
    const bool changed = ctx.active_set_changed;
    StateTriple next = transport_sweep(ctx, flow, inner);
    ctx.active_set_changed = changed;
    return next;
  }

  // Nested: iterate the flow block to tolerance, then the transport block.
  const CsrMatrix& m = ctx.space.mass();
  bool changed = false;
  StateTriple flow = iter;
  for (int k = 0; k < ctx.config.max_iter; ++k) {
    StateTriple next = flow_sweep(ctx, flow, inner);
    changed = changed || ctx.active_set_changed;
    const auto r = convergence_check(flow, next, m, ctx.config.tol, ctx.config.norm);
    flow = std::move(next);
    if (r.norms.psi < ctx.config.tol && r.norms.theta < ctx.config.tol && !ctx.active_set_changed) break;
    if (!r.norms.finite() || r.norms.max() > ctx.config.divergence_limit) break;
  }
  StateTriple state = flow;
  for (int k = 0; k < ctx.config.max_iter; ++k) {
    StateTriple next = transport_sweep(ctx, state, inner);
    const double dc = field_norm(m, difference(next.c.values, state.c.values), ctx.config.norm);
    state = std::move(next);
    if (dc < ctx.config.tol || !std::isfinite(dc)) break;
  }
  ctx.active_set_changed = changed;
  return state;
}

// ---------------------------------------------------------------------------

StepResidual discrete_residual(const StepContext& ctx, const StateTriple& state) {
  const auto& space = ctx.space;
  const double dt = ctx.dt;
  const QpEval q = evaluate_qp(ctx, state, nullptr);
  const QpField th_prev = interpolate(space, ctx.prev.theta.values);
  const QpField c_prev = interpolate(space, ctx.prev.c.values);
  const QpVectorField grad_c = gradient(space, state.c.values);
  const std::size_t nq = q.theta.size();
  const QpVectorField u = ctx.config.flux_lag == FluxLag::PreviousTime
                              ? ctx.lagged_flux
                              : compute_water_flux(space, state.psi, state.theta, ctx.set, nullptr, branch_for_flux(ctx));
  const double sigma = convection_sign(ctx.config);
  const auto& d = ctx.set.diffusion;

  QpField m_r(nq), m_t(nq), r_t(nq);
  QpVectorField flux_r(nq), flux_t(nq);
  for (std::size_t i = 0; i < nq; ++i) {
    m_r[i] = q.theta[i] - th_prev[i];
    flux_r[i] = {dt * q.K[i] * q.grad_psi[i][0], dt * q.K[i] * (q.grad_psi[i][1] + 1.0)};
    m_t[i] = q.theta[i] * q.c[i] - th_prev[i] * c_prev[i] + dt * q.R[i];
    const auto& g = grad_c[i];
    flux_t[i] = {dt * (d.xx * g[0] + d.xy * g[1] + sigma * u[i][0] * q.c[i]),
                 dt * (d.yx * g[0] + d.yy * g[1] + sigma * u[i][1] * q.c[i])};
  }
  Vector rr = assemble_load_qp(space, m_r);
  add_scaled(rr, 1.0, assemble_gradient_load_qp(space, flux_r));
  add_scaled(rr, -dt, ctx.s1_load);
  Vector rt = assemble_load_qp(space, m_t);
  add_scaled(rt, 1.0, assemble_gradient_load_qp(space, flux_t));
  add_scaled(rt, -dt, ctx.s2_load);
  Vector rp = ctx.capillarity_residual(state);

  for (Index k : ctx.psi_bc.nodes) rr[static_cast<std::size_t>(k)] = 0.0;
  for (Index k : ctx.c_bc.nodes) rt[static_cast<std::size_t>(k)] = 0.0;
  for (std::size_t k = 0; k < rp.size(); ++k) {
    if (ctx.active[k] != 0) rp[k] = 0.0;
  }
  return {norm2(rr), norm2(rp), norm2(rt)};
}

}  // namespace dyncap
