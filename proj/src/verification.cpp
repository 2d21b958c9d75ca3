#include "dyncap/verification.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <tuple>
#include <cstdio>

#include "dyncap/error.hpp"
#include "dyncap/fem.hpp"

namespace dyncap {

// ---------------------------------------------------------------------------
// manufactured solutions

namespace {

template <class F>
double d1(F&& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

}  // namespace

MmsSources mms_sources(const ManufacturedCase& mms, const ConstitutiveSet& set, ConvectionForm form,
                       const Point& p, double t, double h) {
  const auto& D = set.diffusion;
  const double sigma = form == ConvectionForm::Literal ? 1.0 : -1.0;

  auto grad = [h](const SpaceTimeFunction& f, double x, double y, double s) {
    return std::array<double, 2>{d1([&](double v) { return f({v, y}, s); }, x, h),
                                 d1([&](double v) { return f({x, v}, s); }, y, h)};
  };
  // K (grad psi + e_z) at (x, y).
  auto water = [&](double x, double y) {
    const auto g = grad(mms.psi, x, y, t);
    const double k = conductivity(mms.theta({x, y}, t), mms.psi({x, y}, t), set.vg);
    return std::array<double, 2>{k * g[0], k * (g[1] + 1.0)};
  };
  // D grad c + sigma u c with u = -K (grad psi + e_z).
  auto solute = [&](double x, double y) {
    const auto g = grad(mms.c, x, y, t);
    const auto w = water(x, y);
    const double c = mms.c({x, y}, t);
    return std::array<double, 2>{D.xx * g[0] + D.xy * g[1] - sigma * w[0] * c,
                                 D.yx * g[0] + D.yy * g[1] - sigma * w[1] * c};
  };
  auto divergence = [&](auto&& flux) {
    return d1([&](double v) { return flux(v, p.y)[0]; }, p.x, h) +
           d1([&](double v) { return flux(p.x, v)[1]; }, p.y, h);
  };

  const double theta = mms.theta(p, t);
  const double psi = mms.psi(p, t);
  const double c = mms.c(p, t);
  const double theta_t = d1([&](double s) { return mms.theta(p, s); }, t, h);
  const double mass_t = d1([&](double s) { return mms.theta(p, s) * mms.c(p, s); }, t, h);

  MmsSources s;
  s.s1 = theta_t - divergence(water);
  s.spsi = psi + capillary_pressure(theta, c, set).p - tau(theta, set).tau * theta_t;
  s.s2 = mass_t - divergence(solute) + reaction(c, set).r;
  if (!std::isfinite(s.s1) || !std::isfinite(s.spsi) || !std::isfinite(s.s2)) {
    throw DomainError("manufactured case '" + mms.name + "' produced a non-finite source");
  }
  return s;
}

Problem manufactured_problem(const ManufacturedCase& mms, const ConstitutiveSet& set, ConvectionForm form) {
  Problem pb;
  pb.name = mms.name;
  pb.domain = mms.domain;
  pb.psi_dirichlet = dirichlet_on_sides({}, mms.psi);
  pb.c_dirichlet = dirichlet_on_sides({}, mms.c);
  pb.psi0 = [f = mms.psi](const Point& p) { return f(p, 0.0); };
  pb.theta0 = [f = mms.theta](const Point& p) { return f(p, 0.0); };
  pb.c0 = [f = mms.c](const Point& p) { return f(p, 0.0); };

  // The three source callbacks are evaluated point by point at the same
  // quadrature points; memoise per time level so each point is derived once.
  struct Cache {
    double t = std::nan("");
    std::map<std::pair<double, double>, MmsSources> values;
  };
  auto cache = std::make_shared<Cache>();
  auto lookup = [cache, mms, set, form](const Point& p, double t) -> const MmsSources& {
    if (!(cache->t == t)) {
      cache->values.clear();
      cache->t = t;
    }
    auto [it, inserted] = cache->values.try_emplace({p.x, p.y});
    if (inserted) it->second = mms_sources(mms, set, form, p, t);
    return it->second;
  };
  pb.s1 = [lookup](const Point& p, double t) { return lookup(p, t).s1; };
  pb.spsi = [lookup](const Point& p, double t) { return lookup(p, t).spsi; };
  pb.s2 = [lookup](const Point& p, double t) { return lookup(p, t).s2; };
  return pb;
}

ManufacturedCase mms_spatial_case() {
  using std::cos;
  using std::sin;
  constexpr double pi = std::numbers::pi;
  ManufacturedCase m;
  m.name = "spatial";
  m.domain = Domain2D{};
  m.theta = [](const Point& p, double t) { return 0.45 + 0.15 * sin(0.5 * pi * p.x) * cos(pi * p.y / 3.0) + 0.2 * t; };
  m.psi = [](const Point& p, double t) { return -1.0 - 0.3 * cos(0.7 * p.x) * sin(0.4 * p.y + 0.3) - 0.5 * t; };
  m.c = [](const Point& p, double) { return 1.0 + 0.3 * sin(p.x + 0.2) * cos(0.6 * p.y); };
  return m;
}

ManufacturedCase mms_temporal_case() {
  using std::cos;
  using std::sin;
  ManufacturedCase m;
  m.name = "temporal";
  m.domain = Domain2D{0.0, 1.0, 0.0, 1.0};
  m.theta = [](const Point& p, double t) { return 0.4 + 0.3 * sin(2.0 * t) * (0.5 + 0.1 * p.x + 0.05 * p.y); };
  m.psi = [](const Point& p, double t) { return -1.5 + 0.2 * p.x - 0.1 * p.y + 0.3 * cos(t); };
  m.c = [](const Point& p, double t) { return 1.0 + 0.5 * sin(t) * (1.0 + 0.2 * p.x + 0.1 * p.y); };
  return m;
}

ManufacturedCase mms_uniform_case(double theta0, double eps, const ConstitutiveSet& set) {
  ManufacturedCase m;
  m.name = "uniform";
  m.domain = Domain2D{0.0, 1.0, 0.0, 1.0};
  const double psi = -capillary_pressure(theta0, 0.0, set).p;
  m.theta = [theta0, eps](const Point&, double t) { return theta0 + eps * t; };
  m.psi = [psi](const Point&, double) { return psi; };
  m.c = [](const Point&, double) { return 0.0; };
  return m;
}

// ---------------------------------------------------------------------------
// errors and orders

namespace {

// Value of the discrete field at local coordinates (xi, eta) in [0, 1]^2 of
// a cell with nodes v (lower-left, lower-right, upper-right, upper-left).
double cell_value(ElementKind kind, const std::array<double, 4>& v, double xi, double eta) {
  if (kind == ElementKind::Q1) {
    return v[0] * (1 - xi) * (1 - eta) + v[1] * xi * (1 - eta) + v[2] * xi * eta + v[3] * (1 - xi) * eta;
  }
  if (eta <= xi) return v[0] + xi * (v[1] - v[0]) + eta * (v[2] - v[1]);
  return v[0] + xi * (v[2] - v[3]) + eta * (v[3] - v[0]);
}

}  // namespace

FieldErrors l2_errors(const FeSpace& space, const StateTriple& state, const ManufacturedCase& mms, double t) {
  const auto& mesh = space.mesh();
  const double g = std::sqrt(0.6);
  const double pts[3] = {0.5 * (1 - g), 0.5, 0.5 * (1 + g)};
  const double wts[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  const double area = mesh.dx() * mesh.dy();
  double e[3] = {0, 0, 0};
  const Vector* fields[3] = {&state.psi.values, &state.theta.values, &state.c.values};
  const SpaceTimeFunction* exact[3] = {&mms.psi, &mms.theta, &mms.c};
  for (Index cell = 0; cell < mesh.num_elements(); ++cell) {
    const auto& nodes = mesh.element(cell);
    const Point& origin = mesh.node(nodes[0]);
    for (int f = 0; f < 3; ++f) {
      std::array<double, 4> v{};
      for (int a = 0; a < 4; ++a) v[static_cast<std::size_t>(a)] = (*fields[f])[static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)])];
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const Point p{origin.x + pts[i] * mesh.dx(), origin.y + pts[j] * mesh.dy()};
          const double d = cell_value(space.kind(), v, pts[i], pts[j]) - (*exact[f])(p, t);
          e[f] += wts[i] * wts[j] * area * d * d;
        }
      }
    }
  }
  return {std::sqrt(e[0]), std::sqrt(e[1]), std::sqrt(e[2])};
}

MmsRun run_mms(const ManufacturedCase& mms, const ConstitutiveSet& set, const SchemeConfig& config, Index nx,
               Index ny, double T, double dt) {
  const FeSpace space(GridMesh(mms.domain, nx, ny));
  const Problem pb = manufactured_problem(mms, set, config.convection_form);
  MmsRun run;
  run.report = run_simulation(space, pb, set, config, TimeGrid::make(T, dt));
  run.errors = l2_errors(space, run.report.final_state, mms, run.report.final_state.time);
  return run;
}

OrderEstimate convergence_order(const std::vector<double>& steps, const std::vector<double>& errors) {
  if (steps.size() != errors.size() || steps.size() < 2) {
    throw DomainError("convergence_order needs matching step and error sequences of length >= 2");
  }
  OrderEstimate r;
  const auto n = static_cast<double>(steps.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i] > 0.0) || !(errors[i] > 0.0)) throw DomainError("convergence_order needs positive values");
    const double x = std::log(steps[i]);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    if (i > 0 && !((steps[i] < steps[i - 1]) == (errors[i] < errors[i - 1]) && errors[i] != errors[i - 1])) {
      r.monotone = false;
    }
  }
  r.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return r;
}

// ---------------------------------------------------------------------------
// single-element oracle

Problem single_element_problem(const SingleElementCase& cs) {
  Problem pb;
  pb.name = "single-element";
  pb.domain = Domain2D{0.0, 1.0, 0.0, 1.0};
  SideSelection top{false, false, false, true};
  pb.psi_dirichlet = dirichlet_on_sides(top, [v = cs.psi_top](const Point&, double) { return v; });
  pb.c_dirichlet = dirichlet_on_sides(top, [v = cs.c_top](const Point&, double) { return v; });
  pb.psi0 = [v = cs.psi0](const Point&) { return v; };
  pb.theta0 = [v = cs.theta0](const Point&) { return v; };
  pb.c0 = [v = cs.c0](const Point&) { return v; };
  return pb;
}

namespace {

using Vec12 = std::array<double, 12>;

struct OracleModel {
  const ConstitutiveSet& set;
  const SchemeConfig& config;
  const SingleElementCase& cs;
  OracleState prev;

  static double shape(int a, double x, double y) {
    const double sx = (a == 1 || a == 3) ? x : 1 - x;
    const double sy = (a >= 2) ? y : 1 - y;
    return sx * sy;
  }
  static std::array<double, 2> shape_grad(int a, double x, double y) {
    const double sx = (a == 1 || a == 3) ? x : 1 - x;
    const double sy = (a >= 2) ? y : 1 - y;
    const double dsx = (a == 1 || a == 3) ? 1.0 : -1.0;
    const double dsy = (a >= 2) ? 1.0 : -1.0;
    return {dsx * sy, sx * dsy};
  }
  double clamp(double th) const { return std::clamp(th, set.theta_eps, 1.0); }

  Vec12 residual(const Vec12& x) const {
    const double* psi = x.data();
    const double* th = x.data() + 4;
    const double* c = x.data() + 8;
    const double dt = cs.dt;
    const double sigma = config.convection_form == ConvectionForm::Literal ? 1.0 : -1.0;
    const auto& D = set.diffusion;
    Vec12 r{};
    const double g = 0.5 / std::sqrt(3.0);
    for (double qx : {0.5 - g, 0.5 + g}) {
      for (double qy : {0.5 - g, 0.5 + g}) {
        double v_psi = 0, v_th = 0, v_c = 0, p_psi = 0, p_th = 0, p_c = 0;
        std::array<double, 2> g_psi{}, g_c{}, g_ppsi{};
        for (int a = 0; a < 4; ++a) {
          const double n = shape(a, qx, qy);
          const auto dn = shape_grad(a, qx, qy);
          v_psi += n * psi[a];
          v_th += n * th[a];
          v_c += n * c[a];
          p_psi += n * prev.psi[a];
          p_th += n * prev.theta[a];
          p_c += n * prev.c[a];
          for (int k = 0; k < 2; ++k) {
            g_psi[static_cast<std::size_t>(k)] += dn[static_cast<std::size_t>(k)] * psi[a];
            g_c[static_cast<std::size_t>(k)] += dn[static_cast<std::size_t>(k)] * c[a];
            g_ppsi[static_cast<std::size_t>(k)] += dn[static_cast<std::size_t>(k)] * prev.psi[a];
          }
        }
        const double branch = config.conductivity_branch == ConductivityBranch::PreviousTime ? p_psi : v_psi;
        const double k = conductivity(clamp(v_th), branch, set.vg);
        std::array<double, 2> u{};
        if (config.flux_lag == FluxLag::PreviousTime) {
          const double kp = conductivity(clamp(p_th), p_psi, set.vg);
          u = {-kp * g_ppsi[0], -kp * (g_ppsi[1] + 1.0)};
        } else {
          u = {-k * g_psi[0], -k * (g_psi[1] + 1.0)};
        }
        const double pc = capillary_pressure(clamp(v_th), v_c, set).p;
        const double ta = tau(clamp(v_th), set).tau;
        const double rc = reaction(v_c, set).r;
        const double w = 0.25;
        for (int i = 0; i < 4; ++i) {
          const double n = shape(i, qx, qy);
          const auto dn = shape_grad(i, qx, qy);
          r[static_cast<std::size_t>(i)] +=
              w * ((v_th - p_th) * n + dt * k * (g_psi[0] * dn[0] + (g_psi[1] + 1.0) * dn[1]));
          r[static_cast<std::size_t>(4 + i)] += w * (dt * (v_psi + pc) * n - ta * (v_th - p_th) * n);
          const double fx = D.xx * g_c[0] + D.xy * g_c[1] + sigma * u[0] * v_c;
          const double fy = D.yx * g_c[0] + D.yy * g_c[1] + sigma * u[1] * v_c;
          r[static_cast<std::size_t>(8 + i)] +=
              w * ((v_th * v_c - p_th * p_c) * n + dt * (fx * dn[0] + fy * dn[1]) + dt * rc * n);
        }
      }
    }
    for (int i : {2, 3}) {
      r[static_cast<std::size_t>(i)] = psi[i] - cs.psi_top;
      r[static_cast<std::size_t>(8 + i)] = c[i] - cs.c_top;
    }
    return r;
  }
};

double max_abs(const Vec12& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

constexpr double kOracleRelaxation = 1e-3;
constexpr long kOracleBudget = 1000000;

struct LuFactors {
  std::array<Vec12, 12> a{};
  std::array<int, 12> perm{};
};

// Gaussian elimination with partial pivoting; false when singular.
bool lu_factor(std::array<Vec12, 12> a, LuFactors& out) {
  for (int i = 0; i < 12; ++i) out.perm[static_cast<std::size_t>(i)] = i;
  for (std::size_t k = 0; k < 12; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < 12; ++i) {
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    }
    if (a[piv][k] == 0.0) return false;
    std::swap(a[k], a[piv]);
    std::swap(out.perm[k], out.perm[piv]);
    for (std::size_t i = k + 1; i < 12; ++i) {
      a[i][k] /= a[k][k];
      for (std::size_t j = k + 1; j < 12; ++j) a[i][j] -= a[i][k] * a[k][j];
    }
  }
  out.a = a;
  return true;
}

Vec12 lu_solve(const LuFactors& lu, const Vec12& b) {
  Vec12 y{};
  for (std::size_t i = 0; i < 12; ++i) {
    double s = b[static_cast<std::size_t>(lu.perm[i])];
    for (std::size_t j = 0; j < i; ++j) s -= lu.a[i][j] * y[j];
    y[i] = s;
  }
  Vec12 x{};
  for (std::size_t i = 12; i-- > 0;) {
    double s = y[i];
    for (std::size_t j = i + 1; j < 12; ++j) s -= lu.a[i][j] * x[j];
    x[i] = s / lu.a[i][i];
  }
  return x;
}

}  // namespace

OracleResult single_element_oracle(const SingleElementCase& cs, const ConstitutiveSet& set,
                                   const SchemeConfig& config) {
  OracleResult out;
  OracleState s{};
  for (int a = 0; a < 4; ++a) {
    s.psi[a] = cs.psi0;
    s.theta[a] = cs.theta0;
    s.c[a] = cs.c0;
  }
  out.trajectory.push_back(s);
  for (int step = 1; step <= cs.steps; ++step) {
    OracleModel model{set, config, cs, s};
    Vec12 x{};
    for (int a = 0; a < 4; ++a) {
      x[static_cast<std::size_t>(a)] = s.psi[a];
      x[static_cast<std::size_t>(4 + a)] = s.theta[a];
      x[static_cast<std::size_t>(8 + a)] = s.c[a];
    }
    // Damped fixed point x <- x - w P^{-1} F(x). P is a finite-difference
    // Jacobian frozen at the start of the step; plain Richardson (P = I)
    // diverges on the capillarity rows, whose theta derivative is negative.
    std::array<Vec12, 12> jac{};
    const Vec12 f0 = model.residual(x);
    for (std::size_t j = 0; j < 12; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
      Vec12 xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Vec12 fp = model.residual(xp);
      const Vec12 fm = model.residual(xm);
      for (std::size_t i = 0; i < 12; ++i) jac[i][j] = (fp[i] - fm[i]) / (2 * h);
    }
    LuFactors lu;
    if (!lu_factor(jac, lu)) {
      out.diagnostic = "singular preconditioner at step " + std::to_string(step);
      return out;
    }
    Vec12 f = f0;
    bool done = max_abs(f) < 1e-12;
    for (long it = 0; it < kOracleBudget && !done; ++it) {
      const Vec12 dx = lu_solve(lu, f);
      for (std::size_t i = 0; i < 12; ++i) x[i] -= kOracleRelaxation * dx[i];
      f = model.residual(x);
      if (!std::isfinite(max_abs(f))) break;
      done = max_abs(f) < 1e-12;
    }
    if (!done) {
      out.diagnostic = "residual " + std::to_string(max_abs(f)) + " above 1e-12 at step " + std::to_string(step);
      return out;
    }
    for (int a = 0; a < 4; ++a) {
      s.psi[a] = x[static_cast<std::size_t>(a)];
      s.theta[a] = x[static_cast<std::size_t>(4 + a)];
      s.c[a] = x[static_cast<std::size_t>(8 + a)];
      if (!(s.theta[a] > set.theta_eps && s.theta[a] < 1.0)) {
        out.diagnostic = "water content left (theta_eps, 1) at step " + std::to_string(step);
        return out;
      }
    }
    out.trajectory.push_back(s);
  }
  out.converged = true;
  return out;
}

Problem equilibrium_problem(const Domain2D& domain, double theta0, double c0, const ConstitutiveSet& set) {
  const double psi = -capillary_pressure(theta0, c0, set).p;
  Problem pb;
  pb.name = "equilibrium";
  pb.domain = domain;
  SideSelection tb{false, false, true, true};
  pb.psi_dirichlet = dirichlet_on_sides(tb, [psi](const Point&, double) { return psi; });
  pb.c_dirichlet = dirichlet_on_sides(tb, [c0](const Point&, double) { return c0; });
  pb.psi0 = [psi](const Point&) { return psi; };
  pb.theta0 = [theta0](const Point&) { return theta0; };
  pb.c0 = [c0](const Point&) { return c0; };
  return pb;
}

// ---------------------------------------------------------------------------
// suite

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ConstitutiveSet benchmark_set() {
  ConstitutiveSet set;
  set.vg = VanGenuchtenParams::make(1.0, 2.0, 1.0);
  return set;
}

CheckResult check_equilibrium() {
  CheckResult r{"equilibrium is a fixed point of every strategy", true, ""};
  const ConstitutiveSet set = benchmark_set();
  const FeSpace space(GridMesh(Domain2D{}, 4, 6));
  const Problem pb = equilibrium_problem(Domain2D{}, 0.39, 0.5, set);
  for (Strategy s : {Strategy::MonNewton, Strategy::MonLScheme, Strategy::SplitNewton, Strategy::SplitLScheme,
                     Strategy::MonMixed, Strategy::SplitMixed}) {
    SchemeConfig cfg;
    cfg.strategy = s;
    const RunReport rep = run_simulation(space, pb, set, cfg, TimeGrid::make(0.3, 0.1));
    const bool ok = rep.converged && rep.total_iterations() == rep.steps_total;
    if (!ok) {
      r.passed = false;
      r.detail += to_string(s) + " took " + std::to_string(rep.total_iterations()) + " iterations; ";
    }
  }
  if (r.passed) r.detail = "one iteration per step for all six strategies";
  return r;
}

CheckResult check_oracle() {
  CheckResult r{"single-element oracle equivalence (10 steps, 1e-8)", true, ""};
  const ConstitutiveSet set = benchmark_set();
  const SingleElementCase cs;
  SchemeConfig base;
  base.tol = 1e-12;
  base.max_iter = 500;
  const OracleResult oracle = single_element_oracle(cs, set, base);
  if (!oracle.converged) {
    r.passed = false;
    r.detail = "oracle did not converge: " + oracle.diagnostic;
    return r;
  }
  const FeSpace space(GridMesh(Domain2D{0.0, 1.0, 0.0, 1.0}, 1, 1));
  const Problem pb = single_element_problem(cs);
  double worst = 0.0;
  for (Strategy s : {Strategy::MonNewton, Strategy::MonLScheme, Strategy::SplitNewton, Strategy::SplitLScheme}) {
    SchemeConfig cfg = base;
    cfg.strategy = s;
    RunOptions opt;
    double diff = 0.0;
    opt.on_step = [&](int step, const StateTriple& st) {
      const auto& o = oracle.trajectory[static_cast<std::size_t>(step)];
      for (std::size_t a = 0; a < 4; ++a) {
        diff = std::max({diff, std::abs(st.psi[a] - o.psi[a]), std::abs(st.theta[a] - o.theta[a]),
                         std::abs(st.c[a] - o.c[a])});
      }
    };
    const RunReport rep = run_simulation(space, pb, set, cfg, TimeGrid::make(cs.dt * cs.steps, cs.dt), opt);
    if (!rep.converged || diff >= 1e-8) {
      r.passed = false;
      r.detail += to_string(s) + " max deviation " + fmt("%.2e", diff) + "; ";
    }
    worst = std::max(worst, diff);
  }
  if (r.passed) r.detail = "max deviation " + fmt("%.2e", worst);
  return r;
}

CheckResult check_mass_balance() {
  CheckResult r{"water mass conserved without flux boundaries (1e-10 per step)", true, ""};
  const ConstitutiveSet set = benchmark_set();
  const FeSpace space(GridMesh(Domain2D{0.0, 1.0, 0.0, 1.0}, 8, 8));
  Problem pb;
  pb.name = "closed";
  pb.domain = space.mesh().domain();
  pb.psi0 = [](const Point& p) { return -1.0 + 0.3 * p.y; };
  pb.theta0 = [](const Point& p) { return 0.4 + 0.1 * p.x; };
  pb.c0 = [](const Point& p) { return 1.0 + 0.2 * p.x * p.y; };
  SchemeConfig cfg;
  cfg.strategy = Strategy::MonNewton;
  const Vector ones(static_cast<std::size_t>(space.num_nodes()), 1.0);
  double prev_mass = std::nan("");
  double worst = 0.0;
  RunOptions opt;
  opt.on_step = [&](int, const StateTriple& st) {
    const double m = dot(space.mass() * ones, st.theta.values);
    if (std::isfinite(prev_mass)) worst = std::max(worst, std::abs(m - prev_mass));
    prev_mass = m;
  };
  const RunReport rep = run_simulation(space, pb, set, cfg, TimeGrid::make(1.0, 0.1), opt);
  r.passed = rep.converged && worst < 1e-10;
  r.detail = "max change " + fmt("%.2e", worst);
  return r;
}

CheckResult check_order(const char* name, bool spatial, Strategy s, bool quick) {
  CheckResult r{name, true, ""};
  ConstitutiveSet set = benchmark_set();
  SchemeConfig cfg;
  cfg.strategy = s;
  cfg.tol = 1e-10;
  cfg.max_iter = 400;
  cfg.flux_lag = FluxLag::CurrentIterate;
  std::vector<double> steps;
  std::vector<FieldErrors> errs;
  if (spatial) {
    const ManufacturedCase mms = mms_spatial_case();
    const std::vector<double> dxs = quick ? std::vector<double>{1.0 / 5, 1.0 / 10, 1.0 / 20}
                                          : std::vector<double>{1.0 / 10, 1.0 / 20, 1.0 / 40};
    for (double dx : dxs) {
      const auto nx = static_cast<Index>(std::lround(mms.domain.width() / dx));
      const auto ny = static_cast<Index>(std::lround(mms.domain.height() / dx));
      const MmsRun run = run_mms(mms, set, cfg, nx, ny, 0.025, 1.0 / 400);
      if (!run.report.converged) r.passed = false;
      steps.push_back(dx);
      errs.push_back(run.errors);
    }
  } else {
    const ManufacturedCase mms = mms_temporal_case();
    const Index n = quick ? 20 : 40;
    for (double dt : {1.0 / 10, 1.0 / 20, 1.0 / 40}) {
      const MmsRun run = run_mms(mms, set, cfg, n, n, 1.0, dt);
      if (!run.report.converged) r.passed = false;
      steps.push_back(dt);
      errs.push_back(run.errors);
    }
  }
  const double target = spatial ? 2.0 : 1.0;
  const double slack = spatial ? 0.3 : 0.2;
  const char* names[3] = {"psi", "theta", "c"};
  for (int f = 0; f < 3; ++f) {
    std::vector<double> e;
    for (const auto& fe : errs) e.push_back(f == 0 ? fe.psi : f == 1 ? fe.theta : fe.c);
    const OrderEstimate est = convergence_order(steps, e);
    r.detail += std::string(names[f]) + " " + fmt("%.2f", est.order) + (est.monotone ? "" : " (non-monotone)") + "  ";
    if (std::abs(est.order - target) > slack || !est.monotone) r.passed = false;
  }
  r.detail = to_string(s) + ": " + r.detail;
  return r;
}

}  // namespace

std::vector<CheckResult> run_verification_suite(std::ostream& out, bool quick) {
  std::vector<CheckResult> results;
  auto record = [&](CheckResult r) {
    out << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  [" << r.detail << "]" << std::endl;
    results.push_back(std::move(r));
  };
  auto guarded = [&](const char* name, auto&& fn) {
    try {
      record(fn());
    } catch (const std::exception& e) {
      record({name, false, std::string("exception: ") + e.what()});
    }
  };
  guarded("equilibrium", [] { return check_equilibrium(); });
  guarded("oracle", [] { return check_oracle(); });
  guarded("mass balance", [] { return check_mass_balance(); });
  for (Strategy s : {Strategy::MonNewton, Strategy::MonLScheme}) {
    guarded("spatial order", [&] { return check_order("MMS spatial order 2 +- 0.3", true, s, quick); });
    guarded("temporal order", [&] { return check_order("MMS temporal order 1 +- 0.2", false, s, quick); });
  }
  return results;
}

}  // namespace dyncap
