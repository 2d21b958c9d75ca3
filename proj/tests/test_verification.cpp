#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dyncap/driver.hpp"
#include "dyncap/verification.hpp"

using namespace dyncap;

namespace {

ManufacturedCase polynomial_case() {
  ManufacturedCase m;
  m.name = "polynomial";
  m.domain = Domain2D{0, 1, 0, 1};
  m.psi = [](const Point& p, double t) { return -1.0 - 0.2 * p.x * p.x - 0.1 * p.y + 0.05 * t; };
  m.theta = [](const Point& p, double t) { return 0.5 + 0.1 * p.x * p.y + 0.05 * t; };
  m.c = [](const Point& p, double t) { return 1.0 + 0.2 * p.x - 0.1 * p.y * p.y + 0.1 * t; };
  return m;
}

// Slow reference: every derivative is a plain central difference with step h,
// nested for the divergence terms.
MmsSources nested_fd_sources(const ManufacturedCase& m, const ConstitutiveSet& set, double sigma, Point p,
                             double t) {
  const double h = 1e-4;
  auto dx = [h](const std::function<double(double, double)>& f, double x, double y) {
    return (f(x + h, y) - f(x - h, y)) / (2 * h);
  };
  auto dy = [h](const std::function<double(double, double)>& f, double x, double y) {
    return (f(x, y + h) - f(x, y - h)) / (2 * h);
  };
  auto psi = [&](double x, double y) { return m.psi({x, y}, t); };
  auto cc = [&](double x, double y) { return m.c({x, y}, t); };
  auto k = [&](double x, double y) { return conductivity(m.theta({x, y}, t), m.psi({x, y}, t), set.vg); };
  auto qx = [&](double x, double y) { return k(x, y) * dx(psi, x, y); };
  auto qy = [&](double x, double y) { return k(x, y) * (dy(psi, x, y) + 1.0); };
  // D grad c + sigma u c, u = -q
  const auto& D = set.diffusion;
  auto jx = [&](double x, double y) {
    return D.xx * dx(cc, x, y) + D.xy * dy(cc, x, y) - sigma * qx(x, y) * cc(x, y);
  };
  auto jy = [&](double x, double y) {
    return D.yx * dx(cc, x, y) + D.yy * dy(cc, x, y) - sigma * qy(x, y) * cc(x, y);
  };
  const double th_t = (m.theta(p, t + h) - m.theta(p, t - h)) / (2 * h);
  const double mass_t =
      (m.theta(p, t + h) * m.c(p, t + h) - m.theta(p, t - h) * m.c(p, t - h)) / (2 * h);
  const double th = m.theta(p, t);
  const double c = m.c(p, t);
  MmsSources s;
  s.s1 = th_t - dx(qx, p.x, p.y) - dy(qy, p.x, p.y);
  s.spsi = m.psi(p, t) + capillary_pressure(th, c, set).p - tau(th, set).tau * th_t;
  s.s2 = mass_t - dx(jx, p.x, p.y) - dy(jy, p.x, p.y) + reaction(c, set).r;
  return s;
}

ConstitutiveSet benchmark() {
  ConstitutiveSet set;
  set.vg = VanGenuchtenParams::make(1.0, 2.0, 1.0);
  return set;
}

}  // namespace

TEST_CASE("sources vanish at equilibrium") {
  const ConstitutiveSet set = benchmark();
  ManufacturedCase m;
  m.name = "equilibrium";
  m.domain = Domain2D{0, 1, 0, 1};
  const double psi = -capillary_pressure(0.45, 0.7, set).p;
  m.psi = [psi](const Point&, double) { return psi; };
  m.theta = [](const Point&, double) { return 0.45; };
  m.c = [](const Point&, double) { return 0.7; };
  for (ConvectionForm form : {ConvectionForm::Literal, ConvectionForm::Physical}) {
    const MmsSources s = mms_sources(m, set, form, {0.3, 0.6}, 0.4);
    CHECK(std::abs(s.s1) < 1e-10);
    CHECK(std::abs(s.spsi) < 1e-12);
    CHECK(std::abs(s.s2) < 1e-10);
  }
}

TEST_CASE("uniform water content ramp") {
  const ConstitutiveSet set = benchmark();
  const ManufacturedCase m = mms_uniform_case(0.4, 0.05, set);
  const MmsSources s = mms_sources(m, set, ConvectionForm::Literal, {0.5, 0.5}, 0.3);
  CHECK(s.s1 == doctest::Approx(0.05).epsilon(1e-10));
}

TEST_CASE("sources agree with a nested finite-difference oracle") {
  ConstitutiveSet set = benchmark();
  set.reaction_model = ReactionModel::Linear;
  set.reaction_rate = 0.3;
  set.diffusion = Diffusion{1.0, 0.2, 0.1, 0.5};
  const ManufacturedCase m = polynomial_case();
  for (ConvectionForm form : {ConvectionForm::Literal, ConvectionForm::Physical}) {
    const double sigma = form == ConvectionForm::Literal ? 1.0 : -1.0;
    for (Point p : {Point{0.2, 0.3}, Point{0.7, 0.9}, Point{0.5, 0.1}}) {
      const MmsSources a = mms_sources(m, set, form, p, 0.4);
      const MmsSources b = nested_fd_sources(m, set, sigma, p, 0.4);
      CHECK(std::abs(a.s1 - b.s1) < 1e-6);
      CHECK(std::abs(a.spsi - b.spsi) < 1e-6);
      CHECK(std::abs(a.s2 - b.s2) < 1e-6);
    }
  }
}

TEST_CASE("non-finite sources are rejected") {
  const ConstitutiveSet set = benchmark();
  ManufacturedCase m = polynomial_case();
  m.theta = [](const Point&, double) { return 1.5; };
  CHECK_THROWS(mms_sources(m, set, ConvectionForm::Literal, {0.5, 0.5}, 0.1));
}

TEST_CASE("convergence order estimates") {
  auto o = convergence_order({0.1, 0.05, 0.025}, {1e-2, 2.5e-3, 6.25e-4});
  CHECK(o.order == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(o.monotone);
  o = convergence_order({0.1, 0.05, 0.025}, {1e-2, 5e-3, 2.5e-3});
  CHECK(o.order == doctest::Approx(1.0).epsilon(1e-12));
  o = convergence_order({0.1, 0.05, 0.025}, {1e-2, 2e-2, 2.5e-3});
  CHECK_FALSE(o.monotone);
  CHECK_THROWS(convergence_order({0.1, 0.05}, {1e-2}));
}

TEST_CASE("oracle trajectory starts from the initial data and honours the top nodes") {
  const ConstitutiveSet set = benchmark();
  const SingleElementCase cs;
  const OracleResult r = single_element_oracle(cs, set, SchemeConfig{});
  REQUIRE(r.converged);
  REQUIRE(r.trajectory.size() == 11);
  for (int a = 0; a < 4; ++a) {
    CHECK(r.trajectory[0].theta[a] == cs.theta0);
    CHECK(r.trajectory[0].c[a] == cs.c0);
  }
  for (std::size_t n = 1; n < r.trajectory.size(); ++n) {
    for (int a : {2, 3}) {
      CHECK(r.trajectory[n].psi[a] == doctest::Approx(cs.psi_top).epsilon(1e-10));
      CHECK(r.trajectory[n].c[a] == doctest::Approx(cs.c_top).epsilon(1e-10));
    }
  }
}

TEST_CASE("strategies match the single-element oracle") {
  const ConstitutiveSet set = benchmark();
  const SingleElementCase cs;
  SchemeConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iter = 500;
  const OracleResult oracle = single_element_oracle(cs, set, cfg);
  REQUIRE(oracle.converged);
  const FeSpace space(GridMesh(Domain2D{0, 1, 0, 1}, 1, 1));
  const Problem pb = single_element_problem(cs);
  for (Strategy s : {Strategy::MonNewton, Strategy::MonLScheme, Strategy::SplitNewton, Strategy::SplitLScheme}) {
    cfg.strategy = s;
    double worst = 0.0;
    RunOptions opt;
    opt.on_step = [&](int step, const StateTriple& st) {
      const auto& o = oracle.trajectory[static_cast<std::size_t>(step)];
      for (std::size_t a = 0; a < 4; ++a) {
        worst = std::max({worst, std::abs(st.psi[a] - o.psi[a]), std::abs(st.theta[a] - o.theta[a]),
                          std::abs(st.c[a] - o.c[a])});
      }
    };
    const RunReport rep = run_simulation(space, pb, set, cfg, TimeGrid::make(cs.dt * cs.steps, cs.dt), opt);
    CAPTURE(to_string(s));
    CHECK(rep.converged);
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("current-iterate water flux matches the oracle") {
  const ConstitutiveSet set = benchmark();
  const SingleElementCase cs;
  SchemeConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iter = 500;
  cfg.flux_lag = FluxLag::CurrentIterate;
  const OracleResult oracle = single_element_oracle(cs, set, cfg);
  REQUIRE(oracle.converged);
  const FeSpace space(GridMesh(Domain2D{0, 1, 0, 1}, 1, 1));
  const Problem pb = single_element_problem(cs);
  for (Strategy s : {Strategy::MonNewton, Strategy::MonLScheme, Strategy::SplitNewton, Strategy::SplitLScheme}) {
    cfg.strategy = s;
    double worst = 0.0;
    RunOptions opt;
    opt.on_step = [&](int step, const StateTriple& st) {
      const auto& o = oracle.trajectory[static_cast<std::size_t>(step)];
      for (std::size_t a = 0; a < 4; ++a) worst = std::max(worst, std::abs(st.c[a] - o.c[a]));
    };
    const RunReport rep = run_simulation(space, pb, set, cfg, TimeGrid::make(cs.dt * cs.steps, cs.dt), opt);
    CAPTURE(to_string(s));
    CHECK(rep.converged);
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("dynamic capillarity damps the first water content response") {
  ConstitutiveSet dynamic = benchmark();
  ConstitutiveSet equilibrium = benchmark();
  equilibrium.tau0 = 0.0;
  SingleElementCase cs;
  cs.steps = 1;
  const OracleResult a = single_element_oracle(cs, dynamic, SchemeConfig{});
  const OracleResult b = single_element_oracle(cs, equilibrium, SchemeConfig{});
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  for (int n = 0; n < 4; ++n) {
    const double da = std::abs(a.trajectory[1].theta[n] - a.trajectory[0].theta[n]);
    const double db = std::abs(b.trajectory[1].theta[n] - b.trajectory[0].theta[n]);
    CHECK(da < db);
  }
}

TEST_CASE("quick verification suite passes") {
  std::ostringstream out;
  const auto checks = run_verification_suite(out, true);
  CHECK(checks.size() >= 5);
  for (const auto& c : checks) {
    CAPTURE(c.name);
    CAPTURE(c.detail);
    CHECK(c.passed);
  }
}
