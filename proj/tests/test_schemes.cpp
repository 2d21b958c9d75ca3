#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dyncap/driver.hpp"
#include "dyncap/problem.hpp"
#include "dyncap/schemes.hpp"
#include "dyncap/verification.hpp"

using namespace dyncap;

namespace {

constexpr Strategy kAll[] = {Strategy::MonNewton,   Strategy::MonLScheme, Strategy::SplitNewton,
                             Strategy::SplitLScheme, Strategy::MonMixed,   Strategy::SplitMixed};

StateTriple uniform_state(Index n, double psi, double theta, double c) {
  StateTriple s;
  const auto k = static_cast<std::size_t>(n);
  s.psi.values.assign(k, psi);
  s.theta.values.assign(k, theta);
  s.c.values.assign(k, c);
  return s;
}

double max_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double state_diff(const StateTriple& a, const StateTriple& b) {
  return std::max({max_diff(a.psi.values, b.psi.values), max_diff(a.theta.values, b.theta.values),
                   max_diff(a.c.values, b.c.values)});
}

std::vector<IterationInfo> history(std::initializer_list<double> norms) {
  std::vector<IterationInfo> h;
  for (double v : norms) h.push_back({Linearization::LScheme, {v, v, v}});
  return h;
}

// Small coupled problem: psi and c prescribed on top, closed elsewhere.
Problem column_problem() {
  Problem pb;
  pb.name = "column";
  pb.domain = Domain2D{0, 1, 0, 1};
  SideSelection top{false, false, false, true};
  pb.psi_dirichlet = dirichlet_on_sides(top, [](const Point& p, double) { return -0.4 + 0.1 * p.x; });
  pb.c_dirichlet = dirichlet_on_sides(top, [](const Point&, double) { return 1.0; });
  pb.psi0 = [](const Point& p) { return -0.8 + 0.2 * p.y; };
  pb.theta0 = [](const Point& p) { return 0.4 + 0.05 * p.x; };
  pb.c0 = [](const Point&) { return 0.0; };
  return pb;
}

StateTriple solve_step(const FeSpace& space, const Problem& pb, const ConstitutiveSet& set, Strategy s, double tol,
                       int steps = 3) {
  SchemeConfig cfg;
  cfg.strategy = s;
  cfg.tol = tol;
  cfg.max_iter = 1000;
  const RunReport rep = run_simulation(space, pb, set, cfg, TimeGrid::make(0.1 * steps, 0.1));
  REQUIRE(rep.converged);
  return rep.final_state;
}

}  // namespace

TEST_CASE("mixed controller") {
  SchemeConfig cfg;
  cfg.strategy = Strategy::MonMixed;
  CHECK(mixed_controller({}, cfg) == Linearization::LScheme);
  const auto five_large = history({1.0, 0.5, 0.3, 0.2, 0.1});
  CHECK(mixed_controller(std::span(five_large).first(2), cfg) == Linearization::LScheme);
  CHECK(mixed_controller(five_large, cfg) == Linearization::Newton);
  const auto early = history({0.5, 5e-3});
  CHECK(mixed_controller(early, cfg) == Linearization::Newton);

  cfg.mixed_switch = 0;
  CHECK(mixed_controller({}, cfg) == Linearization::Newton);
}

TEST_CASE("mixed controller fallback") {
  SchemeConfig cfg;
  cfg.strategy = Strategy::MonMixed;
  cfg.mixed_fallback = true;
  std::vector<IterationInfo> h = history({1.0, 5e-3});
  h.push_back({Linearization::Newton, {1.0, 1.0, 1.0}});
  CHECK(mixed_controller(h, cfg) == Linearization::LScheme);
  cfg.mixed_fallback = false;
  CHECK(mixed_controller(h, cfg) == Linearization::Newton);
}

TEST_CASE("convergence check is a conjunction of strict bounds") {
  const FeSpace space(GridMesh(Domain2D{0, 1, 0, 1}, 2, 2));
  const Index n = space.num_nodes();
  const StateTriple a = uniform_state(n, 0.0, 0.5, 0.0);

  auto r = convergence_check(a, a, space.mass(), 1e-6);
  CHECK(r.converged);
  CHECK(r.norms.psi == 0.0);
  CHECK(r.norms.theta == 0.0);
  CHECK(r.norms.c == 0.0);

  // constant increments on the unit square have L2 norm equal to the constant
  r = convergence_check(a, uniform_state(n, 1e-7, 0.5 + 1e-7, 1e-5), space.mass(), 1e-6);
  CHECK_FALSE(r.converged);
  CHECK(r.norms.c == doctest::Approx(1e-5));

  r = convergence_check(a, uniform_state(n, 9e-7, 0.5 + 9e-7, 9e-7), space.mass(), 1e-6);
  CHECK(r.converged);
  CHECK(r.norms.psi == doctest::Approx(9e-7));

  r = convergence_check(a, uniform_state(n, 1e-6, 0.5, 0.0), space.mass(), 1e-6);
  CHECK_FALSE(r.converged);

  r = convergence_check(a, uniform_state(n, 2e-7, 0.5, 0.0), space.mass(), 1e-6, NormKind::Euclidean);
  CHECK(r.norms.psi == doctest::Approx(2e-7 * 3.0));
}

TEST_CASE("equilibrium is a fixed point of every strategy") {
  ConstitutiveSet set;
  const FeSpace space(GridMesh(Domain2D{0, 1, 0, 1}, 4, 4));
  const Problem pb = equilibrium_problem(space.mesh().domain(), 0.6, 0.5, set);
  for (Strategy s : kAll) {
    SchemeConfig cfg;
    cfg.strategy = s;
    const RunReport rep = run_simulation(space, pb, set, cfg, TimeGrid::make(0.5, 0.1));
    CAPTURE(to_string(s));
    CHECK(rep.converged);
    CHECK(rep.total_iterations() == 5);
    for (const auto& rec : rep.records) CHECK(rec.final_norms.max() < 1e-12);
  }
}

TEST_CASE("saturated hydrostatic cell stays put") {
  ConstitutiveSet set;
  const FeSpace space(GridMesh(Domain2D{0, 1, 0, 1}, 1, 1));
  Problem pb;
  pb.domain = space.mesh().domain();
  SideSelection tb{false, false, true, true};
  pb.psi_dirichlet = dirichlet_on_sides(tb, [](const Point& p, double) { return 1.0 - p.y; });
  pb.c_dirichlet = dirichlet_on_sides(tb, [](const Point&, double) { return 0.0; });
  pb.psi0 = [](const Point& p) { return 1.0 - p.y; };
  pb.theta0 = [](const Point&) { return 1.0; };
  pb.c0 = [](const Point&) { return 0.0; };
  SchemeConfig cfg;
  cfg.strategy = Strategy::MonNewton;
  const RunReport rep = run_simulation(space, pb, set, cfg, TimeGrid::make(0.1, 0.1));
  REQUIRE(rep.converged);
  CHECK(rep.records[0].iterations <= 2);
  CHECK(rep.records[0].final_norms.max() < 1e-12);
  for (double th : rep.final_state.theta.values) CHECK(th == 1.0);
}

TEST_CASE("converged states are fixed points of one more iteration") {
  ConstitutiveSet set;
  const FeSpace space(GridMesh(Domain2D{0, 1, 0, 1}, 3, 3));
  const Problem pb = column_problem();
  const StateTriple prev = StateTriple::initial(space, pb);
  for (Strategy s : {Strategy::MonNewton, Strategy::MonLScheme, Strategy::SplitNewton, Strategy::SplitLScheme}) {
    SchemeConfig cfg;
    cfg.strategy = s;
    cfg.tol = 1e-13;
    cfg.max_iter = 2000;
    SchemeWorkspace ws;
    auto [state, rec] = advance_time_step(space, pb, set, cfg, ws, prev, 0.1, 0.1);
    CAPTURE(to_string(s));
    REQUIRE(rec.converged);
    StepContext ctx(space, pb, set, cfg, ws, prev, 0.1, 0.1);
    ctx.initialize_active_set(state);
    StateTriple next;
    if (s == Strategy::MonNewton) next = newton_iteration_monolithic(ctx, state);
    if (s == Strategy::MonLScheme) next = lscheme_iteration_monolithic(ctx, state);
    if (s == Strategy::SplitNewton) next = splitting_iteration(ctx, state, Linearization::Newton);
    if (s == Strategy::SplitLScheme) next = splitting_iteration(ctx, state, Linearization::LScheme);
    CHECK(state_diff(state, next) < 1e-11);
    CHECK(discrete_residual(ctx, state).max() < 1e-10);
  }
}

TEST_CASE("all linearisations reach the same discrete solution") {
  ConstitutiveSet set;
  const FeSpace space(GridMesh(Domain2D{0, 1, 0, 1}, 4, 4));
  const Problem pb = column_problem();
  const StateTriple ref = solve_step(space, pb, set, Strategy::MonNewton, 1e-12);
  for (Strategy s : kAll) {
    CAPTURE(to_string(s));
    CHECK(state_diff(ref, solve_step(space, pb, set, s, 1e-12)) < 1e-8);
  }
}

TEST_CASE("splitting equals monolithic without capillary feedback of c") {
  ConstitutiveSet set;
  set.gamma = 0.0;
  const FeSpace space(GridMesh(Domain2D{0, 1, 0, 1}, 4, 4));
  const Problem pb = column_problem();
  const StateTriple mono = solve_step(space, pb, set, Strategy::MonNewton, 1e-12);
  CHECK(state_diff(mono, solve_step(space, pb, set, Strategy::SplitNewton, 1e-12)) < 1e-8);
  CHECK(state_diff(mono, solve_step(space, pb, set, Strategy::SplitLScheme, 1e-12)) < 1e-8);
}

TEST_CASE("nested splitting reaches the merged limit") {
  ConstitutiveSet set;
  const FeSpace space(GridMesh(Domain2D{0, 1, 0, 1}, 3, 3));
  const Problem pb = column_problem();
  SchemeConfig cfg;
  cfg.strategy = Strategy::SplitLScheme;
  cfg.tol = 1e-12;
  cfg.max_iter = 1000;
  const auto grid = TimeGrid::make(0.2, 0.1);
  const RunReport merged = run_simulation(space, pb, set, cfg, grid);
  cfg.splitting_mode = SplittingMode::Nested;
  const RunReport nested = run_simulation(space, pb, set, cfg, grid);
  REQUIRE(merged.converged);
  REQUIRE(nested.converged);
  CHECK(state_diff(merged.final_state, nested.final_state) < 1e-8);
}

TEST_CASE("the L-scheme needs more iterations than Newton on a smooth step") {
  ConstitutiveSet set;
  const FeSpace space(GridMesh(Domain2D{0, 1, 0, 1}, 4, 4));
  const Problem pb = column_problem();
  SchemeConfig cfg;
  cfg.strategy = Strategy::MonNewton;
  const auto grid = TimeGrid::make(0.3, 0.1);
  const long newton = run_simulation(space, pb, set, cfg, grid).total_iterations();
  cfg.strategy = Strategy::MonLScheme;
  const long lscheme = run_simulation(space, pb, set, cfg, grid).total_iterations();
  CHECK(lscheme > newton);
}

TEST_CASE("scheme config validation") {
  SchemeConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.tol = -1.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.max_iter = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.L3 = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg.strategy = Strategy::MonNewton;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("strategy names") {
  CHECK(to_string(Strategy::MonNewton) == "MON-Newton");
  CHECK(to_string(Strategy::MonLScheme) == "MON-LS");
  CHECK(to_string(Strategy::SplitNewton) == "NonLinS-Newton");
  CHECK(to_string(Strategy::SplitLScheme) == "NonLinS-LS");
  CHECK(to_string(Strategy::MonMixed) == "MON-Mixed");
  CHECK(to_string(Strategy::SplitMixed) == "NonLinS-Mixed");
  CHECK(is_monolithic(Strategy::MonMixed));
  CHECK_FALSE(is_monolithic(Strategy::SplitLScheme));
  CHECK(is_mixed(Strategy::SplitMixed));
}
