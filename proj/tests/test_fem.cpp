#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dyncap/error.hpp"
#include "dyncap/fem.hpp"
#include "dyncap/problem.hpp"

using namespace dyncap;

namespace {

FeSpace unit_cell(ElementKind kind = ElementKind::Q1) { return FeSpace(GridMesh(Domain2D{0, 1, 0, 1}, 1, 1), kind); }

// Corner coordinates of the unit cell in node order.
const double kX[4] = {0, 1, 0, 1};
const double kY[4] = {0, 0, 1, 1};

int corner_type(int a, int b) {
  if (a == b) return 0;
  const int diff = (kX[a] != kX[b]) + (kY[a] != kY[b]);
  return diff;  // 1 edge neighbour, 2 diagonal
}

double max_abs_diff(const CsrMatrix& a, const CsrMatrix& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

}  // namespace

TEST_CASE("Q1 mass stencil on the unit square") {
  const FeSpace space = unit_cell();
  const CsrMatrix m = assemble_weighted_mass(space, 1.0);
  const double expected[3] = {1.0 / 9, 1.0 / 18, 1.0 / 36};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) CHECK(m(a, b) == doctest::Approx(expected[corner_type(a, b)]).epsilon(1e-14));
  }
  CHECK(max_abs_diff(m, space.mass()) < 1e-15);
}

TEST_CASE("Q1 stiffness stencil on the unit square") {
  const FeSpace space = unit_cell();
  const CsrMatrix k = assemble_weighted_stiffness(space, 1.0);
  const double expected[3] = {2.0 / 3, -1.0 / 6, -1.0 / 3};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) CHECK(k(a, b) == doctest::Approx(expected[corner_type(a, b)]).epsilon(1e-14));
  }
}

TEST_CASE("P1 mass on a split unit square") {
  const FeSpace space = unit_cell(ElementKind::P1Split);
  const CsrMatrix m = assemble_weighted_mass(space, 1.0);
  // nodes 0 and 3 lie on the splitting diagonal
  CHECK(m(0, 0) == doctest::Approx(1.0 / 6));
  CHECK(m(3, 3) == doctest::Approx(1.0 / 6));
  CHECK(m(1, 1) == doctest::Approx(1.0 / 12));
  CHECK(m(0, 3) == doctest::Approx(1.0 / 12));
  CHECK(m(0, 1) == doctest::Approx(1.0 / 24));
  CHECK(m(1, 2) == doctest::Approx(0.0));
  double total = 0.0;
  for (double v : m.values()) total += v;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("weights scale linearly") {
  const FeSpace space(GridMesh(Domain2D{}, 4, 6));
  const CsrMatrix m1 = assemble_weighted_mass(space, 1.0);
  CsrMatrix m2 = assemble_weighted_mass(space, 2.0);
  const CsrMatrix m0 = assemble_weighted_mass(space, 0.0);
  CHECK(m0.frobenius_norm() == 0.0);
  m2.axpy(-2.0, m1);
  CHECK(m2.frobenius_norm() == 0.0);
  CHECK(assemble_weighted_stiffness(space, 0.0).frobenius_norm() == 0.0);

  DofField w{FieldKind::Auxiliary, Vector(static_cast<std::size_t>(space.num_nodes()), 2.0)};
  CsrMatrix mw = assemble_weighted_mass(space, w);
  mw.axpy(-2.0, m1);
  CHECK(mw.frobenius_norm() < 1e-15);
}

TEST_CASE("mass matrix integrates to the domain area") {
  for (ElementKind kind : {ElementKind::Q1, ElementKind::P1Split}) {
    const FeSpace space(GridMesh(Domain2D{}, 5, 7), kind);
    double total = 0.0;
    for (double v : space.mass().values()) total += v;
    CHECK(total == doctest::Approx(6.0).epsilon(1e-13));
    CHECK(space.mass().symmetry_defect() < 1e-15);
  }
}

TEST_CASE("stiffness rows sum to zero for any coefficient") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(0.01, 5.0);
  for (ElementKind kind : {ElementKind::Q1, ElementKind::P1Split}) {
    const FeSpace space(GridMesh(Domain2D{}, 6, 9), kind);
    QpField k(static_cast<std::size_t>(space.num_qp()));
    for (double& v : k) v = dist(rng);
    const CsrMatrix a = assemble_weighted_stiffness_qp(space, k);
    const Vector ones(static_cast<std::size_t>(space.num_nodes()), 1.0);
    const Vector r = a * ones;
    double worst = 0.0;
    for (double v : r) worst = std::max(worst, std::abs(v));
    CHECK(worst < 1e-12);
    CHECK(a.symmetry_defect() < 1e-14);
  }
}

TEST_CASE("negative coefficients are rejected") {
  const FeSpace space = unit_cell();
  QpField k(static_cast<std::size_t>(space.num_qp()), 1.0);
  k[1] = -0.5;
  CHECK_THROWS_AS(assemble_weighted_stiffness_qp(space, k), AssemblyError);
}

TEST_CASE("convection stencil on the unit square") {
  const FeSpace space = unit_cell();
  QpVectorField w(static_cast<std::size_t>(space.num_qp()), Vec2{1.0, 0.0});
  const CsrMatrix c = assemble_convection(space, w);
  // integral of phi_j d/dx phi_i factorises: (+-1/2) * (1/3 or 1/6)
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double sx = kX[i] == 1 ? 0.5 : -0.5;
      const double yy = kY[i] == kY[j] ? 1.0 / 3 : 1.0 / 6;
      CHECK(c(i, j) == doctest::Approx(sx * yy).epsilon(1e-14));
    }
  }
  QpVectorField zero(static_cast<std::size_t>(space.num_qp()), Vec2{0.0, 0.0});
  CHECK(assemble_convection(space, zero).frobenius_norm() == 0.0);
}

TEST_CASE("convection applied to constants gives the gradient load") {
  const FeSpace space(GridMesh(Domain2D{}, 4, 6));
  QpVectorField w(static_cast<std::size_t>(space.num_qp()));
  for (Index e = 0; e < space.num_cells(); ++e) {
    for (int q = 0; q < space.points_per_cell(); ++q) {
      const Point& p = space.qp_point(e, q);
      w[static_cast<std::size_t>(e * space.points_per_cell() + q)] = {p.y, -p.x * p.x};
    }
  }
  const Vector ones(static_cast<std::size_t>(space.num_nodes()), 1.0);
  const Vector a = assemble_convection(space, w) * ones;
  const Vector b = assemble_gradient_load_qp(space, w);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));
}

TEST_CASE("gravity load") {
  const FeSpace space(GridMesh(Domain2D{}, 4, 6));
  const auto n = static_cast<std::size_t>(space.num_nodes());
  const Vector b = assemble_gravity_load(space, DofField{FieldKind::Auxiliary, Vector(n, 1.0)});
  double sum = 0.0;
  double against_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += b[i];
    against_y += b[i] * space.mesh().node(static_cast<Index>(i)).y;
  }
  CHECK(std::abs(sum) < 1e-13);
  CHECK(against_y == doctest::Approx(6.0));
  const Vector z = assemble_gravity_load(space, DofField{FieldKind::Auxiliary, Vector(n, 0.0)});
  for (double v : z) CHECK(v == 0.0);
}

TEST_CASE("interpolation and gradients are exact for bilinear functions") {
  const FeSpace space(GridMesh(Domain2D{}, 3, 5));
  auto f = [](const Point& p) { return 1.0 + 2.0 * p.x - 0.5 * p.y + 0.25 * p.x * p.y; };
  const Vector nodal = interpolate_nodal(space, f);
  const QpField v = interpolate(space, nodal);
  const QpVectorField g = gradient(space, nodal);
  for (Index e = 0; e < space.num_cells(); ++e) {
    for (int q = 0; q < space.points_per_cell(); ++q) {
      const Point& p = space.qp_point(e, q);
      const auto k = static_cast<std::size_t>(e * space.points_per_cell() + q);
      CHECK(v[k] == doctest::Approx(f(p)).epsilon(1e-13));
      CHECK(g[k][0] == doctest::Approx(2.0 + 0.25 * p.y).epsilon(1e-13));
      CHECK(g[k][1] == doctest::Approx(-0.5 + 0.25 * p.x).epsilon(1e-13));
    }
  }
}

TEST_CASE("water flux") {
  const FeSpace space(GridMesh(Domain2D{}, 4, 6));
  ConstitutiveSet set;
  const auto n = static_cast<std::size_t>(space.num_nodes());
  auto field = [&](FieldKind kind, const std::function<double(const Point&)>& f) {
    return DofField{kind, interpolate_nodal(space, f)};
  };
  const DofField sat = field(FieldKind::WaterContent, [](const Point&) { return 1.0; });

  auto u = compute_water_flux(space, field(FieldKind::PressureHead, [](const Point&) { return 0.3; }), sat, set);
  for (const auto& v : u) {
    CHECK(v[0] == doctest::Approx(0.0));
    CHECK(v[1] == doctest::Approx(-1.0));
  }

  u = compute_water_flux(space, field(FieldKind::PressureHead, [](const Point& p) { return -p.y; }), sat, set);
  for (const auto& v : u) {
    CHECK(std::abs(v[0]) < 1e-14);
    CHECK(std::abs(v[1]) < 1e-14);
  }

  const DofField dry{FieldKind::WaterContent, Vector(n, 0.39)};
  u = compute_water_flux(space, field(FieldKind::PressureHead, [](const Point& p) { return p.x - 10.0; }), dry, set);
  const double k = std::sqrt(0.39) * (1.0 - std::sqrt(1.0 - 0.39 * 0.39));
  for (const auto& v : u) {
    CHECK(v[0] == doctest::Approx(-k).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(-k).epsilon(1e-12));
  }
}

TEST_CASE("flux clamps water content before evaluating K") {
  const FeSpace space = unit_cell();
  ConstitutiveSet set;
  const DofField psi{FieldKind::PressureHead, Vector(4, -1.0)};
  const DofField wet{FieldKind::WaterContent, Vector(4, 1.3)};
  long events = 0;
  const auto u = compute_water_flux(space, psi, wet, set, &events);
  CHECK(events == space.num_qp());
  CHECK(u[0][1] == doctest::Approx(-1.0));
}

TEST_CASE("recharge Dirichlet data") {
  CHECK(recharge_psi_boundary({0.5, 3.0}, BoundaryTag::D1, 0.5) == doctest::Approx(-0.9));
  CHECK(recharge_psi_boundary({0.5, 3.0}, BoundaryTag::D1, 2.0) == doctest::Approx(0.2));
  CHECK(recharge_psi_boundary({2.0, 0.25}, BoundaryTag::D2, 1.7) == doctest::Approx(0.75));
  CHECK(recharge_c_boundary({2.0, 0.25}, BoundaryTag::D2, 0.0) == doctest::Approx(2.75));
  CHECK(recharge_c_boundary({0.5, 3.0}, BoundaryTag::D1, 0.5) == 1.0);
  CHECK(recharge_c_boundary({0.5, 3.0}, BoundaryTag::D1, 1.5) == 0.0);
  CHECK(recharge_c_boundary({0.0, 1.0}, BoundaryTag::Neumann, 1.5) == doctest::Approx(2.0));

  const Problem pb = recharge_problem();
  const GridMesh mesh(Domain2D{}, 20, 30);
  const DirichletValues psi = pb.psi_dirichlet(mesh, 0.5);
  const DirichletValues c = pb.c_dirichlet(mesh, 0.5);
  CHECK(psi.nodes.size() == 22);
  CHECK(c.nodes.size() == static_cast<std::size_t>(2 * 21 + 2 * 29));
  for (std::size_t k = 0; k < psi.nodes.size(); ++k) {
    const Point& p = mesh.node(psi.nodes[k]);
    if (p.y == 3.0) CHECK(psi.values[k] == doctest::Approx(-0.9));
  }
}

TEST_CASE("apply_dirichlet replaces rows") {
  const FeSpace space(GridMesh(Domain2D{0, 1, 0, 1}, 2, 2));
  BlockMatrix a(1, space.num_nodes());
  a.set(0, 0, space.stiffness());
  SparseSystem sys{a, Vector(static_cast<std::size_t>(space.num_nodes()), 1.0)};
  DirichletValues bc{{0, 4}, {3.0, -2.0}};
  apply_dirichlet(sys, 0, bc);
  const auto& k = sys.matrix.block(0, 0);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(0, 1) == 0.0);
  CHECK(k(4, 4) == 1.0);
  CHECK(k(4, 1) == 0.0);
  CHECK(sys.rhs[0] == 3.0);
  CHECK(sys.rhs[4] == -2.0);
  CHECK(sys.rhs[1] == 1.0);
  CHECK(k(1, 0) != 0.0);  // columns are left alone
}
