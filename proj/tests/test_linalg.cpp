#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dyncap/error.hpp"
#include "dyncap/fem.hpp"
#include "dyncap/linalg.hpp"

using namespace dyncap;

namespace {

std::shared_ptr<const SparsityPattern> dense_pattern(Index n) {
  std::vector<std::pair<Index, Index>> all;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) all.emplace_back(i, j);
  }
  return SparsityPattern::from_entries(n, all);
}

// Plain Gaussian elimination with partial pivoting.
Vector dense_oracle(std::vector<Vector> a, Vector b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
    }
    std::swap(a[k], a[p]);
    std::swap(b[k], b[p]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

SparseSystem single_block(const CsrMatrix& m, Vector b) {
  BlockMatrix a(1, m.size());
  a.set(0, 0, m);
  return {std::move(a), std::move(b)};
}

double contract_residual(const BlockMatrix& a, const Vector& x, const Vector& b) {
  Vector ax(b.size());
  a.multiply(x, ax);
  double r = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) r += (ax[i] - b[i]) * (ax[i] - b[i]);
  return std::sqrt(r) / (a.frobenius_norm() * norm2(x) + norm2(b));
}

}  // namespace

TEST_CASE("identity and diagonal systems") {
  const auto pat = SparsityPattern::from_entries(3, {});
  CsrMatrix id(pat);
  for (Index i = 0; i < 3; ++i) id.add(i, i, 1.0);
  const Vector b{1.5, -2.0, 7.0};
  const Vector x = solve_sparse(single_block(id, b));
  for (std::size_t i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(b[i]));

  CsrMatrix d(SparsityPattern::from_entries(2, {}));
  d.add(0, 0, 2.0);
  d.add(1, 1, 4.0);
  const Vector y = solve_sparse(single_block(d, {2.0, 8.0}));
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(2.0));
}

TEST_CASE("random sparse SPD system matches dense elimination") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Index n = 5;
  // B sparse, A = B^T B + I
  std::vector<Vector> bm(5, Vector(5, 0.0));
  for (auto& row : bm) {
    for (double& v : row) v = (u(rng) > 0.3) ? u(rng) : 0.0;
  }
  std::vector<Vector> a(5, Vector(5, 0.0));
  std::vector<std::pair<Index, Index>> entries;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      for (std::size_t k = 0; k < 5; ++k) a[i][j] += bm[k][i] * bm[k][j];
      if (i == j) a[i][j] += 1.0;
      if (a[i][j] != 0.0) entries.emplace_back(static_cast<Index>(i), static_cast<Index>(j));
    }
  }
  CsrMatrix m(SparsityPattern::from_entries(n, entries));
  for (auto [i, j] : entries) m.add(i, j, a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  Vector b(5);
  for (double& v : b) v = u(rng);
  const Vector x = solve_sparse(single_block(m, b));
  const Vector ref = dense_oracle(a, b);
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(x[i] - ref[i]) < 1e-10);
}

TEST_CASE("residual contract on finite element systems") {
  const FeSpace space(GridMesh(Domain2D{}, 10, 15));
  CsrMatrix a = space.stiffness();
  a.axpy(10.0, space.mass());
  Vector b(static_cast<std::size_t>(space.num_nodes()));
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::sin(0.1 * static_cast<double>(i));
  const SparseSystem sys = single_block(a, b);
  const Vector x = solve_sparse(sys);
  CHECK(contract_residual(sys.matrix, x, b) <= kResidualContract);
}

TEST_CASE("block triangular path equals the coupled solve") {
  const FeSpace space(GridMesh(Domain2D{}, 6, 9));
  const Index n = space.num_nodes();
  BlockMatrix a(3, n);
  CsrMatrix k = space.stiffness();
  k.axpy(5.0, space.mass());
  CsrMatrix m = space.mass();
  CsrMatrix neg = space.mass();
  neg.scale(-0.5);
  a.set(0, 0, k);
  a.set(0, 1, m);
  a.set(1, 0, neg);
  a.set(1, 1, m);
  a.set(0, 2, m);
  a.set(1, 2, neg);
  a.set(2, 2, k);
  Vector b(static_cast<std::size_t>(3 * n));
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::cos(0.37 * static_cast<double>(i));
  const SparseSystem sys{a, b};
  BlockSolver solver;
  const Vector x = solver.solve(sys);
  const Vector ref = solve_sparse(sys);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(x[i] - ref[i]) < 1e-10);
  CHECK(contract_residual(a, x, b) <= kResidualContract);
  CHECK(solver.factorizations() == 2);
  solver.solve(sys);
  CHECK(solver.factorizations() == 4);
}

TEST_CASE("singular systems raise SolverError") {
  CsrMatrix z(SparsityPattern::from_entries(3, {}));
  z.add(0, 0, 1.0);
  z.add(2, 2, 1.0);
  bool thrown = false;
  try {
    solve_sparse(single_block(z, {1.0, 1.0, 1.0}));
  } catch (const SolverError& e) {
    thrown = true;
    REQUIRE(e.pivot().has_value());
    CHECK(*e.pivot() == 1);
  }
  CHECK(thrown);
}

TEST_CASE("csr pattern and arithmetic") {
  const auto pat = dense_pattern(3);
  CsrMatrix a(pat);
  a.add(0, 1, 2.0);
  a.add(0, 1, 1.0);
  CHECK(a(0, 1) == 3.0);
  CHECK(a(1, 0) == 0.0);
  CHECK(a.symmetry_defect() == doctest::Approx(1.0));
  a.zero_row(0);
  CHECK(a(0, 1) == 0.0);

  const std::vector<std::pair<Index, Index>> entries = {{0, 2}};
  CsrMatrix sparse(SparsityPattern::from_entries(3, entries));
  CHECK_THROWS_AS(sparse.add(1, 2, 1.0), AssemblyError);
  CHECK(sparse(1, 2) == 0.0);
  CsrMatrix other(dense_pattern(3));
  CHECK_THROWS_AS(sparse.axpy(1.0, other), AssemblyError);

  CsrMatrix l(pat);
  l.add(0, 0, 1.0);
  l.add(0, 2, 2.0);
  l.lump_rows();
  CHECK(l(0, 0) == 3.0);
  CHECK(l(0, 2) == 0.0);
}

TEST_CASE("discrete L2 norm") {
  const FeSpace space(GridMesh(Domain2D{}, 4, 6));
  const auto n = static_cast<std::size_t>(space.num_nodes());
  CHECK(discrete_l2_norm(space.mass(), Vector(n, 0.0)) == 0.0);
  CHECK(discrete_l2_norm(space.mass(), Vector(n, 1.0)) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-13));

  double prev_err = 1.0;
  for (Index k : {2, 4, 8}) {
    const FeSpace unit(GridMesh(Domain2D{0, 1, 0, 1}, k, k), ElementKind::P1Split);
    const Vector x = interpolate_nodal(unit, [](const Point& p) { return p.x * p.x; });
    // integral of x^4 is 1/5; the P1 interpolant of x^2 converges like h^2
    const double err = std::abs(discrete_l2_norm(unit.mass(), x) - std::sqrt(0.2));
    CHECK(err < prev_err);
    prev_err = err;
  }
  const FeSpace unit(GridMesh(Domain2D{0, 1, 0, 1}, 3, 3));
  const Vector x = interpolate_nodal(unit, [](const Point& p) { return p.x; });
  CHECK(discrete_l2_norm(unit.mass(), x) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-13));
}
