#include "dyncap/linalg.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#ifdef DYNCAP_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#else
#include <Eigen/SparseLU>
#endif

#include "dyncap/error.hpp"

namespace dyncap {

// ---------------------------------------------------------------------------
// SparsityPattern

SparsityPattern::SparsityPattern(Index n, std::vector<Index> row_ptr, std::vector<Index> cols)
    : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)) {
  if (static_cast<Index>(row_ptr_.size()) != n_ + 1 || row_ptr_.back() != static_cast<Index>(cols_.size())) {
    throw AssemblyError("inconsistent CSR pattern");
  }
}

std::shared_ptr<const SparsityPattern> SparsityPattern::from_elements(Index n,
                                                                      std::span<const std::vector<Index>> elements) {
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) adj[static_cast<std::size_t>(i)].push_back(i);
  for (const auto& el : elements) {
    for (Index a : el) {
      auto& row = adj[static_cast<std::size_t>(a)];
      row.insert(row.end(), el.begin(), el.end());
    }
  }
  std::vector<Index> row_ptr(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Index> cols;
  for (Index i = 0; i < n; ++i) {
    auto& row = adj[static_cast<std::size_t>(i)];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    cols.insert(cols.end(), row.begin(), row.end());
    row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<Index>(cols.size());
  }
  return std::make_shared<const SparsityPattern>(n, std::move(row_ptr), std::move(cols));
}

std::shared_ptr<const SparsityPattern> SparsityPattern::from_entries(Index n,
                                                                     std::span<const std::pair<Index, Index>> entries) {
  std::vector<std::vector<Index>> elems;
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) adj[static_cast<std::size_t>(i)].push_back(i);
  for (auto [r, c] : entries) {
    if (r < 0 || r >= n || c < 0 || c >= n) throw AssemblyError("pattern entry out of range");
    adj[static_cast<std::size_t>(r)].push_back(c);
  }
  std::vector<Index> row_ptr(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Index> cols;
  for (Index i = 0; i < n; ++i) {
    auto& row = adj[static_cast<std::size_t>(i)];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    cols.insert(cols.end(), row.begin(), row.end());
    row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<Index>(cols.size());
  }
  return std::make_shared<const SparsityPattern>(n, std::move(row_ptr), std::move(cols));
}

Index SparsityPattern::find(Index row, Index col) const {
  const auto begin = cols_.begin() + row_ptr_[static_cast<std::size_t>(row)];
  const auto end = cols_.begin() + row_ptr_[static_cast<std::size_t>(row) + 1];
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return -1;
  return static_cast<Index>(it - cols_.begin());
}

// ---------------------------------------------------------------------------
// CsrMatrix

CsrMatrix::CsrMatrix(std::shared_ptr<const SparsityPattern> pattern)
    : pattern_(std::move(pattern)), values_(static_cast<std::size_t>(pattern_->nnz()), 0.0) {}

double CsrMatrix::operator()(Index row, Index col) const {
  const Index k = pattern_->find(row, col);
  return k < 0 ? 0.0 : values_[static_cast<std::size_t>(k)];
}

void CsrMatrix::add(Index row, Index col, double v) {
  const Index k = pattern_->find(row, col);
  if (k < 0) {
    throw AssemblyError("entry (" + std::to_string(row) + ", " + std::to_string(col) + ") not in pattern");
  }
  values_[static_cast<std::size_t>(k)] += v;
}

void CsrMatrix::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

void CsrMatrix::scale(double s) {
  for (double& v : values_) v *= s;
}

void CsrMatrix::axpy(double s, const CsrMatrix& other) {
  if (other.pattern_ != pattern_) throw AssemblyError("axpy on matrices with different patterns");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += s * other.values_[k];
}

void CsrMatrix::zero_row(Index row) {
  const auto rp = pattern_->row_ptr();
  std::fill(values_.begin() + rp[static_cast<std::size_t>(row)],
            values_.begin() + rp[static_cast<std::size_t>(row) + 1], 0.0);
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  const auto rp = pattern_->row_ptr();
  const auto cols = pattern_->cols();
  const Index n = size();
  for (Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Index k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) {
      acc += values_[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
}

Vector CsrMatrix::operator*(std::span<const double> x) const {
  if (static_cast<Index>(x.size()) != size()) throw AssemblyError("matrix-vector dimension mismatch");
  Vector y(static_cast<std::size_t>(size()));
  multiply(x, y);
  return y;
}

double CsrMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

double CsrMatrix::symmetry_defect() const {
  const auto rp = pattern_->row_ptr();
  const auto cols = pattern_->cols();
  double scale_ = 0.0;
  double defect = 0.0;
  for (Index i = 0; i < size(); ++i) {
    for (Index k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) {
      const Index j = cols[static_cast<std::size_t>(k)];
      const double v = values_[static_cast<std::size_t>(k)];
      scale_ = std::max(scale_, std::abs(v));
      defect = std::max(defect, std::abs(v - (*this)(j, i)));
    }
  }
  return scale_ == 0.0 ? 0.0 : defect / scale_;
}

std::vector<Vector> CsrMatrix::to_dense() const {
  const auto n = static_cast<std::size_t>(size());
  std::vector<Vector> d(n, Vector(n, 0.0));
  const auto rp = pattern_->row_ptr();
  const auto cols = pattern_->cols();
  for (std::size_t i = 0; i < n; ++i) {
    for (Index k = rp[i]; k < rp[i + 1]; ++k) {
      d[i][static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])] = values_[static_cast<std::size_t>(k)];
    }
  }
  return d;
}

void CsrMatrix::lump_rows() {
  const auto rp = pattern_->row_ptr();
  const auto cols = pattern_->cols();
  for (Index i = 0; i < size(); ++i) {
    double sum = 0.0;
    Index diag = -1;
    for (Index k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) {
      sum += values_[static_cast<std::size_t>(k)];
      values_[static_cast<std::size_t>(k)] = 0.0;
      if (cols[static_cast<std::size_t>(k)] == i) diag = k;
    }
    values_[static_cast<std::size_t>(diag)] = sum;
  }
}

// ---------------------------------------------------------------------------
// BlockMatrix

BlockMatrix::BlockMatrix(int nb, Index block_size)
    : nb_(nb), n_(block_size), blocks_(static_cast<std::size_t>(nb * nb)) {
  if (nb < 1) throw AssemblyError("block matrix needs at least one block");
}

CsrMatrix& BlockMatrix::block(int r, int c) {
  auto& b = blocks_[idx(r, c)];
  if (!b) throw AssemblyError("block (" + std::to_string(r) + "," + std::to_string(c) + ") not present");
  return *b;
}

const CsrMatrix& BlockMatrix::block(int r, int c) const {
  const auto& b = blocks_[idx(r, c)];
  if (!b) throw AssemblyError("block (" + std::to_string(r) + "," + std::to_string(c) + ") not present");
  return *b;
}

void BlockMatrix::set(int r, int c, CsrMatrix m) {
  if (m.size() != n_) throw AssemblyError("block size mismatch");
  blocks_[idx(r, c)] = std::move(m);
}

void BlockMatrix::replace_row_by_identity(int r, Index row) {
  for (int c = 0; c < nb_; ++c) {
    if (has(r, c)) block(r, c).zero_row(row);
  }
  block(r, r).add(row, row, 1.0);
}

void BlockMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  std::fill(y.begin(), y.end(), 0.0);
  Vector tmp(static_cast<std::size_t>(n_));
  const auto n = static_cast<std::size_t>(n_);
  for (int r = 0; r < nb_; ++r) {
    for (int c = 0; c < nb_; ++c) {
      if (!has(r, c)) continue;
      block(r, c).multiply(x.subspan(static_cast<std::size_t>(c) * n, n), tmp);
      for (std::size_t i = 0; i < n; ++i) y[static_cast<std::size_t>(r) * n + i] += tmp[i];
    }
  }
}

double BlockMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& b : blocks_) {
    if (b) {
      const double f = b->frobenius_norm();
      s += f * f;
    }
  }
  return std::sqrt(s);
}

unsigned BlockMatrix::mask() const {
  unsigned m = 0;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (blocks_[k]) m |= 1u << k;
  }
  return m;
}

// ---------------------------------------------------------------------------
// SparseLuSolver

struct SparseLuSolver::Impl {
  using Matrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
#ifdef DYNCAP_HAVE_UMFPACK
  using Factorization = Eigen::UmfPackLU<Matrix>;
#else
  using Factorization = Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>>;
#endif

  int nb = 0;
  Index n = 0;
  unsigned mask = 0;
  std::vector<const SparsityPattern*> patterns;
  Matrix a;
  std::vector<std::vector<int>> maps;
  Factorization lu;
  bool analyzed = false;

  Impl() {
#ifdef DYNCAP_HAVE_UMFPACK
    // Finite element blocks are structurally symmetric; residuals are checked
    // by the caller, so UMFPACK's own refinement steps are skipped.
    lu.umfpackControl()(UMFPACK_STRATEGY) = UMFPACK_STRATEGY_SYMMETRIC;
    lu.umfpackControl()(UMFPACK_IRSTEP) = 0;
    lu.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_METIS;
#endif
  }

  bool same_layout(const BlockMatrix& m) const {
    if (!analyzed || m.num_blocks() != nb || m.block_size() != n || m.mask() != mask) return false;
    for (int r = 0; r < nb; ++r) {
      for (int c = 0; c < nb; ++c) {
        const auto* p = m.has(r, c) ? &m.block(r, c).pattern() : nullptr;
        if (p != patterns[static_cast<std::size_t>(r * nb + c)]) return false;
      }
    }
    return true;
  }

  void build_layout(const BlockMatrix& m) {
    nb = m.num_blocks();
    n = m.block_size();
    mask = m.mask();
    patterns.assign(static_cast<std::size_t>(nb * nb), nullptr);
    maps.assign(static_cast<std::size_t>(nb * nb), {});
    std::vector<Eigen::Triplet<double, int>> trips;
    for (int r = 0; r < nb; ++r) {
      for (int c = 0; c < nb; ++c) {
        if (!m.has(r, c)) continue;
        const auto& p = m.block(r, c).pattern();
        patterns[static_cast<std::size_t>(r * nb + c)] = &p;
        const auto rp = p.row_ptr();
        const auto cols = p.cols();
        for (Index i = 0; i < p.size(); ++i) {
          for (Index k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) {
            trips.emplace_back(r * n + i, c * n + cols[static_cast<std::size_t>(k)], 1.0);
          }
        }
      }
    }
    a.resize(nb * n, nb * n);
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();
    for (int r = 0; r < nb; ++r) {
      for (int c = 0; c < nb; ++c) {
        if (!m.has(r, c)) continue;
        const auto& p = m.block(r, c).pattern();
        auto& map = maps[static_cast<std::size_t>(r * nb + c)];
        map.resize(static_cast<std::size_t>(p.nnz()));
        const auto rp = p.row_ptr();
        const auto cols = p.cols();
        for (Index i = 0; i < p.size(); ++i) {
          for (Index k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) {
            const int gcol = c * n + cols[static_cast<std::size_t>(k)];
            const int grow = r * n + i;
            const int* inner = a.innerIndexPtr();
            const int begin = a.outerIndexPtr()[gcol];
            const int end = a.outerIndexPtr()[gcol + 1];
            const int* pos = std::lower_bound(inner + begin, inner + end, grow);
            map[static_cast<std::size_t>(k)] = static_cast<int>(pos - inner);
          }
        }
      }
    }
    lu.analyzePattern(a);
    analyzed = true;
  }

  void fill(const BlockMatrix& m) {
    double* vals = a.valuePtr();
    std::fill(vals, vals + a.nonZeros(), 0.0);
    for (int r = 0; r < nb; ++r) {
      for (int c = 0; c < nb; ++c) {
        if (!m.has(r, c)) continue;
        const auto v = m.block(r, c).values();
        const auto& map = maps[static_cast<std::size_t>(r * nb + c)];
        for (std::size_t k = 0; k < map.size(); ++k) vals[map[k]] += v[k];
      }
    }
  }

  std::optional<std::size_t> locate_zero_line() const {
    std::vector<char> row_nz(static_cast<std::size_t>(a.rows()), 0);
    for (int col = 0; col < a.outerSize(); ++col) {
      bool any = false;
      for (Matrix::InnerIterator it(a, col); it; ++it) {
        if (it.value() != 0.0) {
          any = true;
          row_nz[static_cast<std::size_t>(it.row())] = 1;
        }
      }
      if (!any) return static_cast<std::size_t>(col);
    }
    for (std::size_t r = 0; r < row_nz.size(); ++r) {
      if (!row_nz[r]) return r;
    }
    return std::nullopt;
  }
};

SparseLuSolver::SparseLuSolver() : impl_(std::make_unique<Impl>()) {}
SparseLuSolver::~SparseLuSolver() = default;
SparseLuSolver::SparseLuSolver(SparseLuSolver&&) noexcept = default;
SparseLuSolver& SparseLuSolver::operator=(SparseLuSolver&&) noexcept = default;

const char* SparseLuSolver::backend() {
#ifdef DYNCAP_HAVE_UMFPACK
  return "umfpack";
#else
  return "eigen-sparselu";
#endif
}

void SparseLuSolver::factorize(const BlockMatrix& a) {
  if (!impl_->same_layout(a)) impl_->build_layout(a);
  impl_->fill(a);
  impl_->lu.factorize(impl_->a);
  if (impl_->lu.info() != Eigen::Success) {
    std::optional<std::size_t> pivot = impl_->locate_zero_line();
#ifndef DYNCAP_HAVE_UMFPACK
    if (!pivot) {
      // Eigen reports the failing column at the end of its message.
      const std::string msg = impl_->lu.lastErrorMessage();
      std::size_t p = msg.size();
      while (p > 0 && std::isdigit(static_cast<unsigned char>(msg[p - 1]))) --p;
      if (p < msg.size()) pivot = std::stoul(msg.substr(p));
    }
#endif
    throw SolverError("sparse LU: matrix is singular to working precision", pivot);
  }
}

Vector SparseLuSolver::solve(std::span<const double> b) const {
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
  Eigen::VectorXd x = impl_->lu.solve(rhs);
  if (!x.allFinite()) throw SolverError("sparse LU: non-finite solution");
  return Vector(x.data(), x.data() + x.size());
}

// ---------------------------------------------------------------------------
// solves

namespace {

double residual_norm(const BlockMatrix& a, std::span<const double> x, std::span<const double> b, Vector& r) {
  r.resize(b.size());
  a.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm2(r);
}

Vector solve_checked(SparseLuSolver& lu, const BlockMatrix& a, std::span<const double> b) {
  if (static_cast<Index>(b.size()) != a.size()) throw SolverError("right-hand side dimension mismatch");
  Vector x = lu.solve(b);
  Vector r;
  const double bound = kResidualContract * (a.frobenius_norm() * norm2(x) + norm2(b));
  if (residual_norm(a, x, b, r) <= bound) return x;
  // one step of iterative refinement
  const Vector dx = lu.solve(r);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
  const double res = residual_norm(a, x, b, r);
  if (!(res <= kResidualContract * (a.frobenius_norm() * norm2(x) + norm2(b)))) {
    throw SolverError("sparse LU: residual contract violated (ill-conditioned system), residual " +
                      std::to_string(res));
  }
  return x;
}

}  // namespace

Vector solve_sparse(const SparseSystem& system) {
  SparseLuSolver lu;
  lu.factorize(system.matrix);
  return solve_checked(lu, system.matrix, system.rhs);
}

Vector BlockSolver::solve_direct(const BlockMatrix& a, std::span<const double> b, int key) {
  auto& lu = cache_[static_cast<unsigned>(key) << 16 | a.mask()];
  lu.factorize(a);
  ++factorizations_;
  return solve_checked(lu, a, b);
}

Vector BlockSolver::solve(const SparseSystem& system) {
  const auto& a = system.matrix;
  const bool triangular = a.num_blocks() == 3 && !a.has(2, 0) && !a.has(2, 1) && a.has(2, 2);
  if (!triangular) return solve_direct(a, system.rhs, a.num_blocks());

  const auto n = static_cast<std::size_t>(a.block_size());
  BlockMatrix cc(1, a.block_size());
  cc.set(0, 0, a.block(2, 2));
  const Vector c = solve_direct(cc, std::span<const double>(system.rhs).subspan(2 * n, n), 11);

  BlockMatrix flow(2, a.block_size());
  Vector rhs(system.rhs.begin(), system.rhs.begin() + static_cast<std::ptrdiff_t>(2 * n));
  Vector tmp(n);
  for (int r = 0; r < 2; ++r) {
    for (int col = 0; col < 2; ++col) {
      if (a.has(r, col)) flow.set(r, col, a.block(r, col));
    }
    if (a.has(r, 2)) {
      a.block(r, 2).multiply(c, tmp);
      for (std::size_t i = 0; i < n; ++i) rhs[static_cast<std::size_t>(r) * n + i] -= tmp[i];
    }
  }
  Vector x = solve_direct(flow, rhs, 12);
  x.insert(x.end(), c.begin(), c.end());
  return x;
}

// ---------------------------------------------------------------------------
// norms

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double discrete_l2_norm(const CsrMatrix& mass, std::span<const double> v) {
  if (static_cast<Index>(v.size()) != mass.size()) throw AssemblyError("norm: dimension mismatch");
  const Vector mv = mass * v;
  return std::sqrt(std::max(0.0, dot(v, mv)));
}

}  // namespace dyncap
