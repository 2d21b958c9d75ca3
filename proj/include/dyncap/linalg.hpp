#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dyncap/mesh.hpp"

namespace dyncap {

using Vector = std::vector<double>;

/// Row-compressed sparsity pattern with sorted column indices.
class SparsityPattern {
public:
  SparsityPattern(Index n, std::vector<Index> row_ptr, std::vector<Index> cols);

  /// Pattern of the node-adjacency graph induced by element connectivity.
  static std::shared_ptr<const SparsityPattern> from_elements(Index n, std::span<const std::vector<Index>> elements);
  /// Pattern holding exactly the given (row, col) pairs plus the diagonal.
  static std::shared_ptr<const SparsityPattern> from_entries(Index n, std::span<const std::pair<Index, Index>> entries);

  Index size() const { return n_; }
  Index nnz() const { return static_cast<Index>(cols_.size()); }
  std::span<const Index> row_ptr() const { return row_ptr_; }
  std::span<const Index> cols() const { return cols_; }

  /// Position of (row, col) in the value array, or -1 when not stored.
  Index find(Index row, Index col) const;

private:
  Index n_;
  std::vector<Index> row_ptr_;
  std::vector<Index> cols_;
};

/// Square CSR matrix over a shared pattern.
class CsrMatrix {
public:
  CsrMatrix() = default;
  explicit CsrMatrix(std::shared_ptr<const SparsityPattern> pattern);

  Index size() const { return pattern_ ? pattern_->size() : 0; }
  const SparsityPattern& pattern() const { return *pattern_; }
  const std::shared_ptr<const SparsityPattern>& pattern_ptr() const { return pattern_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double operator()(Index row, Index col) const;
  /// Adds v at (row, col); throws AssemblyError if the entry is not in the pattern.
  void add(Index row, Index col, double v);

  void set_zero();
  void scale(double s);
  /// this += s * other (patterns must be identical objects).
  void axpy(double s, const CsrMatrix& other);
  void zero_row(Index row);

  void multiply(std::span<const double> x, std::span<double> y) const;
  Vector operator*(std::span<const double> x) const;

  double frobenius_norm() const;
  /// max |A_ij - A_ji| / max |A_ij|
  double symmetry_defect() const;
  std::vector<Vector> to_dense() const;

  /// Replaces each row by its row sum on the diagonal.
  void lump_rows();

private:
  std::shared_ptr<const SparsityPattern> pattern_;
  Vector values_;
};

/// nb x nb block operator on nb * N unknowns; absent blocks are zero.
class BlockMatrix {
public:
  BlockMatrix(int nb, Index block_size);

  int num_blocks() const { return nb_; }
  Index block_size() const { return n_; }
  Index size() const { return nb_ * n_; }

  bool has(int r, int c) const { return blocks_[idx(r, c)].has_value(); }
  CsrMatrix& block(int r, int c);
  const CsrMatrix& block(int r, int c) const;
  void set(int r, int c, CsrMatrix m);
  void clear(int r, int c) { blocks_[idx(r, c)].reset(); }

  /// Zeroes row `row` of block-row `r` across all blocks and puts 1 on the
  /// diagonal of block (r, r).
  void replace_row_by_identity(int r, Index row);

  void multiply(std::span<const double> x, std::span<double> y) const;
  double frobenius_norm() const;
  /// Bit mask of present blocks, bit r*nb+c.
  unsigned mask() const;

private:
  std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r * nb_ + c); }
  int nb_;
  Index n_;
  std::vector<std::optional<CsrMatrix>> blocks_;
};

struct SparseSystem {
  BlockMatrix matrix;
  Vector rhs;
};

/// Sparse LU with pivoting. The symbolic analysis is cached and reused while
/// the block layout and patterns stay the same.
class SparseLuSolver {
public:
  SparseLuSolver();
  ~SparseLuSolver();
  SparseLuSolver(SparseLuSolver&&) noexcept;
  SparseLuSolver& operator=(SparseLuSolver&&) noexcept;

  /// Throws SolverError when the matrix is singular to working precision.
  void factorize(const BlockMatrix& a);
  Vector solve(std::span<const double> b) const;

  static const char* backend();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Residual contract: ||Ax - b|| <= kResidualContract * (||A||_F ||x|| + ||b||).
inline constexpr double kResidualContract = 1e-10;

/// One-shot factorize + solve + residual check, with one refinement step
/// when the contract is missed.
Vector solve_sparse(const SparseSystem& system);

/// Solves with a reusable factorization cache. If block-row 2 of a 3x3
/// system couples to no other block, the c-block is solved first and the
/// remaining 2x2 block system afterwards (exact block back substitution).
class BlockSolver {
public:
  Vector solve(const SparseSystem& system);
  long factorizations() const { return factorizations_; }

private:
  Vector solve_direct(const BlockMatrix& a, std::span<const double> b, int key);
  std::map<unsigned, SparseLuSolver> cache_;
  long factorizations_ = 0;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

/// sqrt(v^T M v), M the unweighted mass matrix.
double discrete_l2_norm(const CsrMatrix& mass, std::span<const double> v);

}  // namespace dyncap
