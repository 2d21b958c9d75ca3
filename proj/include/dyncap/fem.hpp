#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "dyncap/constitutive.hpp"
#include "dyncap/linalg.hpp"
#include "dyncap/mesh.hpp"

namespace dyncap {

using Vec2 = std::array<double, 2>;

enum class FieldKind { PressureHead, WaterContent, Concentration, Auxiliary };

/// Nodal coefficients of a P1/Q1 function.
struct DofField {
  FieldKind kind = FieldKind::Auxiliary;
  Vector values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

enum class ElementKind {
  Q1,       // bilinear quadrilaterals, 2x2 Gauss
  P1Split,  // each cell split along its (0,0)-(1,1) diagonal, 3-point rule
};

const char* to_string(ElementKind kind);

struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;

  static QuadratureRule gauss_square(int points_per_axis);  // on [-1, 1]^2
  static QuadratureRule triangle_3point();                  // on the unit triangle
  double measure() const;
};

/// Precomputed element geometry, shape values and gradients at the quadrature
/// points, plus the scatter map from local (a, b) pairs into the global CSR
/// pattern.
class FeSpace {
public:
  explicit FeSpace(GridMesh mesh, ElementKind kind = ElementKind::Q1);

  const GridMesh& mesh() const { return mesh_; }
  ElementKind kind() const { return kind_; }
  Index num_nodes() const { return mesh_.num_nodes(); }
  Index num_cells() const { return num_cells_; }
  int nodes_per_cell() const { return nloc_; }
  int points_per_cell() const { return nq_; }
  Index num_qp() const { return num_cells_ * nq_; }

  std::span<const Index> cell_nodes(Index e) const {
    return {cell_nodes_.data() + static_cast<std::size_t>(e) * nloc_, static_cast<std::size_t>(nloc_)};
  }
  double phi(int q, int a) const { return phi_[static_cast<std::size_t>(q * nloc_ + a)]; }
  const Vec2& grad(Index e, int q, int a) const {
    return grad_[(static_cast<std::size_t>(e) * nq_ + q) * nloc_ + a];
  }
  double jxw(Index e, int q) const { return jxw_[static_cast<std::size_t>(e) * nq_ + q]; }
  const Point& qp_point(Index e, int q) const { return qp_points_[static_cast<std::size_t>(e) * nq_ + q]; }
  /// Position in the CSR value array of local entry (a, b) of cell e.
  Index scatter(Index e, int a, int b) const {
    return scatter_[(static_cast<std::size_t>(e) * nloc_ + a) * nloc_ + b];
  }

  const std::shared_ptr<const SparsityPattern>& pattern() const { return pattern_; }

  /// Unweighted consistent mass and stiffness, built once.
  const CsrMatrix& mass() const { return mass_; }
  const CsrMatrix& stiffness() const { return stiffness_; }

  double min_det_jacobian() const { return min_det_; }

private:
  GridMesh mesh_;
  ElementKind kind_;
  Index num_cells_ = 0;
  int nloc_ = 0;
  int nq_ = 0;
  std::vector<Index> cell_nodes_;
  std::vector<double> phi_;
  std::vector<Vec2> grad_;
  std::vector<double> jxw_;
  std::vector<Point> qp_points_;
  std::vector<Index> scatter_;
  std::shared_ptr<const SparsityPattern> pattern_;
  CsrMatrix mass_;
  CsrMatrix stiffness_;
  double min_det_ = 0.0;
};

// Quadrature-point data, index e * points_per_cell + q.
using QpField = std::vector<double>;
using QpVectorField = std::vector<Vec2>;

QpField interpolate(const FeSpace& space, std::span<const double> nodal);
QpVectorField gradient(const FeSpace& space, std::span<const double> nodal);
QpField evaluate_at_qp(const FeSpace& space, const std::function<double(const Point&)>& f);
Vector interpolate_nodal(const FeSpace& space, const std::function<double(const Point&)>& f);

/// M[i][j] = integral of w phi_i phi_j.
CsrMatrix assemble_weighted_mass(const FeSpace& space, double weight);
CsrMatrix assemble_weighted_mass(const FeSpace& space, const DofField& weight);
CsrMatrix assemble_weighted_mass_qp(const FeSpace& space, std::span<const double> weight);

/// A[i][j] = integral of k grad(phi_j) . grad(phi_i). A negative k at any
/// quadrature point raises AssemblyError.
CsrMatrix assemble_weighted_stiffness(const FeSpace& space, double coeff);
CsrMatrix assemble_weighted_stiffness(const FeSpace& space, const DofField& coeff);
CsrMatrix assemble_weighted_stiffness_qp(const FeSpace& space, std::span<const double> coeff);
/// Constant tensor diffusion: integral of (D grad(phi_j)) . grad(phi_i).
CsrMatrix assemble_tensor_stiffness(const FeSpace& space, const Diffusion& d);

/// C[i][j] = integral of (w phi_j) . grad(phi_i), i.e. convection tested
/// against the gradient of the test function.
CsrMatrix assemble_convection(const FeSpace& space, std::span<const Vec2> w);

/// b[i] = integral of f phi_i.
Vector assemble_load_qp(const FeSpace& space, std::span<const double> f);
/// b[i] = integral of w . grad(phi_i).
Vector assemble_gradient_load_qp(const FeSpace& space, std::span<const Vec2> w);
/// b[i] = integral of k (e_z . grad(phi_i)), e_z = (0, 1).
Vector assemble_gravity_load(const FeSpace& space, const DofField& k);
Vector assemble_gravity_load_qp(const FeSpace& space, std::span<const double> k);

/// u_w = -K(theta, psi) (grad psi + e_z) at every quadrature point. Water
/// content is clamped into the admissible band before K is evaluated;
/// `clamp_events` counts the clamped points. When `branch_psi` is given, the
/// saturated/unsaturated branch of K is chosen from it instead of from psi.
QpVectorField compute_water_flux(const FeSpace& space, const DofField& psi, const DofField& theta,
                                 const ConstitutiveSet& set, long* clamp_events = nullptr,
                                 const QpField* branch_psi = nullptr);

struct DirichletValues {
  std::vector<Index> nodes;
  Vector values;
};

/// Row replacement: each constrained row of block-row `block_row` becomes an
/// identity row with the prescribed value on the right-hand side.
void apply_dirichlet(SparseSystem& system, int block_row, const DirichletValues& bc);

/// Collects prescribed values for the nodes carrying one of `tags`.
/// `value` must return a finite number for every such node.
DirichletValues collect_dirichlet(const GridMesh& mesh, const BoundaryTags& tags,
                                  std::initializer_list<BoundaryTag> which,
                                  const std::function<double(const Point&, BoundaryTag)>& value);

}  // namespace dyncap
