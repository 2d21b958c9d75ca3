#include "dyncap/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dyncap/error.hpp"

namespace dyncap {

const char* to_string(ElementKind kind) {
  return kind == ElementKind::Q1 ? "quad" : "triangle";
}

QuadratureRule QuadratureRule::gauss_square(int points_per_axis) {
  std::vector<double> x;
  std::vector<double> w;
  switch (points_per_axis) {
    case 1: x = {0.0}; w = {2.0}; break;
    case 2: {
      const double g = 1.0 / std::sqrt(3.0);
      x = {-g, g};
      w = {1.0, 1.0};
      break;
    }
    case 3: {
      const double g = std::sqrt(0.6);
      x = {-g, 0.0, g};
      w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      break;
    }
    default: throw AssemblyError("Gauss rule with " + std::to_string(points_per_axis) + " points not available");
  }
  QuadratureRule rule;
  for (std::size_t j = 0; j < x.size(); ++j) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      rule.points.push_back({x[i], x[j]});
      rule.weights.push_back(w[i] * w[j]);
    }
  }
  return rule;
}

QuadratureRule QuadratureRule::triangle_3point() {
  QuadratureRule rule;
  rule.points = {{1.0 / 6.0, 1.0 / 6.0}, {2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0}};
  rule.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
  return rule;
}

double QuadratureRule::measure() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

// ---------------------------------------------------------------------------

FeSpace::FeSpace(GridMesh mesh, ElementKind kind) : mesh_(std::move(mesh)), kind_(kind) {
  QuadratureRule rule;
  std::vector<std::array<double, 3>> ref;  // per (q, a): N, dN/dxi, dN/deta
  if (kind_ == ElementKind::Q1) {
    nloc_ = 4;
    rule = QuadratureRule::gauss_square(2);
    num_cells_ = mesh_.num_elements();
    cell_nodes_.reserve(static_cast<std::size_t>(num_cells_) * 4);
    for (const auto& el : mesh_.elements()) cell_nodes_.insert(cell_nodes_.end(), el.begin(), el.end());
    static constexpr double xi_a[4] = {-1.0, 1.0, 1.0, -1.0};
    static constexpr double eta_a[4] = {-1.0, -1.0, 1.0, 1.0};
    for (const auto& p : rule.points) {
      for (int a = 0; a < 4; ++a) {
        ref.push_back({0.25 * (1.0 + xi_a[a] * p[0]) * (1.0 + eta_a[a] * p[1]),
                       0.25 * xi_a[a] * (1.0 + eta_a[a] * p[1]), 0.25 * eta_a[a] * (1.0 + xi_a[a] * p[0])});
      }
    }
  } else {
    nloc_ = 3;
    rule = QuadratureRule::triangle_3point();
    num_cells_ = 2 * mesh_.num_elements();
    cell_nodes_.reserve(static_cast<std::size_t>(num_cells_) * 3);
    for (const auto& el : mesh_.elements()) {
      cell_nodes_.insert(cell_nodes_.end(), {el[0], el[1], el[2]});
      cell_nodes_.insert(cell_nodes_.end(), {el[0], el[2], el[3]});
    }
    for (const auto& p : rule.points) {
      ref.push_back({1.0 - p[0] - p[1], -1.0, -1.0});
      ref.push_back({p[0], 1.0, 0.0});
      ref.push_back({p[1], 0.0, 1.0});
    }
  }
  nq_ = static_cast<int>(rule.points.size());

  phi_.resize(static_cast<std::size_t>(nq_ * nloc_));
  for (int q = 0; q < nq_; ++q) {
    for (int a = 0; a < nloc_; ++a) phi_[static_cast<std::size_t>(q * nloc_ + a)] = ref[static_cast<std::size_t>(q * nloc_ + a)][0];
  }

  const auto ncells = static_cast<std::size_t>(num_cells_);
  grad_.resize(ncells * nq_ * nloc_);
  jxw_.resize(ncells * nq_);
  qp_points_.resize(ncells * nq_);
  min_det_ = std::numeric_limits<double>::infinity();
  for (Index e = 0; e < num_cells_; ++e) {
    const auto nodes = cell_nodes(e);
    for (int q = 0; q < nq_; ++q) {
      double a = 0, b = 0, c = 0, d = 0, x = 0, y = 0;
      for (int k = 0; k < nloc_; ++k) {
        const Point& p = mesh_.node(nodes[static_cast<std::size_t>(k)]);
        const auto& r = ref[static_cast<std::size_t>(q * nloc_ + k)];
        a += p.x * r[1];
        b += p.x * r[2];
        c += p.y * r[1];
        d += p.y * r[2];
        x += p.x * r[0];
        y += p.y * r[0];
      }
      const double det = a * d - b * c;
      min_det_ = std::min(min_det_, det);
      if (!(det > 0.0)) throw AssemblyError("non-positive Jacobian in cell " + std::to_string(e));
      const std::size_t base = static_cast<std::size_t>(e) * nq_ + q;
      jxw_[base] = det * rule.weights[static_cast<std::size_t>(q)];
      qp_points_[base] = {x, y};
      for (int k = 0; k < nloc_; ++k) {
        const auto& r = ref[static_cast<std::size_t>(q * nloc_ + k)];
        grad_[base * nloc_ + k] = {(d * r[1] - c * r[2]) / det, (-b * r[1] + a * r[2]) / det};
      }
    }
  }

  std::vector<std::vector<Index>> cells(ncells);
  for (Index e = 0; e < num_cells_; ++e) {
    const auto nodes = cell_nodes(e);
    cells[static_cast<std::size_t>(e)].assign(nodes.begin(), nodes.end());
  }
  pattern_ = SparsityPattern::from_elements(num_nodes(), cells);
  scatter_.resize(ncells * nloc_ * nloc_);
  for (Index e = 0; e < num_cells_; ++e) {
    const auto nodes = cell_nodes(e);
    for (int a = 0; a < nloc_; ++a) {
      for (int b = 0; b < nloc_; ++b) {
        scatter_[(static_cast<std::size_t>(e) * nloc_ + a) * nloc_ + b] =
            pattern_->find(nodes[static_cast<std::size_t>(a)], nodes[static_cast<std::size_t>(b)]);
      }
    }
  }

  mass_ = assemble_weighted_mass(*this, 1.0);
  stiffness_ = assemble_weighted_stiffness(*this, 1.0);
}

// ---------------------------------------------------------------------------

namespace {

void check_nodal(const FeSpace& space, std::span<const double> v, const char* what) {
  if (static_cast<Index>(v.size()) != space.num_nodes()) {
    throw AssemblyError(std::string(what) + ": nodal field has " + std::to_string(v.size()) +
                        " entries, mesh has " + std::to_string(space.num_nodes()) + " nodes");
  }
}

void check_qp(const FeSpace& space, std::size_t n, const char* what) {
  if (static_cast<Index>(n) != space.num_qp()) {
    throw AssemblyError(std::string(what) + ": quadrature field size mismatch");
  }
}

}  // namespace

QpField interpolate(const FeSpace& space, std::span<const double> nodal) {
  check_nodal(space, nodal, "interpolate");
  QpField out(static_cast<std::size_t>(space.num_qp()));
  const int nq = space.points_per_cell();
  const int nl = space.nodes_per_cell();
  for (Index e = 0; e < space.num_cells(); ++e) {
    const auto nodes = space.cell_nodes(e);
    for (int q = 0; q < nq; ++q) {
      double v = 0.0;
      for (int a = 0; a < nl; ++a) v += space.phi(q, a) * nodal[static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)])];
      out[static_cast<std::size_t>(e) * nq + q] = v;
    }
  }
  return out;
}

QpVectorField gradient(const FeSpace& space, std::span<const double> nodal) {
  check_nodal(space, nodal, "gradient");
  QpVectorField out(static_cast<std::size_t>(space.num_qp()));
  const int nq = space.points_per_cell();
  const int nl = space.nodes_per_cell();
  for (Index e = 0; e < space.num_cells(); ++e) {
    const auto nodes = space.cell_nodes(e);
    for (int q = 0; q < nq; ++q) {
      Vec2 g{0.0, 0.0};
      for (int a = 0; a < nl; ++a) {
        const double v = nodal[static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)])];
        const Vec2& d = space.grad(e, q, a);
        g[0] += v * d[0];
        g[1] += v * d[1];
      }
      out[static_cast<std::size_t>(e) * nq + q] = g;
    }
  }
  return out;
}

QpField evaluate_at_qp(const FeSpace& space, const std::function<double(const Point&)>& f) {
  QpField out(static_cast<std::size_t>(space.num_qp()));
  const int nq = space.points_per_cell();
  for (Index e = 0; e < space.num_cells(); ++e) {
    for (int q = 0; q < nq; ++q) out[static_cast<std::size_t>(e) * nq + q] = f(space.qp_point(e, q));
  }
  return out;
}

Vector interpolate_nodal(const FeSpace& space, const std::function<double(const Point&)>& f) {
  Vector out(static_cast<std::size_t>(space.num_nodes()));
  for (Index n = 0; n < space.num_nodes(); ++n) out[static_cast<std::size_t>(n)] = f(space.mesh().node(n));
  return out;
}

// ---------------------------------------------------------------------------

CsrMatrix assemble_weighted_mass_qp(const FeSpace& space, std::span<const double> weight) {
  check_qp(space, weight.size(), "assemble_weighted_mass");
  CsrMatrix m(space.pattern());
  auto vals = m.values();
  const int nq = space.points_per_cell();
  const int nl = space.nodes_per_cell();
  for (Index e = 0; e < space.num_cells(); ++e) {
    for (int q = 0; q < nq; ++q) {
      const double w = weight[static_cast<std::size_t>(e) * nq + q] * space.jxw(e, q);
      if (w == 0.0) continue;
      for (int a = 0; a < nl; ++a) {
        const double wa = w * space.phi(q, a);
        for (int b = 0; b < nl; ++b) vals[static_cast<std::size_t>(space.scatter(e, a, b))] += wa * space.phi(q, b);
      }
    }
  }
  return m;
}

CsrMatrix assemble_weighted_mass(const FeSpace& space, double weight) {
  return assemble_weighted_mass_qp(space, QpField(static_cast<std::size_t>(space.num_qp()), weight));
}

CsrMatrix assemble_weighted_mass(const FeSpace& space, const DofField& weight) {
  return assemble_weighted_mass_qp(space, interpolate(space, weight.values));
}

CsrMatrix assemble_weighted_stiffness_qp(const FeSpace& space, std::span<const double> coeff) {
  check_qp(space, coeff.size(), "assemble_weighted_stiffness");
  CsrMatrix m(space.pattern());
  auto vals = m.values();
  const int nq = space.points_per_cell();
  const int nl = space.nodes_per_cell();
  for (Index e = 0; e < space.num_cells(); ++e) {
    for (int q = 0; q < nq; ++q) {
      const double k = coeff[static_cast<std::size_t>(e) * nq + q];
      if (k < 0.0 || !std::isfinite(k)) {
        throw AssemblyError("stiffness coefficient " + std::to_string(k) + " at cell " + std::to_string(e) +
                            " is negative or non-finite");
      }
      const double w = k * space.jxw(e, q);
      if (w == 0.0) continue;
      for (int a = 0; a < nl; ++a) {
        const Vec2& ga = space.grad(e, q, a);
        for (int b = 0; b < nl; ++b) {
          const Vec2& gb = space.grad(e, q, b);
          vals[static_cast<std::size_t>(space.scatter(e, a, b))] += w * (ga[0] * gb[0] + ga[1] * gb[1]);
        }
      }
    }
  }
  return m;
}

CsrMatrix assemble_weighted_stiffness(const FeSpace& space, double coeff) {
  return assemble_weighted_stiffness_qp(space, QpField(static_cast<std::size_t>(space.num_qp()), coeff));
}

CsrMatrix assemble_weighted_stiffness(const FeSpace& space, const DofField& coeff) {
  return assemble_weighted_stiffness_qp(space, interpolate(space, coeff.values));
}

CsrMatrix assemble_tensor_stiffness(const FeSpace& space, const Diffusion& d) {
  if (d.is_scalar()) return assemble_weighted_stiffness(space, d.xx);
  CsrMatrix m(space.pattern());
  auto vals = m.values();
  const int nq = space.points_per_cell();
  const int nl = space.nodes_per_cell();
  for (Index e = 0; e < space.num_cells(); ++e) {
    for (int q = 0; q < nq; ++q) {
      const double w = space.jxw(e, q);
      for (int a = 0; a < nl; ++a) {
        const Vec2& ga = space.grad(e, q, a);
        for (int b = 0; b < nl; ++b) {
          const Vec2& gb = space.grad(e, q, b);
          const double dx = d.xx * gb[0] + d.xy * gb[1];
          const double dy = d.yx * gb[0] + d.yy * gb[1];
          vals[static_cast<std::size_t>(space.scatter(e, a, b))] += w * (dx * ga[0] + dy * ga[1]);
        }
      }
    }
  }
  return m;
}

CsrMatrix assemble_convection(const FeSpace& space, std::span<const Vec2> w) {
  check_qp(space, w.size(), "assemble_convection");
  CsrMatrix m(space.pattern());
  auto vals = m.values();
  const int nq = space.points_per_cell();
  const int nl = space.nodes_per_cell();
  for (Index e = 0; e < space.num_cells(); ++e) {
    for (int q = 0; q < nq; ++q) {
      const Vec2& u = w[static_cast<std::size_t>(e) * nq + q];
      if (u[0] == 0.0 && u[1] == 0.0) continue;
      const double jw = space.jxw(e, q);
      for (int a = 0; a < nl; ++a) {
        const Vec2& ga = space.grad(e, q, a);
        const double ua = jw * (u[0] * ga[0] + u[1] * ga[1]);
        for (int b = 0; b < nl; ++b) vals[static_cast<std::size_t>(space.scatter(e, a, b))] += ua * space.phi(q, b);
      }
    }
  }
  return m;
}

Vector assemble_load_qp(const FeSpace& space, std::span<const double> f) {
  check_qp(space, f.size(), "assemble_load");
  Vector b(static_cast<std::size_t>(space.num_nodes()), 0.0);
  const int nq = space.points_per_cell();
  const int nl = space.nodes_per_cell();
  for (Index e = 0; e < space.num_cells(); ++e) {
    const auto nodes = space.cell_nodes(e);
    for (int q = 0; q < nq; ++q) {
      const double w = f[static_cast<std::size_t>(e) * nq + q] * space.jxw(e, q);
      for (int a = 0; a < nl; ++a) b[static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)])] += w * space.phi(q, a);
    }
  }
  return b;
}

Vector assemble_gradient_load_qp(const FeSpace& space, std::span<const Vec2> w) {
  check_qp(space, w.size(), "assemble_gradient_load");
  Vector b(static_cast<std::size_t>(space.num_nodes()), 0.0);
  const int nq = space.points_per_cell();
  const int nl = space.nodes_per_cell();
  for (Index e = 0; e < space.num_cells(); ++e) {
    const auto nodes = space.cell_nodes(e);
    for (int q = 0; q < nq; ++q) {
      const Vec2& u = w[static_cast<std::size_t>(e) * nq + q];
      const double jw = space.jxw(e, q);
      for (int a = 0; a < nl; ++a) {
        const Vec2& ga = space.grad(e, q, a);
        b[static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)])] += jw * (u[0] * ga[0] + u[1] * ga[1]);
      }
    }
  }
  return b;
}

Vector assemble_gravity_load_qp(const FeSpace& space, std::span<const double> k) {
  check_qp(space, k.size(), "assemble_gravity_load");
  QpVectorField w(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) w[i] = {0.0, k[i]};
  return assemble_gradient_load_qp(space, w);
}

Vector assemble_gravity_load(const FeSpace& space, const DofField& k) {
  return assemble_gravity_load_qp(space, interpolate(space, k.values));
}

QpVectorField compute_water_flux(const FeSpace& space, const DofField& psi, const DofField& theta,
                                 const ConstitutiveSet& set, long* clamp_events, const QpField* branch_psi) {
  const QpField th = interpolate(space, theta.values);
  const QpField ps = branch_psi ? *branch_psi : interpolate(space, psi.values);
  const QpVectorField gp = gradient(space, psi.values);
  QpVectorField u(th.size());
  for (std::size_t i = 0; i < th.size(); ++i) {
    const double k = conductivity(clamp_theta(th[i], set, clamp_events), ps[i], set.vg);
    u[i] = {-k * gp[i][0], -k * (gp[i][1] + 1.0)};
  }
  return u;
}

// ---------------------------------------------------------------------------

void apply_dirichlet(SparseSystem& system, int block_row, const DirichletValues& bc) {
  auto& a = system.matrix;
  if (block_row < 0 || block_row >= a.num_blocks()) throw AssemblyError("Dirichlet: block row out of range");
  if (bc.nodes.size() != bc.values.size()) {
    throw AssemblyError("Dirichlet: " + std::to_string(bc.nodes.size()) + " constrained nodes but " +
                        std::to_string(bc.values.size()) + " values");
  }
  const auto n = static_cast<std::size_t>(a.block_size());
  for (std::size_t k = 0; k < bc.nodes.size(); ++k) {
    const Index node = bc.nodes[k];
    if (node < 0 || node >= a.block_size()) throw AssemblyError("Dirichlet: node out of range");
    if (!std::isfinite(bc.values[k])) {
      throw AssemblyError("Dirichlet: missing value for node " + std::to_string(node));
    }
    a.replace_row_by_identity(block_row, node);
    system.rhs[static_cast<std::size_t>(block_row) * n + static_cast<std::size_t>(node)] = bc.values[k];
  }
}

DirichletValues collect_dirichlet(const GridMesh& mesh, const BoundaryTags& tags,
                                  std::initializer_list<BoundaryTag> which,
                                  const std::function<double(const Point&, BoundaryTag)>& value) {
  DirichletValues bc;
  bc.nodes = tags.nodes_with(which);
  bc.values.reserve(bc.nodes.size());
  for (Index n : bc.nodes) {
    const double v = value(mesh.node(n), tags.node_tag(n));
    if (!std::isfinite(v)) throw AssemblyError("Dirichlet: missing value for node " + std::to_string(n));
    bc.values.push_back(v);
  }
  return bc;
}

}  // namespace dyncap
