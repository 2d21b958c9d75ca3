#include "dyncap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dyncap/error.hpp"

namespace dyncap {

void Domain2D::validate() const {
  if (!(x_min < x_max) || !(y_min < y_max)) {
    throw AssemblyError("domain must satisfy x_min < x_max and y_min < y_max");
  }
}

GridMesh::GridMesh(const Domain2D& domain, Index nx, Index ny) : domain_(domain), nx_(nx), ny_(ny) {
  domain_.validate();
  if (nx < 1 || ny < 1) {
    throw AssemblyError("grid needs nx >= 1 and ny >= 1, got nx=" + std::to_string(nx) +
                        " ny=" + std::to_string(ny));
  }
  nodes_.reserve(static_cast<std::size_t>(num_nodes()));
  for (Index j = 0; j <= ny; ++j) {
    // Pin the last row/column to the exact domain bounds.
    const double y = j == ny ? domain.y_max : domain.y_min + j * dy();
    for (Index i = 0; i <= nx; ++i) {
      const double x = i == nx ? domain.x_max : domain.x_min + i * dx();
      nodes_.push_back({x, y});
    }
  }
  elements_.reserve(static_cast<std::size_t>(num_elements()));
  for (Index j = 0; j < ny; ++j) {
    for (Index i = 0; i < nx; ++i) {
      elements_.push_back({node_index(i, j), node_index(i + 1, j), node_index(i + 1, j + 1),
                           node_index(i, j + 1)});
    }
  }
}

double GridMesh::h() const { return std::hypot(dx(), dy()); }

GridMesh build_grid(const Domain2D& domain, Index nx, Index ny) { return GridMesh(domain, nx, ny); }

const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Interior: return "interior";
    case BoundaryTag::D1: return "D1";
    case BoundaryTag::D2: return "D2";
    case BoundaryTag::Neumann: return "N";
  }
  return "?";
}

std::vector<Index> BoundaryTags::nodes_with(std::initializer_list<BoundaryTag> tags) const {
  std::vector<Index> out;
  for (std::size_t n = 0; n < node_tags_.size(); ++n) {
    if (std::find(tags.begin(), tags.end(), node_tags_[n]) != tags.end()) {
      out.push_back(static_cast<Index>(n));
    }
  }
  return out;
}

std::vector<Index> BoundaryTags::boundary_nodes() const {
  return nodes_with({BoundaryTag::D1, BoundaryTag::D2, BoundaryTag::Neumann});
}

BoundaryTags classify_boundary(const GridMesh& mesh, const Domain2D& domain,
                               const BoundarySegments& segments) {
  const double tol = 1e-10 * std::max({1.0, std::abs(domain.width()), std::abs(domain.height())});
  auto near = [tol](double a, double b) { return std::abs(a - b) <= tol; };
  auto in_range = [tol](double v, double lo, double hi) { return v >= lo - tol && v <= hi + tol; };

  auto in_d1 = [&](const Point& p) {
    return near(p.y, domain.y_max) && in_range(p.x, segments.d1_x0, segments.d1_x1);
  };
  auto in_d2 = [&](const Point& p) {
    return near(p.x, domain.x_max) && in_range(p.y, segments.d2_y0, segments.d2_y1);
  };
  auto on_boundary = [&](const Point& p) {
    return near(p.x, domain.x_min) || near(p.x, domain.x_max) || near(p.y, domain.y_min) ||
           near(p.y, domain.y_max);
  };

  std::vector<BoundaryTag> node_tags(static_cast<std::size_t>(mesh.num_nodes()), BoundaryTag::Interior);
  for (Index n = 0; n < mesh.num_nodes(); ++n) {
    const Point& p = mesh.node(n);
    if (!on_boundary(p)) continue;
    if (in_d2(p)) {
      node_tags[static_cast<std::size_t>(n)] = BoundaryTag::D2;
    } else if (in_d1(p)) {
      node_tags[static_cast<std::size_t>(n)] = BoundaryTag::D1;
    } else {
      node_tags[static_cast<std::size_t>(n)] = BoundaryTag::Neumann;
    }
  }

  // Counterclockwise walk: bottom, right, top, left.
  std::vector<BoundaryEdge> edges;
  const Index nx = mesh.nx();
  const Index ny = mesh.ny();
  edges.reserve(static_cast<std::size_t>(2 * (nx + ny)));
  auto edge_tag = [&](Index a, Index b) {
    const Point& pa = mesh.node(a);
    const Point& pb = mesh.node(b);
    if (in_d2(pa) && in_d2(pb)) return BoundaryTag::D2;
    if (in_d1(pa) && in_d1(pb)) return BoundaryTag::D1;
    return BoundaryTag::Neumann;
  };
  auto add = [&](Index a, Index b) { edges.push_back({a, b, edge_tag(a, b)}); };
  for (Index i = 0; i < nx; ++i) add(mesh.node_index(i, 0), mesh.node_index(i + 1, 0));
  for (Index j = 0; j < ny; ++j) add(mesh.node_index(nx, j), mesh.node_index(nx, j + 1));
  for (Index i = nx; i > 0; --i) add(mesh.node_index(i, ny), mesh.node_index(i - 1, ny));
  for (Index j = ny; j > 0; --j) add(mesh.node_index(0, j), mesh.node_index(0, j - 1));

  return BoundaryTags(std::move(node_tags), std::move(edges));
}

}  // namespace dyncap
