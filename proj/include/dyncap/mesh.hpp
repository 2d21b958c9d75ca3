#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace dyncap {

using Index = std::int32_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned rectangle (x_min, x_max) x (y_min, y_max).
struct Domain2D {
  double x_min = 0.0;
  double x_max = 2.0;
  double y_min = 0.0;
  double y_max = 3.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  void validate() const;

  bool operator==(const Domain2D&) const = default;
};

/// Uniform structured grid of quadrilateral cells.
///
/// Nodes are numbered lexicographically, x fastest: node(i, j) = j * (nx + 1) + i.
/// Each element lists its four corners counterclockwise starting at the
/// lower-left corner.
class GridMesh {
public:
  GridMesh(const Domain2D& domain, Index nx, Index ny);

  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  const Domain2D& domain() const { return domain_; }

  Index num_nodes() const { return (nx_ + 1) * (ny_ + 1); }
  Index num_elements() const { return nx_ * ny_; }

  Index node_index(Index i, Index j) const { return j * (nx_ + 1) + i; }
  const Point& node(Index n) const { return nodes_[static_cast<std::size_t>(n)]; }
  std::span<const Point> nodes() const { return nodes_; }

  const std::array<Index, 4>& element(Index e) const { return elements_[static_cast<std::size_t>(e)]; }
  std::span<const std::array<Index, 4>> elements() const { return elements_; }

  double dx() const { return domain_.width() / nx_; }
  double dy() const { return domain_.height() / ny_; }
  /// Largest element diameter (the cell diagonal).
  double h() const;

private:
  Domain2D domain_;
  Index nx_;
  Index ny_;
  std::vector<Point> nodes_;
  std::vector<std::array<Index, 4>> elements_;
};

GridMesh build_grid(const Domain2D& domain, Index nx, Index ny);

enum class BoundaryTag : std::uint8_t { Interior, D1, D2, Neumann };

const char* to_string(BoundaryTag tag);

struct BoundaryEdge {
  Index a;
  Index b;
  BoundaryTag tag;
};

/// Dirichlet segments of the recharge benchmark:
/// D1 is the part of the top side with x in [d1_x0, d1_x1],
/// D2 the part of the right side with y in [d2_y0, d2_y1].
struct BoundarySegments {
  double d1_x0 = 0.0;
  double d1_x1 = 1.0;
  double d2_y0 = 0.0;
  double d2_y1 = 1.0;
};

class BoundaryTags {
public:
  BoundaryTags(std::vector<BoundaryTag> node_tags, std::vector<BoundaryEdge> edges)
      : node_tags_(std::move(node_tags)), edges_(std::move(edges)) {}

  BoundaryTag node_tag(Index n) const { return node_tags_[static_cast<std::size_t>(n)]; }
  std::span<const BoundaryTag> node_tags() const { return node_tags_; }
  std::span<const BoundaryEdge> edges() const { return edges_; }

  bool is_boundary(Index n) const { return node_tag(n) != BoundaryTag::Interior; }
  bool is_dirichlet(Index n) const {
    const auto t = node_tag(n);
    return t == BoundaryTag::D1 || t == BoundaryTag::D2;
  }

  std::vector<Index> nodes_with(std::initializer_list<BoundaryTag> tags) const;
  std::vector<Index> boundary_nodes() const;

private:
  std::vector<BoundaryTag> node_tags_;
  std::vector<BoundaryEdge> edges_;
};

/// Tags every boundary node and edge. At segment junctions Dirichlet wins
/// over Neumann and D2 wins over D1.
BoundaryTags classify_boundary(const GridMesh& mesh, const Domain2D& domain,
                               const BoundarySegments& segments = {});

}  // namespace dyncap
