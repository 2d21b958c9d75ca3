#include "dyncap/problem.hpp"

#include <cmath>

namespace dyncap {

double recharge_psi_boundary(const Point& p, BoundaryTag tag, double t) {
  switch (tag) {
    case BoundaryTag::D1: return t <= 1.0 ? -2.0 + 2.2 * t : 0.2;
    case BoundaryTag::D2: return 1.0 - p.y;
    default: return std::nan("");
  }
}

double recharge_c_boundary(const Point& p, BoundaryTag tag, double t) {
  switch (tag) {
    case BoundaryTag::D1: return t <= 1.0 ? 1.0 : 0.0;
    case BoundaryTag::D2:
    case BoundaryTag::Neumann: return 3.0 - p.y;
    default: return std::nan("");
  }
}

Problem recharge_problem(const Domain2D& domain, const BoundarySegments& segments) {
  Problem pb;
  pb.name = "haverkamp-recharge";
  pb.domain = domain;
  pb.psi_dirichlet = [domain, segments](const GridMesh& mesh, double t) {
    const BoundaryTags tags = classify_boundary(mesh, domain, segments);
    return collect_dirichlet(mesh, tags, {BoundaryTag::D1, BoundaryTag::D2},
                             [t](const Point& p, BoundaryTag tag) { return recharge_psi_boundary(p, tag, t); });
  };
  pb.c_dirichlet = [domain, segments](const GridMesh& mesh, double t) {
    const BoundaryTags tags = classify_boundary(mesh, domain, segments);
    return collect_dirichlet(mesh, tags, {BoundaryTag::D1, BoundaryTag::D2, BoundaryTag::Neumann},
                             [t](const Point& p, BoundaryTag tag) { return recharge_c_boundary(p, tag, t); });
  };
  pb.psi0 = [](const Point& p) { return 1.0 - p.y; };
  pb.theta0 = [](const Point&) { return 0.39; };
  pb.c0 = [](const Point& p) { return 3.0 - p.y; };
  return pb;
}

std::function<DirichletValues(const GridMesh&, double)> dirichlet_on_sides(SideSelection sides,
                                                                           SpaceTimeFunction value) {
  return [sides, value = std::move(value)](const GridMesh& mesh, double t) {
    DirichletValues bc;
    for (Index j = 0; j <= mesh.ny(); ++j) {
      for (Index i = 0; i <= mesh.nx(); ++i) {
        const bool on = (sides.left && i == 0) || (sides.right && i == mesh.nx()) ||
                        (sides.bottom && j == 0) || (sides.top && j == mesh.ny());
        if (!on) continue;
        const Index n = mesh.node_index(i, j);
        bc.nodes.push_back(n);
        bc.values.push_back(value(mesh.node(n), t));
      }
    }
    return bc;
  };
}

}  // namespace dyncap
