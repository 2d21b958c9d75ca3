#pragma once

#include <functional>
#include <string>

#include "dyncap/fem.hpp"
#include "dyncap/mesh.hpp"

namespace dyncap {

using SpaceTimeFunction = std::function<double(const Point&, double)>;
using SpaceFunction = std::function<double(const Point&)>;

/// Boundary data, initial data and sources of one simulation. Empty source
/// functions mean zero.
struct Problem {
  std::string name;
  Domain2D domain;

  /// Dirichlet nodes and values for psi and c at time t.
  std::function<DirichletValues(const GridMesh&, double)> psi_dirichlet;
  std::function<DirichletValues(const GridMesh&, double)> c_dirichlet;

  SpaceFunction psi0;
  SpaceFunction theta0;
  SpaceFunction c0;

  SpaceTimeFunction s1;    // Richards equation
  SpaceTimeFunction spsi;  // capillarity relation (verification only)
  SpaceTimeFunction s2;    // transport equation
};

/// Recharge of a two-dimensional reservoir:
///   psi = -2 + 2.2 t on D1 for t <= 1, 0.2 afterwards; psi = 1 - y on D2;
///   c = 1 on D1 for t <= 1, 0 afterwards; c = 3 - y on D2 and on N;
///   psi(x, y, 0) = 1 - y, c(x, y, 0) = 3 - y, theta(x, y, 0) = 0.39.
Problem recharge_problem(const Domain2D& domain = {}, const BoundarySegments& segments = {});

double recharge_psi_boundary(const Point& p, BoundaryTag tag, double t);
double recharge_c_boundary(const Point& p, BoundaryTag tag, double t);

/// Dirichlet data given by closed-form functions on the chosen boundary
/// sides of the rectangle (all four by default).
struct SideSelection {
  bool left = true;
  bool right = true;
  bool bottom = true;
  bool top = true;
};

std::function<DirichletValues(const GridMesh&, double)> dirichlet_on_sides(SideSelection sides,
                                                                           SpaceTimeFunction value);

}  // namespace dyncap
