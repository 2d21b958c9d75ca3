#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dyncap/constitutive.hpp"
#include "dyncap/driver.hpp"
#include "dyncap/mesh.hpp"
#include "dyncap/problem.hpp"
#include "dyncap/schemes.hpp"

namespace dyncap {

/// Closed-form (psi*, theta*, c*) on a rectangle; sources follow from
/// substituting them into the three equations.
struct ManufacturedCase {
  std::string name;
  Domain2D domain;
  SpaceTimeFunction psi;
  SpaceTimeFunction theta;
  SpaceTimeFunction c;
};

struct MmsSources {
  double s1 = 0.0;
  double spsi = 0.0;
  double s2 = 0.0;
};

/// Sources at (p, t). Derivatives of the closed forms are taken by
/// fourth-order central differences with step `h`. The convection sign
/// follows `form`. Throws DomainError on a non-finite source.
MmsSources mms_sources(const ManufacturedCase& mms, const ConstitutiveSet& set, ConvectionForm form,
                       const Point& p, double t, double h = 1e-3);

/// Problem with the case's Dirichlet data on all four sides, its initial
/// data and its sources.
Problem manufactured_problem(const ManufacturedCase& mms, const ConstitutiveSet& set, ConvectionForm form);

/// Cases used by the convergence studies. Pressure head stays negative and
/// water content stays in [0.1, 0.95].
ManufacturedCase mms_spatial_case();   // theta* linear in t, c* steady
ManufacturedCase mms_temporal_case();  // spatially affine, nonlinear in t
/// Spatially uniform theta* = theta0 + eps t with a static, no-flow setting.
ManufacturedCase mms_uniform_case(double theta0, double eps, const ConstitutiveSet& set);

struct FieldErrors {
  double psi = 0.0;
  double theta = 0.0;
  double c = 0.0;
};

struct MmsRun {
  RunReport report;
  FieldErrors errors;  // L2 at the final time, 3x3 Gauss per cell
};

MmsRun run_mms(const ManufacturedCase& mms, const ConstitutiveSet& set, const SchemeConfig& config, Index nx,
               Index ny, double T, double dt);

FieldErrors l2_errors(const FeSpace& space, const StateTriple& state, const ManufacturedCase& mms, double t);

struct OrderEstimate {
  double order = 0.0;
  bool monotone = true;  // false -> the sequence did not decrease strictly
};

/// Least-squares slope of log(error) against log(step).
OrderEstimate convergence_order(const std::vector<double>& steps, const std::vector<double>& errors);

/// One Q1 cell on the unit square. Nodes 0 (0,0), 1 (1,0), 2 (0,1), 3 (1,1);
/// psi and c are prescribed on the top nodes.
struct SingleElementCase {
  double psi0 = 0.0;
  double theta0 = 0.39;
  double c0 = 0.0;
  double psi_top = -0.5;
  double c_top = 1.0;
  double dt = 0.1;
  int steps = 10;
};

struct OracleState {
  double psi[4];
  double theta[4];
  double c[4];
};

struct OracleResult {
  bool converged = false;
  std::string diagnostic;
  std::vector<OracleState> trajectory;  // steps + 1 entries, [0] initial
};

/// Brute-force reference: each step solves the 12 nonlinear equations by a
/// fixed-point iteration with relaxation 1e-3 (at most 1e6 iterations) to
/// residual 1e-12, preconditioned by a finite-difference Jacobian frozen at
/// the start of the step. Independent of the scheme implementations except
/// for the constitutive functions.
OracleResult single_element_oracle(const SingleElementCase& cs, const ConstitutiveSet& set,
                                   const SchemeConfig& config);

Problem single_element_problem(const SingleElementCase& cs);

/// Equilibrium on `domain`: psi = -p(theta0, c0), constant fields, psi and c
/// prescribed on top and bottom, no sources.
Problem equilibrium_problem(const Domain2D& domain, double theta0, double c0, const ConstitutiveSet& set);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runs the verification checks and prints one line per check. With `quick`,
/// the MMS sweeps use coarser meshes.
std::vector<CheckResult> run_verification_suite(std::ostream& out, bool quick);

}  // namespace dyncap
