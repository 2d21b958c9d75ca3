#pragma once

#include <functional>
#include <vector>

namespace dyncap {

/// van Genuchten parameters. `m` defaults to 1 - 1/n.
struct VanGenuchtenParams {
  double Ks = 1.0;
  double n = 2.0;
  double alpha = 1.0;
  double m = 0.5;

  static VanGenuchtenParams make(double Ks, double n, double alpha = 1.0);
  void validate() const;

  bool operator==(const VanGenuchtenParams&) const = default;
};

/// Width of the band below theta = 1 in which theta-derivatives that are
/// unbounded at full saturation are replaced by the secant slope over the band.
inline constexpr double kSaturationDerivativeBand = 1e-6;

/// Conductivity
///   K = Ks sqrt(theta) [1 - (1 - theta^(n/(n-1)))^((n-1)/n)]   for psi <= 0,
///   K = Ks                                                   for psi > 0.
/// Throws DomainError for theta outside (0, 1].
double conductivity(double theta, double psi, const VanGenuchtenParams& vg);

struct ConductivityDerivatives {
  double d_theta = 0.0;
  double d_psi = 0.0;
};

/// Analytic partial derivatives of `conductivity`. K depends on psi only
/// through the branch switch at psi = 0, so d_psi is zero on both branches.
/// d_theta grows like (1 - theta)^(-1/n) as theta -> 1; inside
/// kSaturationDerivativeBand it is replaced by the secant slope of the band.
ConductivityDerivatives conductivity_derivatives(double theta, double psi, const VanGenuchtenParams& vg);

enum class CapillaryModel { Benchmark, VanGenuchten, Tabulated };
enum class TauModel { Constant, Affine };
enum class ReactionModel { Zero, Linear, Custom };

/// Constant diffusion/dispersion tensor. A scalar D is stored as D * I.
struct Diffusion {
  double xx = 1.0;
  double xy = 0.0;
  double yx = 0.0;
  double yy = 1.0;

  static Diffusion scalar(double d) { return {d, 0.0, 0.0, d}; }
  bool is_scalar() const { return xy == 0.0 && yx == 0.0 && xx == yy; }

  bool operator==(const Diffusion&) const = default;
};

struct ReactionValue {
  double r = 0.0;
  double dr_dc = 0.0;
};

struct ConstitutiveSet {
  VanGenuchtenParams vg;

  CapillaryModel pcap_model = CapillaryModel::Benchmark;
  /// Benchmark form p = (1 - theta)^exponent + gamma * c.
  double pcap_exponent = 2.5;
  double gamma = 0.1;
  /// Piecewise-linear table (theta ascending) for CapillaryModel::Tabulated.
  std::vector<double> table_theta;
  std::vector<double> table_pcap;

  TauModel tau_model = TauModel::Constant;
  double tau0 = 1.0;
  double tau_a = 0.0;
  double tau_b = 0.0;

  ReactionModel reaction_model = ReactionModel::Zero;
  double reaction_rate = 0.0;
  std::function<ReactionValue(double)> reaction_custom;

  Diffusion diffusion = Diffusion::scalar(1.0);

  /// Lower end of the admissible water-content band [theta_eps, 1].
  double theta_eps = 1e-6;

  /// Throws DomainError when a parameter leaves its validity range,
  /// including tau models that go negative somewhere on (0, 1].
  void validate() const;
};

struct CapillaryPressure {
  double p = 0.0;
  double dp_dtheta = 0.0;
  double dp_dc = 0.0;
};

CapillaryPressure capillary_pressure(double theta, double c, const ConstitutiveSet& set);

struct TauValue {
  double tau = 0.0;
  double dtau_dtheta = 0.0;
};

TauValue tau(double theta, const ConstitutiveSet& set);

ReactionValue reaction(double c, const ConstitutiveSet& set);

/// Clamps theta into [set.theta_eps, 1]; increments `events` when the value moved.
double clamp_theta(double theta, const ConstitutiveSet& set, long* events = nullptr);

}  // namespace dyncap
