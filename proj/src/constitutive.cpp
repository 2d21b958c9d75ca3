#include "dyncap/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dyncap/error.hpp"

namespace dyncap {

namespace {

void require_theta(double theta, const char* what) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw DomainError(std::string(what) + ": water content " + std::to_string(theta) +
                      " outside (0, 1]");
  }
}

// 1 - (1 - theta^(1/m))^m without cancellation for small theta.
double mualem_bracket(double theta, double m) {
  const double s = std::pow(theta, 1.0 / m);
  if (s >= 1.0) return 1.0;
  return -std::expm1(m * std::log1p(-s));
}

double unsaturated_conductivity(double theta, const VanGenuchtenParams& vg) {
  return vg.Ks * std::sqrt(theta) * mualem_bracket(theta, vg.m);
}

double unsaturated_conductivity_slope(double theta, const VanGenuchtenParams& vg) {
  const double m = vg.m;
  const double s = std::pow(theta, 1.0 / m);
  const double first = 0.5 / std::sqrt(theta) * mualem_bracket(theta, m);
  const double second = std::sqrt(theta) * std::pow(theta, 1.0 / m - 1.0) * std::pow(1.0 - s, m - 1.0);
  return vg.Ks * (first + second);
}

double vg_pcap(double theta, const ConstitutiveSet& set) {
  const auto& vg = set.vg;
  const double s = std::pow(theta, -1.0 / vg.m) - 1.0;
  return std::pow(std::max(s, 0.0), 1.0 / vg.n) / vg.alpha;
}

double vg_pcap_slope(double theta, const ConstitutiveSet& set) {
  const auto& vg = set.vg;
  const double s = std::pow(theta, -1.0 / vg.m) - 1.0;
  return (1.0 / vg.alpha) * (1.0 / vg.n) * std::pow(s, 1.0 / vg.n - 1.0) * (-1.0 / vg.m) *
         std::pow(theta, -1.0 / vg.m - 1.0);
}

}  // namespace

VanGenuchtenParams VanGenuchtenParams::make(double Ks, double n, double alpha) {
  VanGenuchtenParams vg{Ks, n, alpha, 1.0 - 1.0 / n};
  vg.validate();
  return vg;
}

void VanGenuchtenParams::validate() const {
  if (!(Ks > 0.0)) throw DomainError("van Genuchten: Ks must be > 0");
  if (!(n > 1.0)) throw DomainError("van Genuchten: n must be > 1");
  if (!(alpha > 0.0)) throw DomainError("van Genuchten: alpha must be > 0");
  if (!(m > 0.0 && m < 1.0)) throw DomainError("van Genuchten: m must lie in (0, 1)");
}

double conductivity(double theta, double psi, const VanGenuchtenParams& vg) {
  require_theta(theta, "conductivity");
  if (psi > 0.0) return vg.Ks;
  return unsaturated_conductivity(theta, vg);
}

ConductivityDerivatives conductivity_derivatives(double theta, double psi, const VanGenuchtenParams& vg) {
  require_theta(theta, "conductivity_derivatives");
  if (psi > 0.0) return {0.0, 0.0};
  if (theta > 1.0 - kSaturationDerivativeBand) {
    const double lo = 1.0 - kSaturationDerivativeBand;
    return {(vg.Ks - unsaturated_conductivity(lo, vg)) / kSaturationDerivativeBand, 0.0};
  }
  return {unsaturated_conductivity_slope(theta, vg), 0.0};
}

void ConstitutiveSet::validate() const {
  vg.validate();
  if (!(theta_eps > 0.0 && theta_eps < 1.0)) throw DomainError("theta_eps must lie in (0, 1)");
  switch (pcap_model) {
    case CapillaryModel::Benchmark:
      if (!(pcap_exponent >= 1.0)) throw DomainError("capillary exponent must be >= 1");
      break;
    case CapillaryModel::VanGenuchten:
      break;
    case CapillaryModel::Tabulated:
      if (table_theta.size() < 2 || table_theta.size() != table_pcap.size()) {
        throw DomainError("tabulated capillary pressure needs >= 2 matching (theta, p) pairs");
      }
      for (std::size_t i = 1; i < table_theta.size(); ++i) {
        if (!(table_theta[i] > table_theta[i - 1])) throw DomainError("table theta must be increasing");
      }
      break;
  }
  switch (tau_model) {
    case TauModel::Constant:
      if (!(tau0 >= 0.0)) throw DomainError("tau0 must be >= 0");
      break;
    case TauModel::Affine:
      // a + b*theta on (0, 1] has infimum min(a, a + b).
      if (!(tau_a >= 0.0 && tau_a + tau_b >= 0.0)) {
        throw DomainError("affine tau = a + b*theta goes negative on (0, 1]");
      }
      break;
  }
  if (reaction_model == ReactionModel::Custom && !reaction_custom) {
    throw DomainError("custom reaction model selected without a function");
  }
  if (!(diffusion.xx >= 0.0 && diffusion.yy >= 0.0)) throw DomainError("diffusion must be non-negative");
}

CapillaryPressure capillary_pressure(double theta, double c, const ConstitutiveSet& set) {
  require_theta(theta, "capillary_pressure");
  switch (set.pcap_model) {
    case CapillaryModel::Benchmark: {
      const double e = set.pcap_exponent;
      const double w = 1.0 - theta;
      return {std::pow(w, e) + set.gamma * c, -e * std::pow(w, e - 1.0), set.gamma};
    }
    case CapillaryModel::VanGenuchten: {
      double slope = 0.0;
      if (theta > 1.0 - kSaturationDerivativeBand) {
        const double lo = 1.0 - kSaturationDerivativeBand;
        slope = (vg_pcap(1.0, set) - vg_pcap(lo, set)) / kSaturationDerivativeBand;
      } else {
        slope = vg_pcap_slope(theta, set);
      }
      return {vg_pcap(theta, set), slope, 0.0};
    }
    case CapillaryModel::Tabulated: {
      const auto& xs = set.table_theta;
      const auto& ys = set.table_pcap;
      auto it = std::upper_bound(xs.begin(), xs.end(), theta);
      std::size_t k = static_cast<std::size_t>(std::distance(xs.begin(), it));
      k = std::clamp<std::size_t>(k, 1, xs.size() - 1);
      const double slope = (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]);
      const double x = std::clamp(theta, xs.front(), xs.back());
      return {ys[k - 1] + slope * (x - xs[k - 1]), slope, 0.0};
    }
  }
  return {};
}

TauValue tau(double theta, const ConstitutiveSet& set) {
  require_theta(theta, "tau");
  if (set.tau_model == TauModel::Constant) return {set.tau0, 0.0};
  return {set.tau_a + set.tau_b * theta, set.tau_b};
}

ReactionValue reaction(double c, const ConstitutiveSet& set) {
  switch (set.reaction_model) {
    case ReactionModel::Zero: return {0.0, 0.0};
    case ReactionModel::Linear: return {set.reaction_rate * c, set.reaction_rate};
    case ReactionModel::Custom: return set.reaction_custom(c);
  }
  return {};
}

double clamp_theta(double theta, const ConstitutiveSet& set, long* events) {
  const double clamped = std::clamp(theta, set.theta_eps, 1.0);
  if (events && clamped != theta) ++*events;
  return clamped;
}

}  // namespace dyncap
