#pragma once

#include <string>
#include <string_view>

#include "dyncap/constitutive.hpp"
#include "dyncap/driver.hpp"
#include "dyncap/fem.hpp"
#include "dyncap/mesh.hpp"
#include "dyncap/schemes.hpp"

namespace dyncap {

inline constexpr std::string_view kRechargePreset = "haverkamp-recharge";

struct RunConfig {
  std::string preset;  // empty or "haverkamp-recharge"
  Domain2D domain;
  Index nx = 20;
  Index ny = 30;
  ElementKind element = ElementKind::Q1;
  double T = 3.0;
  double dt = 0.1;
  FailurePolicy policy = FailurePolicy::Abort;
  SchemeConfig scheme;
  ConstitutiveSet constitutive;
  std::string output_dir = "output";
  int snapshot_every = 5;
  bool write_vtk = true;

  void validate() const;
  /// Field-by-field comparison (the custom reaction callback is not compared).
  bool operator==(const RunConfig& other) const;
};

/// The recharge benchmark: Ks = 1, n = 2, alpha = 1, tau = 1, D = 1, R = 0,
/// p = (1 - theta)^2.5 + 0.1 c, L1 = L2 = 0.01, L3 = 0.1, tol 1e-6,
/// T = 3, dt = 1/10, dx = 1/10, MON-LS.
RunConfig recharge_preset();

/// Line-oriented `key = value` text with [mesh], [time], [scheme],
/// [constitutive] and [output] sections and `#` comments. Numbers may be
/// written as fractions (`dt = 1/50`). Unknown keys are errors.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
/// Renders every key; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& config);

Strategy parse_strategy(std::string_view name);
/// Parses "0.1", "1e-2" or "1/10".
double parse_number(std::string_view text);

}  // namespace dyncap
