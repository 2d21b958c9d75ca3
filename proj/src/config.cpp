#include "dyncap/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dyncap/error.hpp"

namespace dyncap {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return out;
}

double parse_plain(std::string_view text, std::string_view full) {
  text = trim(text);
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("not a number: '" + std::string(full) + "'");
  return v;
}

long parse_integer(std::string_view text) {
  text = trim(text);
  long v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("not an integer: '" + std::string(text) + "'");
  return v;
}

bool parse_bool(std::string_view text) {
  const std::string v = lower(trim(text));
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError("not a boolean: '" + v + "'");
}

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = std::min(text.find(',', pos), text.size());
    out.push_back(parse_number(text.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

template <class E>
E parse_choice(std::string_view text, std::initializer_list<std::pair<const char*, E>> options, const char* what) {
  const std::string v = lower(trim(text));
  for (const auto& [name, value] : options) {
    if (v == name) return value;
  }
  std::string msg = std::string("unknown ") + what + " '" + v + "' (expected";
  for (const auto& [name, value] : options) msg += std::string(" ") + name;
  throw ConfigError(msg + ")");
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
  return out;
}

const char* pcap_name(CapillaryModel m) {
  switch (m) {
    case CapillaryModel::Benchmark: return "benchmark";
    case CapillaryModel::VanGenuchten: return "van-genuchten";
    case CapillaryModel::Tabulated: return "tabulated";
  }
  return "?";
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto index = [](Index RunConfig::*field) {
      return [field](RunConfig& c, std::string_view v) { c.*field = static_cast<Index>(parse_integer(v)); };
    };
    // mesh
    t["mesh.x_min"] = [](RunConfig& c, std::string_view v) { c.domain.x_min = parse_number(v); };
    t["mesh.x_max"] = [](RunConfig& c, std::string_view v) { c.domain.x_max = parse_number(v); };
    t["mesh.y_min"] = [](RunConfig& c, std::string_view v) { c.domain.y_min = parse_number(v); };
    t["mesh.y_max"] = [](RunConfig& c, std::string_view v) { c.domain.y_max = parse_number(v); };
    t["mesh.nx"] = index(&RunConfig::nx);
    t["mesh.ny"] = index(&RunConfig::ny);
    t["mesh.element"] = [](RunConfig& c, std::string_view v) {
      c.element = parse_choice<ElementKind>(v, {{"quad", ElementKind::Q1}, {"triangle", ElementKind::P1Split}},
                                            "element");
    };
    // time
    t["time.T"] = [](RunConfig& c, std::string_view v) { c.T = parse_number(v); };
    t["time.dt"] = [](RunConfig& c, std::string_view v) { c.dt = parse_number(v); };
    t["time.policy"] = [](RunConfig& c, std::string_view v) {
      c.policy = parse_choice<FailurePolicy>(v, {{"abort", FailurePolicy::Abort}, {"halve", FailurePolicy::Halve}},
                                             "failure policy");
    };
    // scheme
    t["scheme.strategy"] = [](RunConfig& c, std::string_view v) { c.scheme.strategy = parse_strategy(v); };
    t["scheme.L1_psi"] = [](RunConfig& c, std::string_view v) { c.scheme.L1_psi = parse_number(v); };
    t["scheme.L1_theta"] = [](RunConfig& c, std::string_view v) { c.scheme.L1_theta = parse_number(v); };
    t["scheme.L2"] = [](RunConfig& c, std::string_view v) { c.scheme.L2 = parse_number(v); };
    t["scheme.L3"] = [](RunConfig& c, std::string_view v) { c.scheme.L3 = parse_number(v); };
    t["scheme.tol"] = [](RunConfig& c, std::string_view v) { c.scheme.tol = parse_number(v); };
    t["scheme.max_iter"] = [](RunConfig& c, std::string_view v) {
      c.scheme.max_iter = static_cast<int>(parse_integer(v));
    };
    t["scheme.mixed_switch"] = [](RunConfig& c, std::string_view v) {
      c.scheme.mixed_switch = static_cast<int>(parse_integer(v));
    };
    t["scheme.mixed_switch_tol"] = [](RunConfig& c, std::string_view v) {
      c.scheme.mixed_switch_tol = parse_number(v);
    };
    t["scheme.mixed_fallback"] = [](RunConfig& c, std::string_view v) { c.scheme.mixed_fallback = parse_bool(v); };
    t["scheme.flux_lag"] = [](RunConfig& c, std::string_view v) {
      c.scheme.flux_lag = parse_choice<FluxLag>(
          v, {{"previous-time", FluxLag::PreviousTime}, {"current-iterate", FluxLag::CurrentIterate}}, "flux_lag");
    };
    t["scheme.lscheme_form"] = [](RunConfig& c, std::string_view v) {
      c.scheme.lscheme_form = parse_choice<LSchemeForm>(
          v, {{"gradient", LSchemeForm::Gradient}, {"mass", LSchemeForm::Mass}}, "lscheme_form");
    };
    t["scheme.splitting_mode"] = [](RunConfig& c, std::string_view v) {
      c.scheme.splitting_mode = parse_choice<SplittingMode>(
          v, {{"merged", SplittingMode::Merged}, {"nested", SplittingMode::Nested}}, "splitting_mode");
    };
    t["scheme.norm"] = [](RunConfig& c, std::string_view v) {
      c.scheme.norm = parse_choice<NormKind>(v, {{"l2", NormKind::L2}, {"euclidean", NormKind::Euclidean}}, "norm");
    };
    t["scheme.divergence_limit"] = [](RunConfig& c, std::string_view v) {
      c.scheme.divergence_limit = parse_number(v);
    };
    t["scheme.mass_lumping"] = [](RunConfig& c, std::string_view v) { c.scheme.mass_lumping = parse_bool(v); };
    t["scheme.convection_form"] = [](RunConfig& c, std::string_view v) {
      c.scheme.convection_form = parse_choice<ConvectionForm>(
          v, {{"literal", ConvectionForm::Literal}, {"physical", ConvectionForm::Physical}}, "convection_form");
    };
    t["scheme.conductivity_branch"] = [](RunConfig& c, std::string_view v) {
      c.scheme.conductivity_branch = parse_choice<ConductivityBranch>(
          v, {{"iterate", ConductivityBranch::Iterate}, {"previous-time", ConductivityBranch::PreviousTime}},
          "conductivity_branch");
    };
    t["scheme.theta_bounds"] = [](RunConfig& c, std::string_view v) {
      c.scheme.theta_bounds = parse_choice<ThetaBounds>(
          v, {{"active-set", ThetaBounds::ActiveSet}, {"clamp", ThetaBounds::Clamp}}, "theta_bounds");
    };
    // constitutive
    t["constitutive.Ks"] = [](RunConfig& c, std::string_view v) { c.constitutive.vg.Ks = parse_number(v); };
    t["constitutive.n"] = [](RunConfig& c, std::string_view v) {
      c.constitutive.vg.n = parse_number(v);
      c.constitutive.vg.m = 1.0 - 1.0 / c.constitutive.vg.n;
    };
    t["constitutive.m"] = [](RunConfig& c, std::string_view v) { c.constitutive.vg.m = parse_number(v); };
    t["constitutive.alpha"] = [](RunConfig& c, std::string_view v) { c.constitutive.vg.alpha = parse_number(v); };
    t["constitutive.pcap_model"] = [](RunConfig& c, std::string_view v) {
      c.constitutive.pcap_model = parse_choice<CapillaryModel>(v,
                                                               {{"benchmark", CapillaryModel::Benchmark},
                                                                {"van-genuchten", CapillaryModel::VanGenuchten},
                                                                {"tabulated", CapillaryModel::Tabulated}},
                                                               "pcap_model");
    };
    t["constitutive.pcap_exponent"] = [](RunConfig& c, std::string_view v) {
      c.constitutive.pcap_exponent = parse_number(v);
    };
    t["constitutive.gamma"] = [](RunConfig& c, std::string_view v) { c.constitutive.gamma = parse_number(v); };
    t["constitutive.table_theta"] = [](RunConfig& c, std::string_view v) { c.constitutive.table_theta = parse_list(v); };
    t["constitutive.table_pcap"] = [](RunConfig& c, std::string_view v) { c.constitutive.table_pcap = parse_list(v); };
    t["constitutive.tau_model"] = [](RunConfig& c, std::string_view v) {
      c.constitutive.tau_model =
          parse_choice<TauModel>(v, {{"constant", TauModel::Constant}, {"affine", TauModel::Affine}}, "tau_model");
    };
    t["constitutive.tau0"] = [](RunConfig& c, std::string_view v) { c.constitutive.tau0 = parse_number(v); };
    t["constitutive.tau_a"] = [](RunConfig& c, std::string_view v) { c.constitutive.tau_a = parse_number(v); };
    t["constitutive.tau_b"] = [](RunConfig& c, std::string_view v) { c.constitutive.tau_b = parse_number(v); };
    t["constitutive.reaction_model"] = [](RunConfig& c, std::string_view v) {
      c.constitutive.reaction_model = parse_choice<ReactionModel>(
          v, {{"zero", ReactionModel::Zero}, {"linear", ReactionModel::Linear}}, "reaction_model");
    };
    t["constitutive.reaction_rate"] = [](RunConfig& c, std::string_view v) {
      c.constitutive.reaction_rate = parse_number(v);
    };
    t["constitutive.D"] = [](RunConfig& c, std::string_view v) {
      c.constitutive.diffusion = Diffusion::scalar(parse_number(v));
    };
    t["constitutive.D_xx"] = [](RunConfig& c, std::string_view v) { c.constitutive.diffusion.xx = parse_number(v); };
    t["constitutive.D_xy"] = [](RunConfig& c, std::string_view v) { c.constitutive.diffusion.xy = parse_number(v); };
    t["constitutive.D_yx"] = [](RunConfig& c, std::string_view v) { c.constitutive.diffusion.yx = parse_number(v); };
    t["constitutive.D_yy"] = [](RunConfig& c, std::string_view v) { c.constitutive.diffusion.yy = parse_number(v); };
    t["constitutive.theta_eps"] = [](RunConfig& c, std::string_view v) { c.constitutive.theta_eps = parse_number(v); };
    // output
    t["output.directory"] = [](RunConfig& c, std::string_view v) { c.output_dir = std::string(trim(v)); };
    t["output.snapshot_every"] = [](RunConfig& c, std::string_view v) {
      c.snapshot_every = static_cast<int>(parse_integer(v));
    };
    t["output.write_vtk"] = [](RunConfig& c, std::string_view v) { c.write_vtk = parse_bool(v); };
    return t;
  }();
  return table;
}

}  // namespace

double parse_number(std::string_view text) {
  const std::string_view t = trim(text);
  const auto slash = t.find('/');
  if (slash == std::string_view::npos) return parse_plain(t, t);
  const double num = parse_plain(t.substr(0, slash), t);
  const double den = parse_plain(t.substr(slash + 1), t);
  if (den == 0.0) throw ConfigError("division by zero in '" + std::string(t) + "'");
  return num / den;
}

Strategy parse_strategy(std::string_view name) {
  return parse_choice<Strategy>(name,
                                {{"mon-newton", Strategy::MonNewton},
                                 {"mon-ls", Strategy::MonLScheme},
                                 {"nonlins-newton", Strategy::SplitNewton},
                                 {"nonlins-ls", Strategy::SplitLScheme},
                                 {"mon-mixed", Strategy::MonMixed},
                                 {"nonlins-mixed", Strategy::SplitMixed}},
                                "strategy");
}

RunConfig recharge_preset() {
  RunConfig c;
  c.preset = std::string(kRechargePreset);
  c.constitutive.vg = VanGenuchtenParams::make(1.0, 2.0, 1.0);
  c.constitutive.pcap_model = CapillaryModel::Benchmark;
  c.constitutive.pcap_exponent = 2.5;
  c.constitutive.gamma = 0.1;
  c.constitutive.tau_model = TauModel::Constant;
  c.constitutive.tau0 = 1.0;
  c.constitutive.reaction_model = ReactionModel::Zero;
  c.constitutive.diffusion = Diffusion::scalar(1.0);
  return c;
}

void RunConfig::validate() const {
  if (!preset.empty() && preset != kRechargePreset) throw ConfigError("unknown preset '" + preset + "'");
  try {
    domain.validate();
    constitutive.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (nx < 1 || ny < 1) throw ConfigError("nx and ny must be >= 1");
  (void)TimeGrid::make(T, dt);
  scheme.validate();
  if (snapshot_every < 0) throw ConfigError("snapshot_every must be >= 0");
  if (output_dir.empty()) throw ConfigError("output directory must not be empty");
}

bool RunConfig::operator==(const RunConfig& o) const {
  const auto& a = constitutive;
  const auto& b = o.constitutive;
  return preset == o.preset && domain == o.domain && nx == o.nx && ny == o.ny && element == o.element &&
         T == o.T && dt == o.dt && policy == o.policy && scheme == o.scheme && output_dir == o.output_dir &&
         snapshot_every == o.snapshot_every && write_vtk == o.write_vtk && a.vg.Ks == b.vg.Ks &&
         a.vg.n == b.vg.n && a.vg.alpha == b.vg.alpha && a.vg.m == b.vg.m && a.pcap_model == b.pcap_model &&
         a.pcap_exponent == b.pcap_exponent && a.gamma == b.gamma && a.table_theta == b.table_theta &&
         a.table_pcap == b.table_pcap && a.tau_model == b.tau_model && a.tau0 == b.tau0 && a.tau_a == b.tau_a &&
         a.tau_b == b.tau_b && a.reaction_model == b.reaction_model && a.reaction_rate == b.reaction_rate &&
         a.diffusion.xx == b.diffusion.xx && a.diffusion.xy == b.diffusion.xy && a.diffusion.yx == b.diffusion.yx &&
         a.diffusion.yy == b.diffusion.yy && a.theta_eps == b.theta_eps;
}

RunConfig parse_config(std::string_view text) {
  struct Entry {
    std::string key;
    std::string value;
    int line;
  };
  std::vector<Entry> entries;
  std::string section;
  std::string preset;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::set<std::string> known{"mesh", "time", "scheme", "constitutive", "output"};
      if (!known.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (section.empty() && key == "preset") {
      preset = value;
      continue;
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (!setters().count(full)) throw ConfigError(where + "unknown key '" + full + "'");
    entries.push_back({full, value, line_no});
  }

  RunConfig c;
  if (!preset.empty()) {
    if (preset != kRechargePreset) throw ConfigError("unknown preset '" + preset + "'");
    c = recharge_preset();
  } else {
    c = recharge_preset();
    c.preset.clear();
    for (const char* required : {"mesh.nx", "mesh.ny", "time.T", "time.dt", "scheme.strategy"}) {
      const bool found = std::any_of(entries.begin(), entries.end(), [&](const Entry& e) { return e.key == required; });
      if (!found) throw ConfigError(std::string("missing required key '") + required + "'");
    }
  }
  // m defaults to 1 - 1/n; an explicit m wins regardless of line order.
  std::stable_partition(entries.begin(), entries.end(), [](const Entry& e) { return e.key != "constitutive.m"; });
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.key).second) {
      throw ConfigError("line " + std::to_string(e.line) + ": duplicate key '" + e.key + "'");
    }
    try {
      setters().at(e.key)(c, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError("line " + std::to_string(e.line) + ": " + e.key + ": " + err.what());
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const RunConfig& c) {
  const auto& s = c.scheme;
  const auto& k = c.constitutive;
  std::ostringstream o;
  if (!c.preset.empty()) o << "preset = " << c.preset << "\n";
  o << "\n[mesh]\n"
    << "x_min = " << num(c.domain.x_min) << "\n"
    << "x_max = " << num(c.domain.x_max) << "\n"
    << "y_min = " << num(c.domain.y_min) << "\n"
    << "y_max = " << num(c.domain.y_max) << "\n"
    << "nx = " << c.nx << "\n"
    << "ny = " << c.ny << "\n"
    << "element = " << (c.element == ElementKind::Q1 ? "quad" : "triangle") << "\n";
  o << "\n[time]\n"
    << "T = " << num(c.T) << "\n"
    << "dt = " << num(c.dt) << "\n"
    << "policy = " << (c.policy == FailurePolicy::Abort ? "abort" : "halve") << "\n";
  o << "\n[scheme]\n"
    << "strategy = " << to_string(s.strategy) << "\n"
    << "L1_psi = " << num(s.L1_psi) << "\n"
    << "L1_theta = " << num(s.L1_theta) << "\n"
    << "L2 = " << num(s.L2) << "\n"
    << "L3 = " << num(s.L3) << "\n"
    << "tol = " << num(s.tol) << "\n"
    << "max_iter = " << s.max_iter << "\n"
    << "mixed_switch = " << s.mixed_switch << "\n"
    << "mixed_switch_tol = " << num(s.mixed_switch_tol) << "\n"
    << "mixed_fallback = " << (s.mixed_fallback ? "true" : "false") << "\n"
    << "flux_lag = " << to_string(s.flux_lag) << "\n"
    << "lscheme_form = " << to_string(s.lscheme_form) << "\n"
    << "splitting_mode = " << to_string(s.splitting_mode) << "\n"
    << "norm = " << to_string(s.norm) << "\n"
    << "divergence_limit = " << num(s.divergence_limit) << "\n"
    << "mass_lumping = " << (s.mass_lumping ? "true" : "false") << "\n"
    << "convection_form = " << to_string(s.convection_form) << "\n"
    << "conductivity_branch = " << to_string(s.conductivity_branch) << "\n"
    << "theta_bounds = " << to_string(s.theta_bounds) << "\n";
  o << "\n[constitutive]\n"
    << "Ks = " << num(k.vg.Ks) << "\n"
    << "n = " << num(k.vg.n) << "\n"
    << "m = " << num(k.vg.m) << "\n"
    << "alpha = " << num(k.vg.alpha) << "\n"
    << "pcap_model = " << pcap_name(k.pcap_model) << "\n"
    << "pcap_exponent = " << num(k.pcap_exponent) << "\n"
    << "gamma = " << num(k.gamma) << "\n";
  if (!k.table_theta.empty()) o << "table_theta = " << list(k.table_theta) << "\n";
  if (!k.table_pcap.empty()) o << "table_pcap = " << list(k.table_pcap) << "\n";
  o << "tau_model = " << (k.tau_model == TauModel::Constant ? "constant" : "affine") << "\n"
    << "tau0 = " << num(k.tau0) << "\n"
    << "tau_a = " << num(k.tau_a) << "\n"
    << "tau_b = " << num(k.tau_b) << "\n"
    << "reaction_model = " << (k.reaction_model == ReactionModel::Linear ? "linear" : "zero") << "\n"
    << "reaction_rate = " << num(k.reaction_rate) << "\n"
    << "D_xx = " << num(k.diffusion.xx) << "\n"
    << "D_xy = " << num(k.diffusion.xy) << "\n"
    << "D_yx = " << num(k.diffusion.yx) << "\n"
    << "D_yy = " << num(k.diffusion.yy) << "\n"
    << "theta_eps = " << num(k.theta_eps) << "\n";
  o << "\n[output]\n"
    << "directory = " << c.output_dir << "\n"
    << "snapshot_every = " << c.snapshot_every << "\n"
    << "write_vtk = " << (c.write_vtk ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace dyncap
