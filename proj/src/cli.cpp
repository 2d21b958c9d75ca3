#include "dyncap/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

#include "dyncap/config.hpp"
#include "dyncap/error.hpp"
#include "dyncap/harness.hpp"
#include "dyncap/output.hpp"
#include "dyncap/verification.hpp"

namespace dyncap {

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = std::min(text.find(',', pos), text.size());
    std::string item = text.substr(pos, next - pos);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
    pos = next + 1;
  }
  return out;
}

std::vector<double> number_list(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) out.push_back(parse_number(s));
  if (out.empty()) throw ConfigError(std::string("--") + what + " needs at least one value");
  return out;
}

int run_command(const std::string& path, const std::string& output, bool quiet) {
  RunConfig cfg = load_config(path);
  if (!output.empty()) cfg.output_dir = output;
  const RunReport report = run_config(cfg);
  if (!quiet) std::cout << run_summary(report, cfg.scheme.strategy);
  return report.converged ? 0 : 2;
}

int compare_command(const std::string& path, const std::string& strategies, const std::string& dxs,
                    const std::string& dts, const std::string& output, int jobs) {
  RunConfig cfg = load_config(path);
  ComparisonPlan plan;
  for (const auto& s : split_list(strategies)) plan.strategies.push_back(parse_strategy(s));
  if (plan.strategies.empty()) throw ConfigError("--strategies needs at least one strategy");
  plan.dxs = number_list(dxs, "dx");
  plan.dts = number_list(dts, "dt");
  plan.output_dir = output.empty() ? cfg.output_dir : output;
  plan.jobs = jobs;
  const auto rows = run_comparison(cfg, plan);
  std::cout << comparison_csv(rows);
  const bool all = std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.converged; });
  return all ? 0 : 2;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Coupled flow and reactive transport with dynamic capillarity"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run one simulation");
  run->add_option("config", config_path, "Configuration file")->required();
  run->add_option("--output", output, "Override the output directory");
  run->add_flag("--quiet", quiet, "Do not print the summary");

  std::string strategies = "MON-Newton,MON-LS,MON-Mixed,NonLinS-LS";
  std::string dxs = "1/10";
  std::string dts = "1/10";
  int jobs = 1;
  auto* compare = app.add_subcommand("compare", "Run a strategy x dt x dx comparison");
  compare->add_option("config", config_path, "Base configuration file")->required();
  compare->add_option("--strategies", strategies, "Comma-separated strategy names");
  compare->add_option("--dx", dxs, "Comma-separated mesh spacings, e.g. 1/10,1/20");
  compare->add_option("--dt", dts, "Comma-separated time steps, e.g. 1/10,1/50");
  compare->add_option("--output", output, "Output directory (default: the config's)");
  compare->add_option("--jobs", jobs, "Cells run concurrently")->check(CLI::PositiveNumber);

  bool quick = false;
  auto* verify = app.add_subcommand("verify", "Run the verification suite");
  verify->add_flag("--quick", quick, "Coarser meshes for the convergence studies");

  std::string preset_name;
  auto* preset = app.add_subcommand("print-preset", "Print a preset configuration");
  preset->add_option("name", preset_name, "Preset name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) return run_command(config_path, output, quiet);
    if (*compare) return compare_command(config_path, strategies, dxs, dts, output, jobs);
    if (*verify) {
      const auto checks = run_verification_suite(std::cout, quick);
      const bool ok = std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
      return ok ? 0 : 2;
    }
    if (*preset) {
      if (preset_name != kRechargePreset) throw ConfigError("unknown preset '" + preset_name + "'");
      std::cout << render_config(recharge_preset());
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace dyncap
