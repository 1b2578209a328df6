// spectral-cutoff: run experiments, list the catalog, certify result files.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "spectral_cutoff/experiments.hpp"

namespace sc = spectral_cutoff;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCertification = 3;

int cmd_run(const std::string& config_path) {
  sc::ExperimentConfig cfg;
  try {
    cfg = sc::load_config(config_path);
  } catch (const sc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const sc::RunSummary s = sc::run_experiment(cfg);
  for (const auto& row : s.rows) {
    std::cout << row.experiment;
    for (const auto& [key, cell] : row.params) std::cout << ' ' << key << '=' << cell;
    std::cout << "  value=" << sc::format_number(row.value) << " status=" << row.status << '\n';
    if (!row.message.empty()) std::cerr << "  " << row.message << '\n';
  }
  std::cout << "wrote " << s.paths.csv.string() << " and " << s.paths.json.string() << '\n';
  if (s.failures > 0) {
    std::cerr << s.failures << " row(s) failed certification\n";
    return kExitCertification;
  }
  return kExitOk;
}

int cmd_list() {
  for (const auto& e : sc::experiment_catalog())
    std::cout << e.name << "\n    " << e.description << "\n    anchor: " << e.anchor << '\n';
  return kExitOk;
}

int cmd_certify(const std::string& csv_path) {
  sc::FileCertification c;
  try {
    c = sc::certify_results(csv_path);
  } catch (const sc::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  for (const auto& f : c.failures) std::cerr << "FAIL " << f << '\n';
  std::cout << c.rows << " row(s) checked, " << c.failures.size() << " failure(s)\n";
  return c.ok() ? kExitOk : kExitCertification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral distances under Dirac operator truncation"};
  app.set_version_flag("--version", std::string(sc::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment described by a JSON config");
  run->add_option("--config", config_path, "path to the experiment config")->required();

  auto* list = app.add_subcommand("list", "list the available experiments");

  std::string rows_path;
  auto* cert = app.add_subcommand("certify", "re-certify every row of a results CSV");
  cert->add_option("--rows", rows_path, "results CSV (its .json metadata must sit next to it)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*list) return cmd_list();
    if (*cert) return cmd_certify(rows_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
