#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ltcil/errors.hpp"
#include "ltcil/harness.hpp"

namespace {

std::vector<double> parse_value_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-tailed class-incremental learning harness"};
  app.require_subcommand(1);

  std::string config_path;
  bool overwrite = false;
  std::string axis;
  std::string values_csv;

  auto* run_cmd = app.add_subcommand("run", "Run an experiment over all seeds");
  run_cmd->add_option("--config", config_path, "JSON config file")->required();
  run_cmd->add_flag("--overwrite", overwrite, "Replace an existing output directory");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one experiment per axis value");
  sweep_cmd->add_option("--config", config_path, "JSON config file")->required();
  sweep_cmd->add_option("--axis", axis, "rho | memory_budget | num_tasks")->required();
  sweep_cmd->add_option("--values", values_csv, "comma-separated values")->required();
  sweep_cmd->add_flag("--overwrite", overwrite, "Replace existing output directories");

  auto* manifest_cmd =
      app.add_subcommand("manifest", "Print the scenario manifest for the first seed");
  manifest_cmd->add_option("--config", config_path, "JSON config file")->required();

  auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a config");
  validate_cmd->add_option("--config", config_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ltcil::ExperimentConfig cfg = ltcil::parse_config(config_path);
    if (run_cmd->parsed()) {
      return ltcil::run_experiment(cfg, overwrite);
    }
    if (sweep_cmd->parsed()) {
      return ltcil::sweep(cfg, ltcil::sweep_axis_from_string(axis),
                          parse_value_list(values_csv), overwrite);
    }
    if (manifest_cmd->parsed()) {
      std::cout << ltcil::make_manifest(cfg) << "\n";
      return 0;
    }
    if (validate_cmd->parsed()) {
      std::cout << "config ok\n";
      return 0;
    }
  } catch (const ltcil::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ltcil::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
