#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "fedshield/errors.hpp"

namespace {

std::vector<std::string> split_values(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : csv) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fedshield::cli;

  CLI::App app{"Federated learning under label-flipping poisoning with Paillier-encrypted "
               "aggregation and test-set / KL-divergence defenses"};
  app.require_subcommand(1);

  KeygenOptions keygen;
  auto* keygen_cmd = app.add_subcommand("keygen", "Generate a Paillier key pair");
  keygen_cmd->add_option("--bits", keygen.bits, "Modulus bit length")->capture_default_str();
  keygen_cmd->add_option("--out", keygen.out_dir, "Output directory")->capture_default_str();
  keygen_cmd->add_option("--seed", keygen.seed, "Random seed")->capture_default_str();

  RunOptions run;
  auto* run_cmd = app.add_subcommand(
      "run", "Run one experiment; extra --key value pairs override the config");
  run_cmd->add_option("config", run.config_path, "Experiment TOML file")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out_dir, "Output directory")->required();
  run_cmd->allow_extras();

  SweepOptions sweep;
  std::string values;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Run one experiment per value of gamma, beta or theta");
  sweep_cmd->add_option("config", sweep.run.config_path, "Experiment TOML file")
      ->required()
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out", sweep.run.out_dir, "Output directory")->required();
  sweep_cmd->add_option("--axis", sweep.axis, "gamma | beta | theta")
      ->required()
      ->check(CLI::IsMember({"gamma", "beta", "theta"}));
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required();
  sweep_cmd->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*keygen_cmd) return cmd_keygen(keygen, std::cout, std::cerr);
    if (*run_cmd) {
      run.overrides = parse_overrides(run_cmd->remaining());
      return cmd_run(run, std::cout, std::cerr);
    }
    if (*sweep_cmd) {
      sweep.run.overrides = parse_overrides(sweep_cmd->remaining());
      sweep.values = split_values(values);
      return cmd_sweep(sweep, std::cout, std::cerr);
    }
  } catch (const fedshield::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
