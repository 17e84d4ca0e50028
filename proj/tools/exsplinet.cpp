#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "exsplinet/experiment.hpp"

namespace {

void add_common(CLI::App* cmd, std::string& out, std::uint64_t& seed, int& threads, bool& no_timestamp) {
  cmd->add_option("--out", out, "Output directory");
  cmd->add_option("--seed", seed, "Override the config seed");
  cmd->add_option("--threads", threads, "Worker thread cap (0 = runtime default)")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--no-timestamp", no_timestamp, "Omit wall-clock fields from reports");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ExSpliNet spline networks: train, solve PINN problems, interpret, dump bases"};
  app.require_subcommand(1);

  std::string config, out, checkpoint, dataset;
  std::uint64_t seed = 0;
  int threads = 0;
  bool no_timestamp = false;
  double threshold = 1e-2;
  int basis_n = 0, basis_p = 0, samples = 1000;

  CLI::App* train = app.add_subcommand("train", "Train on a dataset described by a config");
  train->add_option("--config", config, "Experiment config (JSON)")->required();
  add_common(train, out, seed, threads, no_timestamp);

  CLI::App* pinn = app.add_subcommand("pinn", "Solve a Poisson problem described by a config");
  pinn->add_option("--config", config, "Experiment config (JSON)")->required();
  add_common(pinn, out, seed, threads, no_timestamp);

  CLI::App* interpret = app.add_subcommand("interpret", "Extract rules and feature summaries from a checkpoint");
  interpret->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  interpret->add_option("--data", dataset, "CSV dataset to explain sample by sample");
  interpret->add_option("--threshold", threshold, "Drop inner coefficients below this value")->capture_default_str();
  add_common(interpret, out, seed, threads, no_timestamp);

  CLI::App* basis = app.add_subcommand("basis", "Write B-spline basis values on a uniform grid");
  basis->add_option("-N,--count", basis_n, "Number of basis functions")->required();
  basis->add_option("-p,--degree", basis_p, "Spline degree")->required();
  basis->add_option("--samples", samples, "Grid points")->capture_default_str();
  add_common(basis, out, seed, threads, no_timestamp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  exsplinet::RunOptions options;
  if (!out.empty()) options.out = std::filesystem::path(out);
  for (CLI::App* cmd : {train, pinn, interpret, basis}) {
    if (cmd->parsed() && cmd->count("--seed") > 0) options.seed = seed;
  }
  options.threads = threads;
  options.timestamp = !no_timestamp;

  if (train->parsed()) return exsplinet::cmd_train(config, options, std::cout, std::cerr);
  if (pinn->parsed()) return exsplinet::cmd_pinn(config, options, std::cout, std::cerr);
  if (interpret->parsed()) {
    std::optional<std::filesystem::path> data;
    if (!dataset.empty()) data = dataset;
    return exsplinet::cmd_interpret(checkpoint, data, threshold, options, std::cout, std::cerr);
  }
  return exsplinet::cmd_basis(basis_n, basis_p, samples, options, std::cout, std::cerr);
}
