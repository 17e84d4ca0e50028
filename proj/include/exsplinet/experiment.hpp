#pragma once

// Experiment documents and the commands behind the command-line tool.
//
// A config is a JSON object with the keys
//   name, seed, output, model, train, data   (supervised training)
//   name, seed, output, model, pinn          (differential problems)
// Unknown keys anywhere are rejected. docs/config.md lists every field.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "exsplinet/dataio.hpp"
#include "exsplinet/error.hpp"
#include "exsplinet/model.hpp"
#include "exsplinet/pinn.hpp"
#include "exsplinet/training.hpp"

namespace exsplinet {

struct ModelSpec {
  int D = 0;  // 0: taken from the data
  int O = 0;
  int T = 1;
  int L = 1;
  std::vector<int> N;
  std::vector<int> M;
  std::vector<int> p;
  std::vector<int> q;
  std::string init = "random";  // random | identity

  ModelConfig resolve(int data_dim, int data_outputs) const;
};

struct CsvSource {
  std::filesystem::path path;
  CsvSchema schema;
};

struct IdxSource {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  std::size_t train_limit = 0;  // 0: all
  std::size_t test_limit = 0;
};

struct SyntheticSource {
  std::string name;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

struct DataSpec {
  std::optional<CsvSource> csv;
  std::optional<IdxSource> idx;
  std::optional<SyntheticSource> synthetic;
  double test_fraction = 0.2;  // csv only
  bool stratified = true;
  bool minmax = false;
};

struct PinnSpec {
  std::string problem;
  std::size_t interior = 0;
  std::size_t boundary = 0;
  EggDomain egg;
  std::size_t eval_min_inside = 900;
  PinnConfig train;
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 1;
  std::filesystem::path output = "out";
  std::filesystem::path source;  // the config file, when loaded from disk
  ModelSpec model;
  TrainConfig train;
  DataSpec data;
  std::optional<PinnSpec> pinn;

  bool is_pinn() const { return pinn.has_value(); }
};

// Relative dataset paths are tried under $EXSPLINET_DATA_DIR, then next to the
// config, then in a data/ directory beside the config's directory.
std::filesystem::path resolve_data_path(const std::string& path, const std::filesystem::path& config_dir);

ExperimentConfig parse_experiment(const std::string& text, const std::filesystem::path& config_dir = {},
                                  const std::string& source = "<string>");
ExperimentConfig load_experiment(const std::filesystem::path& path);

struct PreparedData {
  Dataset train;
  Dataset test;
  std::optional<MinMaxRecord> minmax;
};

PreparedData prepare_data(const DataSpec& spec, std::uint64_t seed);
ExSpliNetModel build_model(const ModelSpec& spec, int data_dim, int data_outputs, std::uint64_t seed);

struct TrainOutcome {
  ExSpliNetModel model;
  TrainReport report;
  PreparedData data;
};

TrainOutcome run_training(const ExperimentConfig& config, std::uint64_t seed, const EpochCallback& on_epoch = {});

struct PinnOutcome {
  ExSpliNetModel model;
  PinnReport report;
  DifferentialProblem problem;
  CollocationSet collocation;
  std::vector<double> grid;
};

// Degrees are checked before any sampling or training.
PinnOutcome run_pinn(const ExperimentConfig& config, std::uint64_t seed, const PinnCallback& on_epoch = {});

struct RunOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0: runtime default
  bool timestamp = true;
};

// Each command returns a process exit code: 0 success, 1 numerical or
// training failure, 2 usage or config error. Diagnostics go to err.
int cmd_train(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& log,
              std::ostream& err);
int cmd_pinn(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& log,
             std::ostream& err);
int cmd_interpret(const std::filesystem::path& checkpoint, const std::optional<std::filesystem::path>& dataset,
                  double threshold, const RunOptions& options, std::ostream& log, std::ostream& err);
int cmd_basis(int N, int p, int samples, const RunOptions& options, std::ostream& log, std::ostream& err);

int exit_code(ErrorKind kind);

// Rows "x,B_1,...,B_N" at x_i = i / (samples - 1), with a header line.
std::string basis_csv(int N, int p, int samples);

}  // namespace exsplinet
