#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "exsplinet/dataio.hpp"
#include "exsplinet/kernels.hpp"
#include "exsplinet/model.hpp"

namespace exsplinet {

enum class Metric { mse, mae, accuracy };

Metric metric_from_string(const std::string& name);
const char* to_string(Metric metric);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 15;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Metric metric = Metric::mse;
  Exec exec = Exec::parallel;

  void validate(std::size_t dataset_size) const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

// Bias-corrected Adam update of params in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad, const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double train_risk = 0.0;
  double test_metric = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_train_risk = 0.0;
  double final_test_metric = 0.0;
  double seconds = 0.0;
  std::int64_t params = 0;
};

// (1/K) sum_k sum_o (E_o(x^k) - y^k_o)^2.
double empirical_risk(const ExSpliNetModel& model, const Dataset& data, Exec exec = Exec::parallel);

// mse / mae average over all outputs; accuracy compares argmax (lowest index on ties) with labels.
double evaluate(const ExSpliNetModel& model, const Dataset& data, Metric metric, Exec exec = Exec::parallel);

int argmax(std::span<const double> values);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Shuffled minibatch Adam. Returns the snapshot with the lowest end-of-epoch
// train risk. test may be empty (size 0), in which case test_metric is NaN.
std::pair<ExSpliNetModel, TrainReport> train(ExSpliNetModel model, const Dataset& train_set, const Dataset& test_set,
                                             const TrainConfig& config, const EpochCallback& on_epoch = {});

// Balanced disjoint folds: returns (train rows, test rows) per fold.
std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold(std::size_t size, int k,
                                                                                 std::uint64_t seed);

// Solves for all outer weights by linear least squares with the inner weights
// held fixed (ridge adds ridge * I to the normal matrix). Returns the train MSE.
double fit_outer_least_squares(ExSpliNetModel& model, const Dataset& data, double ridge = 0.0);

}  // namespace exsplinet
