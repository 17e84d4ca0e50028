#include "exsplinet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "exsplinet/autodiff.hpp"
#include "exsplinet/error.hpp"

namespace exsplinet {

Metric metric_from_string(const std::string& name) {
  if (name == "mse") return Metric::mse;
  if (name == "mae") return Metric::mae;
  if (name == "accuracy") return Metric::accuracy;
  throw Error(ErrorKind::unknown_name, "unknown metric '" + name + "'");
}

const char* to_string(Metric metric) {
  switch (metric) {
    case Metric::mse: return "mse";
    case Metric::mae: return "mae";
    case Metric::accuracy: return "accuracy";
  }
  return "?";
}

void TrainConfig::validate(std::size_t dataset_size) const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::invalid_hyperparameter, "learning rate must be > 0");
  if (epochs < 1) throw Error(ErrorKind::invalid_hyperparameter, "epochs must be >= 1");
  if (batch_size < 1 || static_cast<std::size_t>(batch_size) > dataset_size) {
    throw Error(ErrorKind::invalid_hyperparameter,
                "batch size must be in 1.." + std::to_string(dataset_size) + ", got " + std::to_string(batch_size));
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw Error(ErrorKind::invalid_hyperparameter, "Adam needs 0 <= beta < 1 and epsilon > 0");
  }
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad, const TrainConfig& config) {
  if (grad.size() != params.size()) throw Error(ErrorKind::shape_mismatch, "gradient and parameters differ in length");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw Error(ErrorKind::shape_mismatch, "Adam state does not match parameters");
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grad[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
  }
}

double empirical_risk(const ExSpliNetModel& model, const Dataset& data, Exec exec) {
  if (data.size() == 0) throw Error(ErrorKind::empty_dataset, "empirical risk over an empty dataset");
  if (data.outputs != model.config().O || data.dim != model.config().D) {
    throw Error(ErrorKind::shape_mismatch, "dataset arity does not match the model");
  }
  return risk_gradient(model, SampleView{data.inputs, data.targets, {}}, {}, exec);
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

double evaluate(const ExSpliNetModel& model, const Dataset& data, Metric metric, Exec exec) {
  if (data.size() == 0) throw Error(ErrorKind::empty_dataset, "evaluation over an empty dataset");
  const ModelConfig& c = model.config();
  if (data.dim != c.D || data.outputs != c.O) throw Error(ErrorKind::shape_mismatch, "dataset arity does not match the model");
  if (metric == Metric::accuracy && !data.is_classification()) {
    throw Error(ErrorKind::shape_mismatch, "accuracy needs a labelled dataset");
  }
  const auto outputs = static_cast<std::size_t>(c.O);
  std::vector<double> pred(data.size() * outputs);
  predict_batch(model, data.inputs, pred, exec);
  double sum = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto row = std::span<const double>(pred).subspan(k * outputs, outputs);
    if (metric == Metric::accuracy) {
      sum += argmax(row) == data.labels[k] ? 1.0 : 0.0;
      continue;
    }
    for (std::size_t o = 0; o < outputs; ++o) {
      const double e = row[o] - data.targets[k * outputs + o];
      sum += metric == Metric::mse ? e * e : std::abs(e);
    }
  }
  const double denom = static_cast<double>(data.size()) * (metric == Metric::accuracy ? 1.0 : static_cast<double>(outputs));
  return sum / denom;
}

std::pair<ExSpliNetModel, TrainReport> train(ExSpliNetModel model, const Dataset& train_set, const Dataset& test_set,
                                             const TrainConfig& config, const EpochCallback& on_epoch) {
  if (train_set.size() == 0) throw Error(ErrorKind::empty_dataset, "training set is empty");
  if (train_set.dim != model.config().D || train_set.outputs != model.config().O) {
    throw Error(ErrorKind::config_mismatch, "dataset has D=" + std::to_string(train_set.dim) + ", O=" +
                                                std::to_string(train_set.outputs) + " but the model expects D=" +
                                                std::to_string(model.config().D) + ", O=" + std::to_string(model.config().O));
  }
  config.validate(train_set.size());
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.params = static_cast<std::int64_t>(model.size());

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> params(model.params().begin(), model.params().end());
  std::vector<double> grad(model.size());
  AdamState adam;
  ExSpliNetModel best = model;
  report.best_train_risk = std::numeric_limits<double>::infinity();
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      const SampleView view{train_set.inputs, train_set.targets,
                            std::span<const std::size_t>(order).subspan(begin, end - begin)};
      risk_gradient(model, view, grad, config.exec);
      adam_step(adam, params, grad, config);
      model.set_params(params);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_risk = empirical_risk(model, train_set, config.exec);
    rec.test_metric = test_set.size() > 0 ? evaluate(model, test_set, config.metric, config.exec)
                                          : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(rec.train_risk)) throw Error(ErrorKind::numerical_failure, "training diverged at epoch " + std::to_string(epoch));
    report.epochs.push_back(rec);
    if (rec.train_risk < report.best_train_risk) {
      report.best_train_risk = rec.train_risk;
      report.best_epoch = epoch;
      best = model;
    }
    if (on_epoch) on_epoch(rec);
  }
  report.final_test_metric = test_set.size() > 0 ? evaluate(best, test_set, config.metric, config.exec)
                                                 : std::numeric_limits<double>::quiet_NaN();
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(best), std::move(report)};
}

std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold(std::size_t size, int k,
                                                                                 std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::invalid_argument, "k-fold needs k >= 2");
  if (static_cast<std::size_t>(k) > size) {
    throw Error(ErrorKind::invalid_argument, "k=" + std::to_string(k) + " exceeds the dataset size " + std::to_string(size));
  }
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds(static_cast<std::size_t>(k));
  const std::size_t base = size / static_cast<std::size_t>(k);
  const std::size_t extra = size % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    auto& [train_rows, test_rows] = folds[f];
    test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(pos));
    train_rows.insert(train_rows.end(), order.begin() + static_cast<std::ptrdiff_t>(pos + len), order.end());
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    pos += len;
  }
  return folds;
}

double fit_outer_least_squares(ExSpliNetModel& model, const Dataset& data, double ridge) {
  const ModelConfig& c = model.config();
  if (data.size() == 0) throw Error(ErrorKind::empty_dataset, "least squares over an empty dataset");
  if (data.dim != c.D || data.outputs != c.O) throw Error(ErrorKind::shape_mismatch, "dataset arity does not match the model");
  const std::size_t cells = model.outer_tensor_size();
  const auto unknowns = static_cast<Eigen::Index>(cells * static_cast<std::size_t>(c.T));
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(unknowns, unknowns);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(unknowns, c.O);
  const auto strides = model.outer_strides();
  std::vector<Eigen::Index> idx;
  std::vector<double> val;
  for (std::size_t k = 0; k < data.size(); ++k) {
    idx.clear();
    val.clear();
    for (int t = 0; t < c.T; ++t) {
      std::vector<double> y(static_cast<std::size_t>(c.L));
      for (int l = 0; l < c.L; ++l) y[static_cast<std::size_t>(l)] = std::clamp(inner_feature(model, t, l, data.input(k)), 0.0, 1.0);
      const TensorBasisSparse b = tensor_basis(c.M, c.q, y);
      // odometer over the local window
      std::vector<int> j(static_cast<std::size_t>(c.L), 0);
      while (true) {
        double value = 1.0;
        std::size_t flat = 0;
        for (std::size_t a = 0; a < j.size(); ++a) {
          value *= b.axes[a].values[static_cast<std::size_t>(j[a])];
          flat += static_cast<std::size_t>(b.axes[a].offset - 1 + j[a]) * strides[a];
        }
        if (value != 0.0) {
          idx.push_back(static_cast<Eigen::Index>(static_cast<std::size_t>(t) * cells + flat));
          val.push_back(value);
        }
        std::size_t a = j.size();
        while (a-- > 0) {
          if (++j[a] < static_cast<int>(b.axes[a].values.size())) break;
          j[a] = 0;
        }
        if (a == static_cast<std::size_t>(-1)) break;
      }
    }
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t s = 0; s < idx.size(); ++s) normal(idx[r], idx[s]) += val[r] * val[s];
      for (int o = 0; o < c.O; ++o) rhs(idx[r], o) += val[r] * data.targets[k * static_cast<std::size_t>(c.O) + static_cast<std::size_t>(o)];
    }
  }
  if (ridge > 0.0) normal.diagonal().array() += ridge;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::numerical_failure, "least-squares normal matrix is singular");
  const Eigen::MatrixXd sol = ldlt.solve(rhs);
  std::vector<double> w(cells);
  for (int o = 0; o < c.O; ++o) {
    for (int t = 0; t < c.T; ++t) {
      for (std::size_t m = 0; m < cells; ++m) w[m] = sol(static_cast<Eigen::Index>(static_cast<std::size_t>(t) * cells + m), o);
      model.set_outer(o, t, w);
    }
  }
  return empirical_risk(model, data) / static_cast<double>(c.O);
}

}  // namespace exsplinet
