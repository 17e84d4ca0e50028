#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "exsplinet/error.hpp"
#include "exsplinet/training.hpp"
#include "oracles.hpp"

using namespace exsplinet;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::invalid_argument;
}

Dataset regression_set(std::size_t K, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset d;
  d.dim = 2;
  d.outputs = 1;
  for (std::size_t k = 0; k < K; ++k) {
    const double a = u(rng), b = u(rng);
    d.inputs.insert(d.inputs.end(), {a, b});
    d.targets.push_back(std::sin(3.0 * a) * b);
  }
  return d;
}

}  // namespace

TEST_CASE("Adam step follows the bias-corrected update") {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  AdamState st;
  std::vector<double> p{1.0, -2.0};
  const std::vector<double> g{0.5, -4.0};
  adam_step(st, p, g, cfg);
  // first step moves every coordinate by lr * sign(g), up to epsilon
  CHECK(p[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-7));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.1).epsilon(1e-7));
  const double p0 = p[0];
  const std::vector<double> g2{1.0, 0.0};
  adam_step(st, p, g2, cfg);
  const double m = 0.9 * 0.05 + 0.1 * 1.0;
  const double v = 0.999 * 0.001 * 0.25 + 0.001 * 1.0;
  const double mhat = m / (1 - 0.81);
  const double vhat = v / (1 - 0.999 * 0.999);
  CHECK(p[0] == doctest::Approx(p0 - 0.1 * mhat / (std::sqrt(vhat) + 1e-8)).epsilon(1e-12));
  CHECK(st.step == 2);
  std::vector<double> wrong{1.0};
  CHECK(kind_of([&] { adam_step(st, wrong, wrong, cfg); }) == ErrorKind::shape_mismatch);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate(100));
  cfg.batch_size = 101;
  CHECK(kind_of([&] { cfg.validate(100); }) == ErrorKind::invalid_hyperparameter);
  cfg = TrainConfig{};
  cfg.learning_rate = 0.0;
  CHECK(kind_of([&] { cfg.validate(100); }) == ErrorKind::invalid_hyperparameter);
  cfg = TrainConfig{};
  cfg.epochs = 0;
  CHECK(kind_of([&] { cfg.validate(100); }) == ErrorKind::invalid_hyperparameter);
  cfg = TrainConfig{};
  cfg.beta1 = 1.0;
  CHECK(kind_of([&] { cfg.validate(100); }) == ErrorKind::invalid_hyperparameter);
  CHECK(metric_from_string("mae") == Metric::mae);
  CHECK(kind_of([] { metric_from_string("rmse"); }) == ErrorKind::unknown_name);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  CHECK(argmax(std::vector<double>{0.1, 0.7, 0.7}) == 1);
  CHECK(argmax(std::vector<double>{2.0, 2.0}) == 0);
  CHECK(argmax(std::vector<double>{-1.0, -3.0, 0.0}) == 2);
}

TEST_CASE("metrics on a hand-made dataset") {
  ExSpliNetModel m(ModelConfig{1, 2, 1, 1, {2}, {2}, {1}, {1}});
  init_identity(m);
  m.set_outer(0, 0, std::vector<double>{1.0, 0.0});  // E_0 = 1 - y
  m.set_outer(1, 0, std::vector<double>{0.0, 1.0});  // E_1 = y
  Dataset d;
  d.dim = 1;
  d.outputs = 2;
  d.inputs = {0.1, 0.9, 0.5, 0.3};
  d.labels = {0, 1, 1, 1};
  for (int label : d.labels) {
    d.targets.push_back(label == 0 ? 1.0 : 0.0);
    d.targets.push_back(label == 1 ? 1.0 : 0.0);
  }
  // predictions: class 0, 1, tie -> 0, 0
  CHECK(evaluate(m, d, Metric::accuracy) == doctest::Approx(0.5));
  const double mse = (2 * 0.01 + 2 * 0.01 + 2 * 0.25 + 2 * 0.49) / 8.0;
  CHECK(evaluate(m, d, Metric::mse) == doctest::Approx(mse));
  CHECK(evaluate(m, d, Metric::mae) == doctest::Approx((0.2 + 0.2 + 1.0 + 1.4) / 8.0));
  CHECK(empirical_risk(m, d) == doctest::Approx(2.0 * mse));
  Dataset reg = d;
  reg.labels.clear();
  CHECK(kind_of([&] { evaluate(m, reg, Metric::accuracy); }) == ErrorKind::shape_mismatch);
  CHECK(kind_of([&] { evaluate(m, Dataset{}, Metric::mse); }) == ErrorKind::empty_dataset);
}

TEST_CASE("training lowers the risk and returns the best snapshot") {
  const Dataset tr = regression_set(200, 1);
  const Dataset te = regression_set(50, 2);
  const ExSpliNetModel init = init_random(ModelConfig{2, 1, 2, 2, {4, 4}, {4, 4}, {2, 2}, {2, 2}}, 3);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.01;
  cfg.seed = 9;
  std::vector<EpochRecord> seen;
  const auto [best, rep] = train(init, tr, te, cfg, [&](const EpochRecord& r) { seen.push_back(r); });
  CHECK(seen.size() == 30u);
  CHECK(rep.epochs.size() == 30u);
  CHECK(rep.params == param_count(init.config()));
  CHECK(rep.best_train_risk < empirical_risk(init, tr));
  CHECK(empirical_risk(best, tr) == doctest::Approx(rep.best_train_risk).epsilon(1e-12));
  double min_risk = 1e300;
  for (const EpochRecord& r : rep.epochs) min_risk = std::min(min_risk, r.train_risk);
  CHECK(rep.best_train_risk == min_risk);
  CHECK(rep.epochs[static_cast<std::size_t>(rep.best_epoch - 1)].train_risk == min_risk);
  CHECK(rep.final_test_metric == doctest::Approx(evaluate(best, te, Metric::mse)).epsilon(1e-12));
}

TEST_CASE("training is deterministic for a fixed seed") {
  const Dataset tr = regression_set(120, 4);
  const ExSpliNetModel init = init_random(ModelConfig{2, 1, 1, 2, {3, 3}, {3, 3}, {1, 1}, {1, 1}}, 5);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 10;
  cfg.seed = 11;
  const auto a = train(init, tr, Dataset{}, cfg).first;
  const auto b = train(init, tr, Dataset{}, cfg).first;
  CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  cfg.seed = 12;
  const auto c = train(init, tr, Dataset{}, cfg).first;
  CHECK_FALSE(std::equal(a.params().begin(), a.params().end(), c.params().begin()));
}

TEST_CASE("trained inner weights stay on the simplex") {
  const Dataset tr = regression_set(100, 6);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.05;
  const ExSpliNetModel init = init_random(ModelConfig{2, 1, 2, 1, {5}, {4}, {3}, {3}}, 2);
  const auto best = train(init, tr, Dataset{}, cfg).first;
  for (int t = 0; t < 2; ++t) {
    double sum = 0.0;
    for (int d = 0; d < 2; ++d) {
      for (double v : best.v(t, 0, d)) {
        CHECK(v >= 0.0);
        sum += v;
      }
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("training argument errors") {
  const Dataset tr = regression_set(20, 1);
  const ExSpliNetModel wrong_dim = init_random(ModelConfig{3, 1, 1, 1, {2}, {2}, {1}, {1}}, 1);
  TrainConfig cfg;
  cfg.batch_size = 4;
  CHECK(kind_of([&] { train(wrong_dim, tr, Dataset{}, cfg); }) == ErrorKind::config_mismatch);
  const ExSpliNetModel ok = init_random(ModelConfig{2, 1, 1, 1, {2}, {2}, {1}, {1}}, 1);
  CHECK(kind_of([&] { train(ok, Dataset{}, Dataset{}, cfg); }) == ErrorKind::empty_dataset);
  cfg.batch_size = 21;
  CHECK(kind_of([&] { train(ok, tr, Dataset{}, cfg); }) == ErrorKind::invalid_hyperparameter);
}

TEST_CASE("diverging training is a numerical failure") {
  Dataset tr = regression_set(20, 1);
  for (double& y : tr.targets) y = 1e200;
  const ExSpliNetModel ok = init_random(ModelConfig{2, 1, 1, 1, {2}, {2}, {1}, {1}}, 1);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 3;
  CHECK(kind_of([&] { train(ok, tr, Dataset{}, cfg); }) == ErrorKind::numerical_failure);
}

TEST_CASE("k-fold partitions are disjoint, complete and balanced") {
  for (std::size_t size : {10u, 11u, 150u}) {
    for (int k : {2, 3, 5}) {
      const auto folds = kfold(size, k, 7);
      REQUIRE(folds.size() == static_cast<std::size_t>(k));
      std::multiset<std::size_t> tests;
      for (const auto& [train_rows, test_rows] : folds) {
        CHECK(train_rows.size() + test_rows.size() == size);
        CHECK(test_rows.size() >= size / static_cast<std::size_t>(k));
        CHECK(test_rows.size() <= size / static_cast<std::size_t>(k) + 1);
        std::set<std::size_t> tr(train_rows.begin(), train_rows.end());
        for (std::size_t r : test_rows) CHECK(tr.count(r) == 0u);
        tests.insert(test_rows.begin(), test_rows.end());
      }
      CHECK(tests.size() == size);
      CHECK(std::set<std::size_t>(tests.begin(), tests.end()).size() == size);
    }
  }
  CHECK(kind_of([] { kfold(10, 1, 0); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] { kfold(3, 4, 0); }) == ErrorKind::invalid_argument);
}

TEST_CASE("least-squares outer fit recovers a model in its own span") {
  ExSpliNetModel truth = init_random(ModelConfig{2, 2, 1, 2, {3, 3}, {4, 3}, {2, 2}, {2, 1}}, 8);
  init_identity(truth);
  Dataset d;
  d.dim = 2;
  d.outputs = 2;
  std::mt19937_64 rng(3);
  for (int k = 0; k < 300; ++k) {
    const auto x = oracle::random_point(rng, 2);
    d.inputs.insert(d.inputs.end(), x.begin(), x.end());
    const auto y = forward(truth, x);
    d.targets.insert(d.targets.end(), y.begin(), y.end());
  }
  ExSpliNetModel fit = truth;
  for (int o = 0; o < 2; ++o) fit.set_outer(o, 0, std::vector<double>(fit.outer_tensor_size(), 0.0));
  const double mse = fit_outer_least_squares(fit, d);
  CHECK(mse < 1e-20);
  for (std::size_t i = fit.inner_size(); i < fit.size(); ++i) CHECK(fit.params()[i] == doctest::Approx(truth.params()[i]).epsilon(1e-8));
  CHECK(kind_of([&] { fit_outer_least_squares(fit, Dataset{}); }) == ErrorKind::empty_dataset);
}
