#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "exsplinet/error.hpp"
#include "exsplinet/model.hpp"
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

ModelConfig uniform_config(int D, int O, int T, int L, int N, int M, int p, int q) {
  return ModelConfig{D, O, T, L, std::vector<int>(static_cast<std::size_t>(L), N), std::vector<int>(static_cast<std::size_t>(L), M),
                     std::vector<int>(static_cast<std::size_t>(L), p), std::vector<int>(static_cast<std::size_t>(L), q)};
}

}  // namespace

TEST_CASE("parameter counts") {
  CHECK(param_count(ModelConfig{4, 3, 1, 2, {2, 2}, {2, 3}, {1, 1}, {1, 1}}) == 34);
  CHECK(param_count(uniform_config(784, 10, 50, 2, 2, 2, 1, 1)) == 158800);
  CHECK(param_count(uniform_config(1, 1, 5, 2, 5, 5, 3, 3)) == 175);
  CHECK(param_count(uniform_config(1, 1, 20, 3, 30, 5, 1, 1)) == 4300);
  CHECK(param_count(uniform_config(1, 1, 5, 3, 50, 10, 3, 3)) == 5750);
  CHECK(param_count(uniform_config(4, 1, 20, 2, 5, 5, 3, 3)) == 1300);
  CHECK(param_count(uniform_config(784, 10, 100, 2, 4, 4, 1, 1)) == 643200);
  // T * (L * D * N + O * M^L) directly
  const ModelConfig c{3, 2, 4, 2, {5, 6}, {3, 4}, {2, 1}, {1, 2}};
  CHECK(param_count(c) == 4 * (3 * 5 + 3 * 6 + 2 * 3 * 4));
  CHECK(ExSpliNetModel(c).size() == static_cast<std::size_t>(param_count(c)));
}

TEST_CASE("config validation") {
  CHECK(kind_of([] { ModelConfig{0, 1, 1, 1, {2}, {2}, {1}, {1}}.validate(); }) == ErrorKind::invalid_hyperparameter);
  CHECK(kind_of([] { ModelConfig{1, 1, 1, 2, {2}, {2}, {1}, {1}}.validate(); }) == ErrorKind::invalid_hyperparameter);
  CHECK(kind_of([] { ModelConfig{1, 1, 1, 1, {2}, {2}, {2}, {1}}.validate(); }) == ErrorKind::invalid_hyperparameter);
  CHECK(kind_of([] { ModelConfig{1, 1, 1, 1, {2}, {1}, {1}, {1}}.validate(); }) == ErrorKind::invalid_hyperparameter);
  CHECK(kind_of([] { ExSpliNetModel(ModelConfig{1, 1, 1, 1, {2}, {2}, {-1}, {1}}); }) == ErrorKind::invalid_hyperparameter);
}

TEST_CASE("parameter layout offsets") {
  const ModelConfig c{3, 2, 2, 2, {4, 5}, {3, 2}, {1, 2}, {1, 1}};
  const ExSpliNetModel m(c);
  CHECK(m.block_offset(0, 0) == 0u);
  CHECK(m.block_offset(0, 1) == 12u);
  CHECK(m.block_offset(1, 0) == 27u);
  CHECK(m.inner_offset(1, 1, 2) == 27u + 12u + 10u);
  CHECK(m.inner_size() == 54u);
  CHECK(m.outer_tensor_size() == 6u);
  CHECK(m.outer_offset(1, 1) == 54u + 3u * 6u);
  CHECK(m.size() == 54u + 4u * 6u);
}

TEST_CASE("reparameterization is a per-block simplex map") {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> u(static_cast<std::size_t>(1 + trial % 12));
    for (double& x : u) x = g(rng);
    const auto v = reparam(u);
    double sum = 0.0;
    for (double x : v) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    // invariant under scaling and sign flips of u
    std::vector<double> w(u);
    for (double& x : w) x *= -3.5;
    const auto v2 = reparam(w);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v2[i] == doctest::Approx(v[i]).epsilon(1e-14));
  }
  CHECK(kind_of([] { reparam(std::vector<double>{0.0, 0.0}); }) == ErrorKind::degenerate_weights);
  std::vector<double> out(3);
  CHECK(kind_of([&] { reparam(std::vector<double>{1.0, 2.0}, out); }) == ErrorKind::shape_mismatch);
}

TEST_CASE("default model has uniform inner weights and zero outputs") {
  const ExSpliNetModel m(uniform_config(2, 2, 2, 2, 3, 3, 1, 1));
  for (double v : m.v()) CHECK(v == doctest::Approx(1.0 / 6.0));
  const auto out = forward(m, std::vector<double>{0.3, 0.8});
  CHECK(out == std::vector<double>{0.0, 0.0});
}

TEST_CASE("all-zero trainable block is degenerate") {
  ExSpliNetModel m(uniform_config(1, 1, 1, 1, 2, 2, 1, 1));
  std::vector<double> params(m.size(), 0.0);
  CHECK(kind_of([&] { m.set_params(params); }) == ErrorKind::degenerate_weights);
  CHECK(kind_of([&] { m.set_params(std::vector<double>(3, 1.0)); }) == ErrorKind::shape_mismatch);
}

TEST_CASE("inner features stay in the unit interval") {
  std::mt19937_64 rng(53);
  int violations = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const ExSpliNetModel m = oracle::random_model(rng);
    const auto x = oracle::random_point(rng, m.config().D);
    for (int t = 0; t < m.config().T; ++t) {
      for (int l = 0; l < m.config().L; ++l) {
        const double y = inner_feature(m, t, l, x);
        if (y < 0.0 || y > 1.0 + 1e-12) ++violations;
        CHECK(y == doctest::Approx(oracle::feature(m, t, l, x)).epsilon(1e-12));
      }
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("forward matches the brute-force tensor contraction") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 300; ++trial) {
    const ExSpliNetModel m = oracle::random_model(rng);
    const auto x = oracle::random_point(rng, m.config().D);
    const auto got = forward(m, x);
    const auto ref = oracle::forward(m, x);
    for (std::size_t o = 0; o < got.size(); ++o) CHECK(got[o] == doctest::Approx(ref[o]).epsilon(1e-12).scale(1.0));
  }
  const ExSpliNetModel m(uniform_config(2, 1, 1, 1, 2, 2, 1, 1));
  CHECK(kind_of([&] { forward(m, std::vector<double>{0.5}); }) == ErrorKind::shape_mismatch);
}

TEST_CASE("random initialization is seeded and in range") {
  const ModelConfig c = uniform_config(3, 2, 3, 2, 4, 3, 2, 1);
  const auto a = init_random(c, 7);
  const auto b = init_random(c, 7);
  const auto d = init_random(c, 8);
  CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  CHECK_FALSE(std::equal(a.params().begin(), a.params().end(), d.params().begin()));
  for (std::size_t i = 0; i < a.inner_size(); ++i) {
    CHECK(a.params()[i] >= 0.5);
    CHECK(a.params()[i] <= 1.5);
  }
  for (std::size_t i = a.inner_size(); i < a.size(); ++i) CHECK(std::abs(a.params()[i]) <= 1.0 / 3.0);
}

TEST_CASE("identity initialization turns features into coordinates") {
  std::mt19937_64 rng(61);
  for (int p = 1; p <= 3; ++p) {
    const ModelConfig c = uniform_config(3, 1, 2, 3, p + 3, 4, p, 2);
    ExSpliNetModel m = init_random(c, 3);
    init_identity(m);
    for (int trial = 0; trial < 50; ++trial) {
      const auto x = oracle::random_point(rng, 3);
      for (int t = 0; t < 2; ++t) {
        for (int l = 0; l < 3; ++l) CHECK(inner_feature(m, t, l, x) == doctest::Approx(x[static_cast<std::size_t>(l)]).epsilon(1e-12));
      }
    }
    CHECK(m.frozen(0, 0));
  }
  ExSpliNetModel bad(uniform_config(2, 1, 1, 3, 3, 3, 1, 1));
  CHECK(kind_of([&] { init_identity(bad); }) == ErrorKind::config_mismatch);
}

TEST_CASE("coordinate selection picks one input per level") {
  ExSpliNetModel m(uniform_config(3, 1, 2, 2, 4, 3, 2, 1));
  init_coordinate_select(m, {{2, 0}, {1, 1}});
  const std::vector<double> x{0.1, 0.6, 0.85};
  CHECK(inner_feature(m, 0, 0, x) == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(inner_feature(m, 0, 1, x) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(inner_feature(m, 1, 0, x) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(kind_of([&] { init_coordinate_select(m, {{3, 0}, {1, 1}}); }) == ErrorKind::index_out_of_range);
  CHECK(kind_of([&] { init_coordinate_select(m, {{0, 0}}); }) == ErrorKind::shape_mismatch);
}

TEST_CASE("convex initialization gives weighted sums of inputs") {
  ExSpliNetModel m(uniform_config(3, 1, 1, 2, 2, 3, 1, 1));
  init_convex(m, {{{0.2, 0.3, 0.5}, {0.0, 1.0, 0.0}}});
  const std::vector<double> x{0.4, 0.7, 0.1};
  CHECK(inner_feature(m, 0, 0, x) == doctest::Approx(0.2 * 0.4 + 0.3 * 0.7 + 0.5 * 0.1).epsilon(1e-12));
  CHECK(inner_feature(m, 0, 1, x) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK_FALSE(m.frozen(0, 0));
  CHECK(kind_of([&] { init_convex(m, {{{0.5, 0.6, 0.0}, {0.0, 1.0, 0.0}}}); }) == ErrorKind::invalid_coefficients);
  CHECK(kind_of([&] { init_convex(m, {{{-0.5, 1.5, 0.0}, {0.0, 1.0, 0.0}}}); }) == ErrorKind::invalid_coefficients);
  ExSpliNetModel cubic(uniform_config(3, 1, 1, 1, 4, 3, 3, 1));
  CHECK(kind_of([&] { init_convex(cubic, {{{1.0, 0.0, 0.0}}}); }) == ErrorKind::config_mismatch);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 50; ++trial) {
    ExSpliNetModel m = oracle::random_model(rng);
    const auto& pc = m.config().p;
    if (trial % 5 == 0 && m.config().L == m.config().D && *std::min_element(pc.begin(), pc.end()) >= 1) init_identity(m);
    const std::string text = checkpoint_to_string(m);
    const ExSpliNetModel back = checkpoint_from_string(text);
    CHECK(back.config() == m.config());
    REQUIRE(back.size() == m.size());
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(back.params()[i] == m.params()[i]);
    for (std::size_t i = 0; i < m.v().size(); ++i) CHECK(back.v()[i] == m.v()[i]);
    CHECK(std::equal(back.frozen_flags().begin(), back.frozen_flags().end(), m.frozen_flags().begin()));
    CHECK(checkpoint_to_string(back) == text);
  }
}

TEST_CASE("checkpoint data section and file io") {
  const ExSpliNetModel m = init_random(uniform_config(2, 2, 1, 1, 2, 2, 1, 1), 4);
  DataMeta meta{{"a", "b"}, {"yes", "no"}, {0.0, -1.0}, {1.0, 3.0}};
  const auto dir = std::filesystem::temp_directory_path() / "exsplinet_model_test";
  std::filesystem::create_directories(dir);
  save_checkpoint(m, dir / "m.esn", meta);
  DataMeta back;
  const ExSpliNetModel loaded = load_checkpoint(dir / "m.esn", &back);
  CHECK(back.feature_names == meta.feature_names);
  CHECK(back.class_names == meta.class_names);
  CHECK(back.lo == meta.lo);
  CHECK(back.hi == meta.hi);
  CHECK(std::equal(loaded.params().begin(), loaded.params().end(), m.params().begin()));
  CHECK(kind_of([&] { load_checkpoint(dir / "missing.esn"); }) == ErrorKind::io_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint errors") {
  const ExSpliNetModel m = init_random(uniform_config(1, 1, 1, 1, 2, 2, 1, 1), 1);
  std::string text = checkpoint_to_string(m);
  std::string old = text;
  old.replace(old.find("exsplinet-v1"), 12, "exsplinet-v0");
  CHECK(kind_of([&] { checkpoint_from_string(old); }) == ErrorKind::version_mismatch);
  CHECK(kind_of([&] { checkpoint_from_string("{not json"); }) == ErrorKind::parse_error);
  CHECK(kind_of([&] { checkpoint_from_string("{\"format\": \"exsplinet-v1\"}"); }) == ErrorKind::parse_error);
  std::string shape = text;
  shape.replace(shape.find("\"N\": [2]"), 8, "\"N\": [3]");
  CHECK(kind_of([&] { checkpoint_from_string(shape); }) == ErrorKind::shape_mismatch);
}

TEST_CASE("non-normalized inner blocks are frozen verbatim") {
  ExSpliNetModel m(uniform_config(2, 1, 1, 1, 2, 2, 1, 1));
  const std::vector<double> block{0.0, 0.5, 0.0, 0.5};
  m.set_inner_block(0, 0, block);
  CHECK_FALSE(m.frozen(0, 0));
  const std::vector<double> raw{0.0, 1.0, 0.0, 1.0};
  m.set_inner_block(0, 0, raw);
  CHECK(m.frozen(0, 0));
  for (std::size_t i = 0; i < raw.size(); ++i) CHECK(m.v()[i] == raw[i]);
  CHECK(kind_of([&] { m.set_inner_block(0, 0, std::vector<double>{1.0}); }) == ErrorKind::shape_mismatch);
}
