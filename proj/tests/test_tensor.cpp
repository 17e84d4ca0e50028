#include <doctest.h>

#include <random>

#include "exsplinet/error.hpp"
#include "exsplinet/tensor.hpp"
#include "oracles.hpp"

using namespace exsplinet;

namespace {

struct Case {
  std::vector<int> M;
  std::vector<int> q;
  std::vector<double> y;
  WeightTensor w;
};

Case random_case(std::mt19937_64& rng, int min_degree = 0) {
  std::uniform_int_distribution<int> rank(1, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  Case c;
  const int L = rank(rng);
  for (int l = 0; l < L; ++l) {
    const int q = std::uniform_int_distribution<int>(min_degree, 3)(rng);
    c.q.push_back(q);
    c.M.push_back(q + 1 + std::uniform_int_distribution<int>(0, 3)(rng));
    c.y.push_back(u(rng));
  }
  c.w = WeightTensor::zeros(c.M);
  for (double& v : c.w.values) v = g(rng);
  return c;
}

// Kronecker product of dense per-axis bases, axis 0 slowest.
std::vector<double> kron(const std::vector<std::vector<double>>& factors) {
  std::vector<double> out{1.0};
  for (const auto& f : factors) {
    std::vector<double> next;
    for (double a : out) {
      for (double b : f) next.push_back(a * b);
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

TEST_CASE("flat layout is lexicographic with axis 0 slowest") {
  WeightTensor w = WeightTensor::zeros({2, 3, 4});
  CHECK(w.size() == 24u);
  CHECK(w.strides() == std::vector<std::size_t>{12, 4, 1});
  const int idx[] = {1, 2, 3};
  w.at(idx) = 7.0;
  CHECK(w.values[23] == 7.0);
  CHECK(shape_product(std::vector<int>{2, 3, 4}) == 24u);
}

TEST_CASE("tensor basis equals the Kronecker product of univariate bases") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const Case c = random_case(rng);
    std::vector<std::vector<double>> factors;
    for (std::size_t l = 0; l < c.M.size(); ++l) factors.push_back(oracle::basis_all(c.M[l], c.q[l], c.y[l]));
    const auto ref = kron(factors);
    const auto b = tensor_basis(c.M, c.q, c.y);
    const auto dense = b.expand(c.M);
    REQUIRE(dense.size() == ref.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(dense[i] == doctest::Approx(ref[i]).epsilon(1e-12));
      sum += dense[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    double dot = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) dot += c.w.values[i] * ref[i];
    CHECK(tensor_dot(c.w, b) == doctest::Approx(dot).epsilon(1e-12));
  }
}

TEST_CASE("entry outside the support windows is zero") {
  const std::vector<int> M{5, 5}, q{1, 1};
  const std::vector<double> y{0.1, 0.9};
  const auto b = tensor_basis(M, q, y);
  const int far[] = {5, 1};
  CHECK(b.entry(far) == 0.0);
  const int near[] = {1, 5};
  CHECK(b.entry(near) > 0.0);
}

TEST_CASE("axis derivative weights give partial derivatives") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    Case c = random_case(rng, 1);
    for (double& y : c.y) y = 0.05 + 0.9 * y;
    const int axis = std::uniform_int_distribution<int>(0, static_cast<int>(c.M.size()) - 1)(rng);
    const AxisDerivative der = axis_derivative_weights(c.w, c.q, axis);
    CHECK(der.basis_counts[static_cast<std::size_t>(axis)] == c.M[static_cast<std::size_t>(axis)] - 1);
    CHECK(der.degrees[static_cast<std::size_t>(axis)] == c.q[static_cast<std::size_t>(axis)] - 1);
    auto f = [&](double z) {
      std::vector<double> y = c.y;
      y[static_cast<std::size_t>(axis)] = z;
      return tensor_dot(c.w, tensor_basis(c.M, c.q, y));
    };
    double& ya = c.y[static_cast<std::size_t>(axis)];
    const auto k = oracle::knots(c.M[static_cast<std::size_t>(axis)], c.q[static_cast<std::size_t>(axis)]);
    for (double kn : k) {
      if (std::abs(kn - ya) < 2e-4) ya += 5e-4;
    }
    const double got = tensor_dot(der.weights, tensor_basis(der.basis_counts, der.degrees, c.y));
    CHECK(oracle::close(got, oracle::central(f, ya, 1e-6), 1e-5));
  }
}

TEST_CASE("tensor shape errors") {
  const std::vector<int> M{3, 3}, q{1, 1};
  CHECK_THROWS_AS(tensor_basis(M, q, std::vector<double>{0.5}), Error);
  const auto b = tensor_basis(M, q, std::vector<double>{0.5, 0.5});
  CHECK_THROWS_AS(tensor_dot(WeightTensor::zeros({3}), b), Error);
  CHECK_THROWS_AS(tensor_dot(WeightTensor::zeros({2, 2}), b), Error);
  try {
    axis_derivative_weights(WeightTensor::zeros({3, 3}), std::vector<int>{0, 1}, 0);
    FAIL("expected degree-too-low");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degree_too_low);
  }
  CHECK_THROWS_AS(axis_derivative_weights(WeightTensor::zeros({3, 3}), q, 2), Error);
}

TEST_CASE("local contraction and scatter are adjoint") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const Case c = random_case(rng);
    const auto b = tensor_basis(c.M, c.q, c.y);
    const auto strides = c.w.strides();
    std::vector<int> first, width;
    std::vector<const double*> factors;
    for (const SparseBasis& axis : b.axes) {
      first.push_back(axis.offset - 1);
      width.push_back(static_cast<int>(axis.values.size()));
      factors.push_back(axis.values.data());
    }
    CHECK(contract_local(c.w.values, strides, first, width, factors) == doctest::Approx(tensor_dot(c.w, b)).epsilon(1e-13));
    std::vector<double> g(c.w.size(), 0.0);
    scatter_local(g, strides, first, width, factors, 2.0);
    const auto dense = b.expand(c.M);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(2.0 * dense[i]).epsilon(1e-13));
  }
}
