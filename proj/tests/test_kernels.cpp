#include <doctest.h>

#include <cstring>
#include <random>

#include "exsplinet/autodiff.hpp"
#include "exsplinet/error.hpp"
#include "exsplinet/kernels.hpp"
#include "oracles.hpp"

using namespace exsplinet;

namespace {

struct Batch {
  std::vector<double> X;
  std::vector<double> Y;
};

Batch random_batch(std::mt19937_64& rng, const ModelConfig& c, std::size_t K) {
  Batch b;
  for (std::size_t k = 0; k < K; ++k) {
    const auto x = oracle::random_point(rng, c.D);
    b.X.insert(b.X.end(), x.begin(), x.end());
    const auto y = oracle::random_point(rng, c.O, -1.0, 1.0);
    b.Y.insert(b.Y.end(), y.begin(), y.end());
  }
  return b;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("chunk count depends only on the sample count") {
  CHECK(chunk_count(1) == 1u);
  CHECK(chunk_count(16) == 1u);
  CHECK(chunk_count(17) == 2u);
  CHECK(chunk_count(1024) == 64u);
  CHECK(chunk_count(100000) <= 64u);
}

TEST_CASE("serial and parallel risk kernels agree with the reference") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const ExSpliNetModel m = oracle::random_model(rng, 0, 3);
    const std::size_t K = 1 + static_cast<std::size_t>(trial) * 37;
    const Batch b = random_batch(rng, m.config(), K);
    const SampleView view{b.X, b.Y, {}};
    std::vector<double> gs(m.size()), gp(m.size());
    const double rs = risk_gradient(m, view, gs, Exec::serial);
    const double rp = risk_gradient(m, view, gp, Exec::parallel);
    const RiskGradient ref = risk_grad(m, b.X, b.Y);
    CHECK(rs == doctest::Approx(ref.risk).epsilon(1e-12));
    CHECK(rp == doctest::Approx(rs).epsilon(1e-12));
    for (std::size_t i = 0; i < m.size(); ++i) {
      CHECK(oracle::close(gs[i], ref.gradient.values[i], 1e-12));
      CHECK(oracle::close(gp[i], gs[i], 1e-12));
    }
    CHECK(risk_gradient(m, view, {}, Exec::parallel) == rp);
  }
}

TEST_CASE("parallel kernels are bitwise identical across thread counts") {
  std::mt19937_64 rng(103);
  const ExSpliNetModel m = oracle::random_model(rng, 3, 3, 1);
  const Batch b = random_batch(rng, m.config(), 1500);
  const SampleView view{b.X, b.Y, {}};
  std::vector<double> pinn_scales(static_cast<std::size_t>(m.config().D), 1.0);
  std::vector<double> rhs(1500, 0.5), g(40, 0.0);
  const Batch bd = random_batch(rng, m.config(), 40);
  const PinnSamples ps{b.X, rhs, bd.X, g, pinn_scales, 1e4};

  std::vector<std::vector<double>> grads, pgrads, outs;
  std::vector<double> risks, prisks;
  for (int threads : {1, 2, 3, 4}) {
    set_thread_count(threads);
    std::vector<double> grad(m.size());
    risks.push_back(risk_gradient(m, view, grad, Exec::parallel));
    grads.push_back(grad);
    std::vector<double> pgrad(m.size());
    prisks.push_back(pinn_gradient(m, ps, pgrad, Exec::parallel).total);
    pgrads.push_back(pgrad);
    std::vector<double> out(1500 * static_cast<std::size_t>(m.config().O));
    predict_batch(m, b.X, out, Exec::parallel);
    outs.push_back(out);
  }
  set_thread_count(0);
  for (std::size_t i = 1; i < grads.size(); ++i) {
    CHECK(risks[i] == risks[0]);
    CHECK(bitwise_equal(grads[i], grads[0]));
    CHECK(prisks[i] == prisks[0]);
    CHECK(bitwise_equal(pgrads[i], pgrads[0]));
    CHECK(bitwise_equal(outs[i], outs[0]));
  }
}

TEST_CASE("index views select rows in order") {
  std::mt19937_64 rng(107);
  const ExSpliNetModel m = oracle::random_model(rng);
  const Batch b = random_batch(rng, m.config(), 50);
  const std::vector<std::size_t> rows{3, 7, 7, 49, 0};
  Batch sub;
  const auto D = static_cast<std::size_t>(m.config().D);
  const auto O = static_cast<std::size_t>(m.config().O);
  for (std::size_t r : rows) {
    sub.X.insert(sub.X.end(), b.X.begin() + static_cast<std::ptrdiff_t>(r * D), b.X.begin() + static_cast<std::ptrdiff_t>((r + 1) * D));
    sub.Y.insert(sub.Y.end(), b.Y.begin() + static_cast<std::ptrdiff_t>(r * O), b.Y.begin() + static_cast<std::ptrdiff_t>((r + 1) * O));
  }
  std::vector<double> g1(m.size()), g2(m.size());
  const double r1 = risk_gradient(m, SampleView{b.X, b.Y, rows}, g1, Exec::serial);
  const double r2 = risk_gradient(m, SampleView{sub.X, sub.Y, {}}, g2, Exec::serial);
  CHECK(r1 == r2);
  CHECK(bitwise_equal(g1, g2));
}

TEST_CASE("predict_batch matches forward") {
  std::mt19937_64 rng(109);
  const ExSpliNetModel m = oracle::random_model(rng);
  const Batch b = random_batch(rng, m.config(), 33);
  const auto O = static_cast<std::size_t>(m.config().O);
  std::vector<double> out(33 * O);
  predict_batch(m, b.X, out, Exec::parallel);
  for (std::size_t k = 0; k < 33; ++k) {
    const auto ref = forward(m, std::span<const double>(b.X).subspan(k * static_cast<std::size_t>(m.config().D),
                                                                     static_cast<std::size_t>(m.config().D)));
    for (std::size_t o = 0; o < O; ++o) CHECK(out[k * O + o] == doctest::Approx(ref[o]).epsilon(1e-13));
  }
  std::vector<double> wrong(1);
  CHECK_THROWS_AS(predict_batch(m, b.X, wrong, Exec::serial), Error);
}

TEST_CASE("differential risk gradient matches finite differences") {
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 15; ++trial) {
    const ExSpliNetModel m = oracle::random_model(rng, 3, 3, 1);
    const ModelConfig& c = m.config();
    const Batch in = random_batch(rng, c, 7);
    const Batch bd = random_batch(rng, c, 3);
    std::vector<double> scales;
    for (int d = 0; d < c.D; ++d) scales.push_back(0.25 + 0.5 * d);
    const PinnSamples ps{in.X, in.Y, bd.X, bd.Y, scales, 10.0};
    // reference risk assembled point by point
    auto risk = [&](const ExSpliNetModel& mm) {
      double ei = 0.0, eb = 0.0;
      for (std::size_t k = 0; k < 7; ++k) {
        Evaluator ev(mm, 2, false);
        ev.evaluate(std::span<const double>(in.X).subspan(k * static_cast<std::size_t>(c.D), static_cast<std::size_t>(c.D)));
        const double r = -ev.laplacian(0, scales) - in.Y[k];
        ei += r * r;
      }
      for (std::size_t k = 0; k < 3; ++k) {
        const double r = forward(mm, std::span<const double>(bd.X).subspan(k * static_cast<std::size_t>(c.D),
                                                                           static_cast<std::size_t>(c.D)))[0] - bd.Y[k];
        eb += r * r;
      }
      return ei / 7.0 + 10.0 * eb / 3.0;
    };
    std::vector<double> gs(m.size()), gp(m.size());
    const PinnTerms ts = pinn_gradient(m, ps, gs, Exec::serial);
    const PinnTerms tp = pinn_gradient(m, ps, gp, Exec::parallel);
    CHECK(ts.total == doctest::Approx(risk(m)).epsilon(1e-10));
    CHECK(ts.total == doctest::Approx(ts.interior + 10.0 * ts.boundary).epsilon(1e-14));
    CHECK(tp.total == doctest::Approx(ts.total).epsilon(1e-12));
    for (std::size_t i = 0; i < m.size(); ++i) {
      std::vector<double> p(m.params().begin(), m.params().end());
      ExSpliNetModel mm = m;
      const double h = 1e-6;
      p[i] += h;
      mm.set_params(p);
      const double plus = risk(mm);
      p[i] -= 2 * h;
      mm.set_params(p);
      const double minus = risk(mm);
      CHECK(oracle::close(gs[i], (plus - minus) / (2 * h), 1e-4));
      CHECK(oracle::close(gp[i], gs[i], 1e-12));
    }
  }
}

TEST_CASE("kernel argument errors") {
  const ExSpliNetModel m = init_random(ModelConfig{1, 2, 1, 1, {4}, {4}, {3}, {3}}, 1);
  const std::vector<double> X{0.5}, Y{1.0};
  std::vector<double> g(m.size());
  CHECK_THROWS_AS(risk_gradient(m, SampleView{X, Y, {}}, g, Exec::serial), Error);
  const std::vector<double> Y2{1.0, 2.0};
  std::vector<double> short_grad(2);
  CHECK_THROWS_AS(risk_gradient(m, SampleView{X, Y2, {}}, short_grad, Exec::serial), Error);
  CHECK_THROWS_AS(risk_gradient(m, SampleView{{}, {}, {}}, g, Exec::serial), Error);
  const std::vector<double> s{1.0};
  try {
    pinn_gradient(m, PinnSamples{X, Y, X, Y, s, 1.0}, g, Exec::serial);
    FAIL("expected config-mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config_mismatch);
  }
  const ExSpliNetModel single = init_random(ModelConfig{1, 1, 1, 1, {4}, {4}, {3}, {3}}, 1);
  std::vector<double> g1(single.size());
  try {
    pinn_gradient(single, PinnSamples{X, Y, {}, {}, s, 1.0}, g1, Exec::serial);
    FAIL("expected empty-dataset");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::empty_dataset);
  }
}
