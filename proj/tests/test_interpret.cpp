#include <doctest.h>

#include <json.hpp>
#include <random>

#include "exsplinet/error.hpp"
#include "exsplinet/interpret.hpp"
#include "oracles.hpp"

using namespace exsplinet;

namespace {

std::size_t argmax_of(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("level and joint distributions are probability vectors") {
  std::mt19937_64 rng(201);
  for (int trial = 0; trial < 100; ++trial) {
    const ExSpliNetModel m = oracle::random_model(rng);
    const ModelConfig& c = m.config();
    const auto x = oracle::random_point(rng, c.D);
    for (int t = 0; t < c.T; ++t) {
      for (int l = 0; l < c.L; ++l) {
        const auto dist = level_distribution(m, t, l, x);
        CHECK(dist.size() == static_cast<std::size_t>(c.M[static_cast<std::size_t>(l)]));
        double sum = 0.0;
        for (double p : dist) {
          CHECK(p >= 0.0);
          sum += p;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }
      const WeightTensor joint = joint_distribution(m, t, x);
      CHECK(joint.shape == c.M);
      double sum = 0.0;
      for (double p : joint.values) sum += p;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("joint distribution weighted by outer tensors reproduces the output") {
  std::mt19937_64 rng(203);
  for (int trial = 0; trial < 100; ++trial) {
    const ExSpliNetModel m = oracle::random_model(rng);
    const ModelConfig& c = m.config();
    const auto x = oracle::random_point(rng, c.D);
    const auto ref = oracle::forward(m, x);
    for (int o = 0; o < c.O; ++o) {
      double s = 0.0;
      for (int t = 0; t < c.T; ++t) {
        const WeightTensor joint = joint_distribution(m, t, x);
        const auto w = m.outer(o, t);
        for (std::size_t i = 0; i < joint.values.size(); ++i) s += w[i] * joint.values[i];
      }
      CHECK(oracle::close(s, ref[static_cast<std::size_t>(o)], 1e-12));
    }
  }
}

TEST_CASE("feature summaries keep large coefficients in order") {
  ExSpliNetModel m = init_random(ModelConfig{3, 1, 1, 1, {2}, {2}, {1}, {1}}, 1);
  // v over (x1: B1,B2), (x2: B1,B2), (x3: B1,B2)
  m.set_raw_block(0, 0, std::vector<double>{0.0, 0.6, 0.005, 0.0, 0.1, 0.295}, true);
  m.refresh();
  const FeatureSummary s = feature_summary(m, 0, 0, 0.01);
  CHECK(s.t == 1);
  CHECK(s.l == 1);
  CHECK(s.affine);
  REQUIRE(s.terms.size() == 3u);
  CHECK(s.terms[0].d == 1);
  CHECK(s.terms[0].n == 2);
  CHECK(s.terms[1].d == 3);
  CHECK(s.terms[2].d == 3);
  CHECK(s.terms[2].n == 1);
  CHECK(ranked_inputs(s) == std::vector<int>{1, 3});
  CHECK(s.slopes.size() == 3u);
  CHECK(s.slopes[1] == doctest::Approx(-0.005));
  CHECK(s.text == "y1 ~= 0.600*x1 + 0.295*x3 + 0.100*(1-x3)");
  CHECK(ranked_inputs(feature_summary(m, 0, 0, 0.001)) == std::vector<int>{1, 3, 2});
  CHECK(feature_summary(m, 0, 0, 0.9).text == "y1 ~= 0");
  CHECK_THROWS_AS(feature_summary(m, 0, 0, 0.0), Error);

  const ExSpliNetModel cubic = init_random(ModelConfig{1, 1, 1, 1, {5}, {5}, {3}, {3}}, 2);
  const FeatureSummary sc = feature_summary(cubic, 0, 0, 1e-9);
  CHECK_FALSE(sc.affine);
  CHECK(sc.slopes.empty());
  CHECK(sc.text.find("*B") != std::string::npos);
}

TEST_CASE("most-probable gates match the level distribution") {
  std::mt19937_64 rng(207);
  for (int q : {0, 1}) {
    for (int M : {2, 3, 5}) {
      if (M <= q) continue;
      const ExSpliNetModel m = init_random(ModelConfig{1, 1, 1, 1, {2}, {M}, {1}, {q}}, 3);
      const RuleSet rs = extract_rules(m);
      REQUIRE(rs.gates.size() == static_cast<std::size_t>(M));
      const KnotVector& kv = m.outer_knots(0);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (const Gate& g : rs.gates) {
        CHECK(g.dominance);
        CHECK(g.lo < g.hi);
        for (int i = 0; i < 20; ++i) {
          const double y = g.lo + (g.hi - g.lo) * (0.01 + 0.98 * u(rng));
          const auto dist = basis_dense(kv, y);
          CHECK(argmax_of(dist) == static_cast<std::size_t>(g.m - 1));
        }
      }
      CHECK(rs.gates.front().lo == 0.0);
      CHECK(rs.gates.back().hi == 1.0);
    }
  }
  const ExSpliNetModel cubic = init_random(ModelConfig{1, 1, 1, 1, {2}, {6}, {1}, {3}}, 3);
  for (const Gate& g : extract_rules(cubic).gates) CHECK_FALSE(g.dominance);
}

TEST_CASE("rules enumerate every class tuple for every output and tree") {
  const ExSpliNetModel m = init_random(ModelConfig{2, 3, 2, 2, {2, 2}, {2, 3}, {1, 1}, {1, 1}}, 4);
  const RuleSet rs = extract_rules(m, 0.05, {"a", "b", "c"});
  CHECK(rs.rules.size() == 3u * 2u * 6u);
  CHECK(rs.features.size() == 4u);
  CHECK(rs.gates.size() == 2u * (2u + 3u));
  for (const Rule& r : rs.rules) {
    REQUIRE(r.classes.size() == 2u);
    CHECK(r.classes[0] >= 1);
    CHECK(r.classes[0] <= 2);
    CHECK(r.classes[1] <= 3);
    const int flat = (r.classes[0] - 1) * 3 + (r.classes[1] - 1);
    CHECK(r.weight == m.outer(r.o - 1, r.t - 1)[static_cast<std::size_t>(flat)]);
  }
  CHECK_FALSE(rs.stochastic);

  ExSpliNetModel stoch = m;
  for (int t = 0; t < 2; ++t) {
    for (int o = 0; o < 3; ++o) stoch.set_outer(o, t, std::vector<double>(6, 1.0 / 3.0));
  }
  CHECK(extract_rules(stoch).stochastic);
}

TEST_CASE("explanations follow the most probable path") {
  std::mt19937_64 rng(211);
  for (int trial = 0; trial < 50; ++trial) {
    const ExSpliNetModel m = oracle::random_model(rng);
    const ModelConfig& c = m.config();
    const auto x = oracle::random_point(rng, c.D);
    const Explanation e = predict_explain(m, x);
    const auto out = forward(m, x);
    CHECK(e.outputs == out);
    CHECK(e.label == static_cast<int>(argmax_of(out)));
    REQUIRE(e.paths.size() == static_cast<std::size_t>(c.T));
    for (int t = 0; t < c.T; ++t) {
      const WeightTensor joint = joint_distribution(m, t, x);
      const auto ti = static_cast<std::size_t>(t);
      CHECK(e.path_probability[ti] == *std::max_element(joint.values.begin(), joint.values.end()));
      std::vector<int> idx;
      for (int mi : e.paths[ti]) idx.push_back(mi - 1);
      CHECK(joint.at(idx) == e.path_probability[ti]);
      CHECK(e.path_weights[ti].size() == static_cast<std::size_t>(c.O));
    }
  }
}

TEST_CASE("rule text and JSON") {
  const ExSpliNetModel m = init_random(ModelConfig{2, 2, 1, 1, {2}, {2}, {1}, {1}}, 5);
  const RuleSet rs = extract_rules(m, 0.01, {"setosa", "virginica"});
  const std::string text = rules_text(rs);
  CHECK(text.find("# rule values are weights") == 0);
  CHECK(text.find("=> setosa") != std::string::npos);
  CHECK(text.find("c_{1,2}") != std::string::npos);
  CHECK(text.find("(most probable)") != std::string::npos);
  const auto doc = nlohmann::json::parse(rules_json(rs));
  CHECK(doc["values"] == "weights");
  CHECK(doc["rules"].size() == 4u);
  CHECK(doc["gates"].size() == 2u);
  CHECK(doc["features"][0].contains("slopes"));
  CHECK(doc["outputs"][1] == "virginica");
  const std::string unnamed = rules_text(extract_rules(m));
  CHECK(unnamed.find("=> output 2") != std::string::npos);

  const Explanation e = predict_explain(m, std::vector<double>{0.2, 0.9});
  const std::string et = explanation_text(e, {"setosa", "virginica"});
  CHECK(et.find("prediction: ") == 0);
  CHECK(et.find("tree 1: c_{1,") != std::string::npos);
}
