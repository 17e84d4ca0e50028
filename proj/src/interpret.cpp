#include "exsplinet/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "exsplinet/error.hpp"

namespace exsplinet {

namespace {

std::string fmt(double v, const char* spec = "%.3f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<int> unflatten(std::size_t flat, std::span<const int> shape) {
  std::vector<int> idx(shape.size());
  for (std::size_t a = shape.size(); a-- > 0;) {
    idx[a] = static_cast<int>(flat % static_cast<std::size_t>(shape[a]));
    flat /= static_cast<std::size_t>(shape[a]);
  }
  return idx;
}

std::string class_tuple(const std::vector<int>& classes) {
  std::string s;
  for (std::size_t l = 0; l < classes.size(); ++l) {
    if (l) s += " & ";
    s += "c_{" + std::to_string(l + 1) + "," + std::to_string(classes[l]) + "}";
  }
  return s;
}

std::string output_name(const std::vector<std::string>& names, int o) {
  return o < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(o)] : "output " + std::to_string(o + 1);
}

}  // namespace

std::vector<double> level_distribution(const ExSpliNetModel& model, int t, int l, std::span<const double> x) {
  const double y = std::clamp(inner_feature(model, t, l, x), 0.0, 1.0);
  return basis_dense(model.outer_knots(l), y);
}

WeightTensor joint_distribution(const ExSpliNetModel& model, int t, std::span<const double> x) {
  const ModelConfig& c = model.config();
  std::vector<double> y(static_cast<std::size_t>(c.L));
  for (int l = 0; l < c.L; ++l) y[static_cast<std::size_t>(l)] = std::clamp(inner_feature(model, t, l, x), 0.0, 1.0);
  return WeightTensor{c.M, tensor_basis(c.M, c.q, y).expand(c.M)};
}

FeatureSummary feature_summary(const ExSpliNetModel& model, int t, int l, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorKind::invalid_argument, "threshold must be > 0");
  const ModelConfig& c = model.config();
  const auto li = static_cast<std::size_t>(l);
  FeatureSummary s;
  s.t = t + 1;
  s.l = l + 1;
  s.affine = c.p[li] == 1 && c.N[li] == 2;
  for (int d = 0; d < c.D; ++d) {
    const auto v = model.v(t, l, d);
    for (std::size_t n = 0; n < v.size(); ++n) {
      if (v[n] >= threshold) s.terms.push_back({d + 1, static_cast<int>(n) + 1, v[n]});
    }
    if (s.affine) s.slopes.push_back(v[1] - v[0]);
  }
  std::stable_sort(s.terms.begin(), s.terms.end(), [](const FeatureTerm& a, const FeatureTerm& b) { return a.v > b.v; });
  s.text = "y" + std::to_string(s.l) + " ~= ";
  if (s.terms.empty()) s.text += "0";
  for (std::size_t i = 0; i < s.terms.size(); ++i) {
    const FeatureTerm& term = s.terms[i];
    if (i) s.text += " + ";
    const std::string x = "x" + std::to_string(term.d);
    if (s.affine) {
      s.text += fmt(term.v) + (term.n == 2 ? "*" + x : "*(1-" + x + ")");
    } else {
      s.text += fmt(term.v) + "*B" + std::to_string(term.n) + "(" + x + ")";
    }
  }
  return s;
}

std::vector<int> ranked_inputs(const FeatureSummary& summary) {
  std::vector<int> out;
  for (const FeatureTerm& term : summary.terms) {
    if (std::find(out.begin(), out.end(), term.d) == out.end()) out.push_back(term.d);
  }
  return out;
}

RuleSet extract_rules(const ExSpliNetModel& model, double threshold, const std::vector<std::string>& output_names) {
  const ModelConfig& c = model.config();
  RuleSet rs;
  rs.threshold = threshold;
  rs.output_names = output_names;
  for (int t = 0; t < c.T; ++t) {
    for (int l = 0; l < c.L; ++l) {
      rs.features.push_back(feature_summary(model, t, l, threshold));
      const auto li = static_cast<std::size_t>(l);
      const int mcount = c.M[li];
      const int q = c.q[li];
      const KnotVector& kv = model.outer_knots(l);
      for (int m = 1; m <= mcount; ++m) {
        Gate g{t + 1, l + 1, m, 0.0, 1.0, false};
        if (q == 1) {
          const double step = 1.0 / (mcount - 1);
          g.lo = m == 1 ? 0.0 : (m - 1.5) * step;
          g.hi = m == mcount ? 1.0 : (m - 0.5) * step;
          g.dominance = true;
        } else if (q == 0) {
          g.lo = kv.knot(m);
          g.hi = kv.knot(m + 1);
          g.dominance = true;
        } else {
          g.lo = kv.knot(m);
          g.hi = kv.knot(m + q + 1);
        }
        rs.gates.push_back(g);
      }
    }
  }
  const std::size_t cells = model.outer_tensor_size();
  rs.stochastic = true;
  for (int t = 0; t < c.T; ++t) {
    for (std::size_t m = 0; m < cells; ++m) {
      double sum = 0.0;
      for (int o = 0; o < c.O; ++o) {
        const double w = model.outer(o, t)[m];
        if (w < 0.0) rs.stochastic = false;
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-6) rs.stochastic = false;
    }
  }
  for (int o = 0; o < c.O; ++o) {
    for (int t = 0; t < c.T; ++t) {
      const auto w = model.outer(o, t);
      for (std::size_t m = 0; m < cells; ++m) {
        auto idx = unflatten(m, c.M);
        for (int& i : idx) ++i;
        rs.rules.push_back({o + 1, t + 1, std::move(idx), w[m]});
      }
    }
  }
  return rs;
}

Explanation predict_explain(const ExSpliNetModel& model, std::span<const double> x) {
  const ModelConfig& c = model.config();
  Explanation e;
  e.outputs = forward(model, x);
  e.label = 0;
  for (std::size_t o = 1; o < e.outputs.size(); ++o) {
    if (e.outputs[o] > e.outputs[static_cast<std::size_t>(e.label)]) e.label = static_cast<int>(o);
  }
  for (int t = 0; t < c.T; ++t) {
    const WeightTensor joint = joint_distribution(model, t, x);
    std::size_t best = 0;
    for (std::size_t m = 1; m < joint.values.size(); ++m) {
      if (joint.values[m] > joint.values[best]) best = m;
    }
    auto idx = unflatten(best, c.M);
    for (int& i : idx) ++i;
    e.paths.push_back(std::move(idx));
    e.path_probability.push_back(joint.values[best]);
    std::vector<double> weights;
    for (int o = 0; o < c.O; ++o) weights.push_back(model.outer(o, t)[best]);
    e.path_weights.push_back(std::move(weights));
  }
  return e;
}

std::string rules_text(const RuleSet& rules) {
  const char* kind = rules.stochastic ? "probabilities" : "weights";
  std::string out = "# rule values are " + std::string(kind) + "; feature threshold " + fmt(rules.threshold, "%g") + "\n";
  int current_tree = 0;
  for (const FeatureSummary& f : rules.features) {
    if (f.t != current_tree) {
      current_tree = f.t;
      out += "\ntree " + std::to_string(f.t) + "\n";
    }
    out += "  feature " + f.text + "\n";
  }
  out += "\ngates\n";
  for (const Gate& g : rules.gates) {
    out += "  tree " + std::to_string(g.t) + " c_{" + std::to_string(g.l) + "," + std::to_string(g.m) + "}: y" +
           std::to_string(g.l) + " in [" + fmt(g.lo, "%.4g") + ", " + fmt(g.hi, "%.4g") + "]" +
           (g.dominance ? " (most probable)" : " (support)") + "\n";
  }
  out += "\nrules\n";
  for (const Rule& r : rules.rules) {
    out += "  [" + fmt(r.weight) + "] tree " + std::to_string(r.t) + ": " + class_tuple(r.classes) + " => " +
           output_name(rules.output_names, r.o - 1) + "\n";
  }
  return out;
}

std::string rules_json(const RuleSet& rules) {
  nlohmann::json doc;
  doc["threshold"] = rules.threshold;
  doc["values"] = rules.stochastic ? "probabilities" : "weights";
  doc["outputs"] = rules.output_names;
  doc["features"] = nlohmann::json::array();
  for (const FeatureSummary& f : rules.features) {
    nlohmann::json jf{{"tree", f.t}, {"level", f.l}, {"text", f.text}, {"terms", nlohmann::json::array()}};
    for (const FeatureTerm& term : f.terms) jf["terms"].push_back({{"input", term.d}, {"basis", term.n}, {"v", term.v}});
    if (f.affine) jf["slopes"] = f.slopes;
    doc["features"].push_back(jf);
  }
  doc["gates"] = nlohmann::json::array();
  for (const Gate& g : rules.gates) {
    doc["gates"].push_back({{"tree", g.t}, {"level", g.l}, {"class", g.m}, {"lo", g.lo}, {"hi", g.hi},
                            {"kind", g.dominance ? "most-probable" : "support"}});
  }
  doc["rules"] = nlohmann::json::array();
  for (const Rule& r : rules.rules) {
    doc["rules"].push_back({{"output", r.o}, {"tree", r.t}, {"classes", r.classes}, {"weight", r.weight}});
  }
  return doc.dump(2) + "\n";
}

std::string explanation_text(const Explanation& e, const std::vector<std::string>& output_names) {
  std::string out = "prediction: " + output_name(output_names, e.label) + "\n";
  for (std::size_t t = 0; t < e.paths.size(); ++t) {
    out += "  tree " + std::to_string(t + 1) + ": " + class_tuple(e.paths[t]) + " with probability " +
           fmt(e.path_probability[t]) + "; weights";
    for (std::size_t o = 0; o < e.path_weights[t].size(); ++o) {
      out += " " + output_name(output_names, static_cast<int>(o)) + "=" + fmt(e.path_weights[t][o]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace exsplinet
