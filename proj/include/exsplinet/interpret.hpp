#pragma once

// Probabilistic-tree reading of a trained model: level l of tree t routes x to
// hidden class m with probability B_{M_l,q_l,m}(y_{t,l}(x)); hierarchical
// classes multiply these, and outer weights attach an output score to each.

#include <span>
#include <string>
#include <vector>

#include "exsplinet/model.hpp"

namespace exsplinet {

std::vector<double> level_distribution(const ExSpliNetModel& model, int t, int l, std::span<const double> x);

// Outer product of the level distributions, shaped like the outer tensors.
WeightTensor joint_distribution(const ExSpliNetModel& model, int t, std::span<const double> x);

struct FeatureTerm {
  int d = 0;  // 1-based input index
  int n = 0;  // 1-based basis index
  double v = 0.0;
};

struct FeatureSummary {
  int t = 0;  // 1-based
  int l = 0;  // 1-based
  std::vector<FeatureTerm> terms;  // entries with v >= threshold, largest first
  bool affine = false;             // p = 1 and N = 2
  std::vector<double> slopes;      // per input when affine: v_2 - v_1
  std::string text;
};

FeatureSummary feature_summary(const ExSpliNetModel& model, int t, int l, double threshold = 1e-2);

// Inputs ranked by their largest kept coefficient, 1-based.
std::vector<int> ranked_inputs(const FeatureSummary& summary);

struct Gate {
  int t = 0;
  int l = 0;
  int m = 0;  // all 1-based
  double lo = 0.0;
  double hi = 0.0;
  bool dominance = false;  // true: interval where this class is the most probable
};

struct Rule {
  int o = 0;
  int t = 0;
  std::vector<int> classes;  // 1-based m_1..m_L
  double weight = 0.0;
};

struct RuleSet {
  double threshold = 1e-2;
  bool stochastic = false;  // weights over o are nonnegative and sum to 1 per class tuple
  std::vector<std::string> output_names;
  std::vector<FeatureSummary> features;
  std::vector<Gate> gates;
  std::vector<Rule> rules;
};

RuleSet extract_rules(const ExSpliNetModel& model, double threshold = 1e-2,
                      const std::vector<std::string>& output_names = {});

struct Explanation {
  int label = 0;  // argmax, lowest index on ties
  std::vector<double> outputs;
  std::vector<std::vector<int>> paths;  // per tree: most probable class tuple (1-based)
  std::vector<double> path_probability;
  std::vector<std::vector<double>> path_weights;  // per tree: w^{o,t} at the path for every o
};

Explanation predict_explain(const ExSpliNetModel& model, std::span<const double> x);

std::string rules_text(const RuleSet& rules);
std::string rules_json(const RuleSet& rules);
std::string explanation_text(const Explanation& e, const std::vector<std::string>& output_names);

}  // namespace exsplinet
