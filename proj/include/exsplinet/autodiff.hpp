#pragma once

// Closed-form derivatives of ExSpliNet outputs with respect to inputs and
// trainable parameters.
//
// Two independent routes are provided. The public input-derivative functions
// work on transformed weights (derivative splines of inner and outer weights).
// The Evaluator differentiates basis functions instead; it is what the
// training and PINN kernels use, and the two routes are cross-checked in tests.

#include <array>
#include <span>
#include <vector>

#include "exsplinet/model.hpp"

namespace exsplinet {

// Flat gradient aligned with ExSpliNetModel::params().
struct GradientBundle {
  std::vector<double> values;

  std::span<const double> inner(const ExSpliNetModel& model, int t, int l, int d) const;
  std::span<const double> outer(const ExSpliNetModel& model, int o, int t) const;
};

// O x D, row-major: entry (o, d) = dE_o / dx_d.
struct InputJacobian {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  double operator()(int o, int d) const { return values[static_cast<std::size_t>(o * cols + d)]; }
};

InputJacobian grad_input(const ExSpliNetModel& model, std::span<const double> x);

// d^2 E_o / dx_d^2 for every o. Needs p, q >= 2 on every level.
std::vector<double> second_input_derivative(const ExSpliNetModel& model, std::span<const double> x, int d);

// One bundle per output, with respect to raw parameters.
std::vector<GradientBundle> grad_params(const ExSpliNetModel& model, std::span<const double> x);
// Same, but the inner part is taken with respect to the constrained v.
std::vector<GradientBundle> grad_params_constrained(const ExSpliNetModel& model, std::span<const double> x);

// Maps an inner gradient with respect to v onto raw u in place, block by
// block: g_u = 2 u (g_v - <g_v, v>) / sum u^2. Frozen blocks become zero.
void chain_reparam(const ExSpliNetModel& model, std::span<double> grad);

struct RiskGradient {
  double risk = 0.0;
  GradientBundle gradient;
};

// Squared loss (1/K) sum_k |E(x^k) - y^k|^2 and its raw-parameter gradient.
// inputs is K x D and targets K x O, both row-major.
RiskGradient risk_grad(const ExSpliNetModel& model, std::span<const double> inputs,
                       std::span<const double> targets);

// Per-sample evaluation state with basis derivatives cached for reuse.
// One instance per thread; the model must outlive it.
class Evaluator {
 public:
  // input_order: highest input-derivative order queried (0..2).
  // param_grad: enables the parameter-gradient accumulators.
  Evaluator(const ExSpliNetModel& model, int input_order, bool param_grad);

  void evaluate(std::span<const double> x);

  double output(int o) const;
  double feature(int t, int l) const { return y_[static_cast<std::size_t>(t * L_ + l)]; }
  double feature_d(int t, int l, int d) const { return dy_[feature_index(t, l, d)]; }
  double feature_d2(int t, int l, int d) const { return d2y_[feature_index(t, l, d)]; }

  // Partial of the outer spline of (o, t) along up to three axes (-1 = none).
  double phi(int o, int t, int a, int b, int c) const;

  double input_partial(int o, int d) const;
  double input_second(int o, int d) const;
  // sum_d scales[d] * d^2 E_o / dx_d^2
  double laplacian(int o, std::span<const double> scales) const;

  // grad += sum_o coeff[o] * dE_o/dtheta, inner part with respect to v.
  void add_output_gradient(std::span<const double> coeff, std::span<double> grad) const;
  // grad += sum_o coeff[o] * d(laplacian_o)/dtheta, inner part with respect to v.
  void add_laplacian_gradient(std::span<const double> coeff, std::span<const double> scales,
                              std::span<double> grad) const;

 private:
  std::size_t feature_index(int t, int l, int d) const {
    return static_cast<std::size_t>((t * L_ + l) * D_ + d);
  }
  std::size_t phi_slot(int a, int b, int c) const;
  double contract(int o, int t, const int* orders) const;
  void scatter(std::span<double> grad, int o, int t, const int* orders, double scale) const;
  const double* inner_row(int l, int d, int order) const;
  const double* outer_row(int t, int l, int order) const;

  const ExSpliNetModel& model_;
  int D_, O_, T_, L_;
  int in_order_;
  int out_order_;
  int phi_order_;

  std::vector<int> inner_off_;           // per (l, d)
  std::vector<std::size_t> inner_base_;  // per (l, d) into inner_vals_
  std::vector<double> inner_vals_;
  std::vector<double> y_, dy_, d2y_;
  std::vector<int> outer_off_;           // per (t, l)
  std::vector<std::size_t> outer_base_;  // per (t, l) into outer_vals_
  std::vector<double> outer_vals_;
  std::vector<double> phi_cache_;        // per (o, t, slot)
  std::vector<std::array<int, 3>> slots_;
  std::size_t slot_count_ = 0;
  std::vector<double> scratch_;
  mutable std::vector<int> first_, width_;
  mutable std::vector<const double*> factors_;
};

}  // namespace exsplinet
