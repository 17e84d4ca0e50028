#include "exsplinet/autodiff.hpp"

#include <algorithm>
#include <string>

#include "exsplinet/error.hpp"

namespace exsplinet {

namespace {

std::vector<double> clamped_features(const ExSpliNetModel& model, int t, std::span<const double> x) {
  const int levels = model.config().L;
  std::vector<double> y(static_cast<std::size_t>(levels));
  for (int l = 0; l < levels; ++l) y[static_cast<std::size_t>(l)] = std::clamp(inner_feature(model, t, l, x), 0.0, 1.0);
  return y;
}

void check_input(const ExSpliNetModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.config().D) {
    throw Error(ErrorKind::shape_mismatch, "input has " + std::to_string(x.size()) + " entries, expected " +
                                               std::to_string(model.config().D));
  }
}

}  // namespace

std::span<const double> GradientBundle::inner(const ExSpliNetModel& model, int t, int l, int d) const {
  return std::span<const double>(values).subspan(model.inner_offset(t, l, d),
                                                 static_cast<std::size_t>(model.config().N[static_cast<std::size_t>(l)]));
}

std::span<const double> GradientBundle::outer(const ExSpliNetModel& model, int o, int t) const {
  return std::span<const double>(values).subspan(model.outer_offset(o, t), model.outer_tensor_size());
}

InputJacobian grad_input(const ExSpliNetModel& model, std::span<const double> x) {
  check_input(model, x);
  const ModelConfig& c = model.config();
  InputJacobian jac{c.O, c.D, std::vector<double>(static_cast<std::size_t>(c.O * c.D), 0.0)};
  for (int t = 0; t < c.T; ++t) {
    const std::vector<double> y = clamped_features(model, t, x);
    std::vector<double> dpsi(static_cast<std::size_t>(c.L * c.D));
    for (int l = 0; l < c.L; ++l) {
      for (int d = 0; d < c.D; ++d) {
        const Spline1D s = derivative_spline(Spline1D(
            {model.v(t, l, d).begin(), model.v(t, l, d).end()}, c.p[static_cast<std::size_t>(l)]));
        dpsi[static_cast<std::size_t>(l * c.D + d)] = de_boor_eval(s, x[static_cast<std::size_t>(d)]);
      }
    }
    for (int o = 0; o < c.O; ++o) {
      const WeightTensor w = model.outer_tensor(o, t);
      for (int l = 0; l < c.L; ++l) {
        const AxisDerivative ad = axis_derivative_weights(w, c.q, l);
        const double dphi = tensor_dot(ad.weights, tensor_basis(ad.basis_counts, ad.degrees, y));
        for (int d = 0; d < c.D; ++d) {
          jac.values[static_cast<std::size_t>(o * c.D + d)] += dphi * dpsi[static_cast<std::size_t>(l * c.D + d)];
        }
      }
    }
  }
  return jac;
}

std::vector<double> second_input_derivative(const ExSpliNetModel& model, std::span<const double> x, int d) {
  check_input(model, x);
  const ModelConfig& c = model.config();
  if (d < 0 || d >= c.D) throw Error(ErrorKind::index_out_of_range, "input index " + std::to_string(d));
  for (int l = 0; l < c.L; ++l) {
    if (c.p[static_cast<std::size_t>(l)] < 2 || c.q[static_cast<std::size_t>(l)] < 2) {
      throw Error(ErrorKind::degree_too_low, "second derivatives need p, q >= 2 on level " + std::to_string(l + 1));
    }
  }
  const double xd = x[static_cast<std::size_t>(d)];
  std::vector<double> out(static_cast<std::size_t>(c.O), 0.0);
  for (int t = 0; t < c.T; ++t) {
    const std::vector<double> y = clamped_features(model, t, x);
    std::vector<double> d1(static_cast<std::size_t>(c.L));
    std::vector<double> d2(static_cast<std::size_t>(c.L));
    for (int l = 0; l < c.L; ++l) {
      const Spline1D s1 = derivative_spline(Spline1D(
          {model.v(t, l, d).begin(), model.v(t, l, d).end()}, c.p[static_cast<std::size_t>(l)]));
      const Spline1D s2 = derivative_spline(s1);
      d1[static_cast<std::size_t>(l)] = de_boor_eval(s1, xd);
      d2[static_cast<std::size_t>(l)] = de_boor_eval(s2, xd);
    }
    for (int o = 0; o < c.O; ++o) {
      const WeightTensor w = model.outer_tensor(o, t);
      double sum = 0.0;
      for (int l = 0; l < c.L; ++l) {
        const AxisDerivative a = axis_derivative_weights(w, c.q, l);
        sum += tensor_dot(a.weights, tensor_basis(a.basis_counts, a.degrees, y)) * d2[static_cast<std::size_t>(l)];
        for (int k = 0; k < c.L; ++k) {
          const AxisDerivative b = axis_derivative_weights(a.weights, a.degrees, k);
          sum += tensor_dot(b.weights, tensor_basis(b.basis_counts, b.degrees, y)) *
                 d1[static_cast<std::size_t>(l)] * d1[static_cast<std::size_t>(k)];
        }
      }
      out[static_cast<std::size_t>(o)] += sum;
    }
  }
  return out;
}

std::vector<GradientBundle> grad_params_constrained(const ExSpliNetModel& model, std::span<const double> x) {
  check_input(model, x);
  const int outputs = model.config().O;
  Evaluator ev(model, 0, true);
  ev.evaluate(x);
  std::vector<GradientBundle> out(static_cast<std::size_t>(outputs));
  std::vector<double> coeff(static_cast<std::size_t>(outputs), 0.0);
  for (int o = 0; o < outputs; ++o) {
    out[static_cast<std::size_t>(o)].values.assign(model.size(), 0.0);
    coeff[static_cast<std::size_t>(o)] = 1.0;
    ev.add_output_gradient(coeff, out[static_cast<std::size_t>(o)].values);
    coeff[static_cast<std::size_t>(o)] = 0.0;
  }
  return out;
}

std::vector<GradientBundle> grad_params(const ExSpliNetModel& model, std::span<const double> x) {
  std::vector<GradientBundle> out = grad_params_constrained(model, x);
  for (GradientBundle& g : out) chain_reparam(model, g.values);
  return out;
}

void chain_reparam(const ExSpliNetModel& model, std::span<double> grad) {
  const ModelConfig& c = model.config();
  const auto u = model.params();
  const auto v = model.v();
  for (int t = 0; t < c.T; ++t) {
    for (int l = 0; l < c.L; ++l) {
      const std::size_t off = model.block_offset(t, l);
      const std::size_t len = model.block_size(l);
      if (model.frozen(t, l)) {
        std::fill_n(grad.begin() + static_cast<std::ptrdiff_t>(off), len, 0.0);
        continue;
      }
      double sum_sq = 0.0;
      double inner = 0.0;
      for (std::size_t i = off; i < off + len; ++i) {
        sum_sq += u[i] * u[i];
        inner += grad[i] * v[i];
      }
      for (std::size_t i = off; i < off + len; ++i) grad[i] = 2.0 * u[i] * (grad[i] - inner) / sum_sq;
    }
  }
}

RiskGradient risk_grad(const ExSpliNetModel& model, std::span<const double> inputs,
                       std::span<const double> targets) {
  const ModelConfig& c = model.config();
  const std::size_t dim = static_cast<std::size_t>(c.D);
  const std::size_t outputs = static_cast<std::size_t>(c.O);
  if (inputs.empty()) throw Error(ErrorKind::empty_dataset, "risk over an empty batch");
  if (inputs.size() % dim != 0 || targets.size() != inputs.size() / dim * outputs) {
    throw Error(ErrorKind::shape_mismatch, "targets do not match the model output arity");
  }
  const std::size_t count = inputs.size() / dim;
  RiskGradient result;
  result.gradient.values.assign(model.size(), 0.0);
  Evaluator ev(model, 0, true);
  std::vector<double> coeff(outputs);
  for (std::size_t k = 0; k < count; ++k) {
    ev.evaluate(inputs.subspan(k * dim, dim));
    for (std::size_t o = 0; o < outputs; ++o) {
      const double r = ev.output(static_cast<int>(o)) - targets[k * outputs + o];
      result.risk += r * r;
      coeff[o] = 2.0 * r / static_cast<double>(count);
    }
    ev.add_output_gradient(coeff, result.gradient.values);
  }
  result.risk /= static_cast<double>(count);
  chain_reparam(model, result.gradient.values);
  return result;
}

Evaluator::Evaluator(const ExSpliNetModel& model, int input_order, bool param_grad)
    : model_(model),
      D_(model.config().D),
      O_(model.config().O),
      T_(model.config().T),
      L_(model.config().L),
      in_order_(input_order),
      out_order_(input_order + (param_grad ? 1 : 0)),
      phi_order_(out_order_) {
  if (input_order < 0 || input_order > 2) throw Error(ErrorKind::invalid_argument, "input order must be 0, 1 or 2");
  const ModelConfig& c = model.config();
  std::size_t scratch = 0;
  std::size_t base = 0;
  for (int l = 0; l < L_; ++l) {
    const auto width = static_cast<std::size_t>(c.p[static_cast<std::size_t>(l)] + 1);
    for (int d = 0; d < D_; ++d) {
      inner_base_.push_back(base);
      base += static_cast<std::size_t>(in_order_ + 1) * width;
    }
    scratch = std::max(scratch, 2 * static_cast<std::size_t>(in_order_ + 1) * width);
  }
  inner_vals_.assign(base, 0.0);
  inner_off_.assign(static_cast<std::size_t>(L_ * D_), 1);
  base = 0;
  for (int t = 0; t < T_; ++t) {
    for (int l = 0; l < L_; ++l) {
      outer_base_.push_back(base);
      const auto width = static_cast<std::size_t>(c.q[static_cast<std::size_t>(l)] + 1);
      base += static_cast<std::size_t>(out_order_ + 1) * width;
      scratch = std::max(scratch, 2 * static_cast<std::size_t>(out_order_ + 1) * width);
    }
  }
  outer_vals_.assign(base, 0.0);
  outer_off_.assign(static_cast<std::size_t>(T_ * L_), 1);
  scratch_.assign(scratch, 0.0);

  const std::size_t features = static_cast<std::size_t>(T_ * L_);
  y_.assign(features, 0.0);
  if (in_order_ >= 1) dy_.assign(features * static_cast<std::size_t>(D_), 0.0);
  if (in_order_ >= 2) d2y_.assign(features * static_cast<std::size_t>(D_), 0.0);

  const int n = L_ + 1;
  slot_count_ = static_cast<std::size_t>(n * n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      for (int k = j; k < n; ++k) {
        const int order = (i > 0) + (j > 0) + (k > 0);
        if (order <= phi_order_) slots_.push_back({i, j, k});
      }
    }
  }
  phi_cache_.assign(static_cast<std::size_t>(O_ * T_) * slot_count_, 0.0);
  first_.resize(static_cast<std::size_t>(L_));
  width_.resize(static_cast<std::size_t>(L_));
  factors_.resize(static_cast<std::size_t>(L_));
}

const double* Evaluator::inner_row(int l, int d, int order) const {
  const auto width = static_cast<std::size_t>(model_.config().p[static_cast<std::size_t>(l)] + 1);
  return inner_vals_.data() + inner_base_[static_cast<std::size_t>(l * D_ + d)] + static_cast<std::size_t>(order) * width;
}

const double* Evaluator::outer_row(int t, int l, int order) const {
  const auto width = static_cast<std::size_t>(model_.config().q[static_cast<std::size_t>(l)] + 1);
  return outer_vals_.data() + outer_base_[static_cast<std::size_t>(t * L_ + l)] + static_cast<std::size_t>(order) * width;
}

void Evaluator::evaluate(std::span<const double> x) {
  if (static_cast<int>(x.size()) != D_) throw Error(ErrorKind::shape_mismatch, "input has wrong dimension");
  const ModelConfig& c = model_.config();
  for (int l = 0; l < L_; ++l) {
    const auto width = static_cast<std::size_t>(c.p[static_cast<std::size_t>(l)] + 1);
    for (int d = 0; d < D_; ++d) {
      const std::size_t idx = static_cast<std::size_t>(l * D_ + d);
      inner_off_[idx] = eval_basis_derivs(
          model_.inner_knots(l), x[static_cast<std::size_t>(d)], in_order_,
          std::span<double>(inner_vals_).subspan(inner_base_[idx], static_cast<std::size_t>(in_order_ + 1) * width),
          scratch_);
    }
  }
  const auto v = model_.v();
  for (int t = 0; t < T_; ++t) {
    for (int l = 0; l < L_; ++l) {
      const int width = c.p[static_cast<std::size_t>(l)] + 1;
      double y = 0.0;
      for (int d = 0; d < D_; ++d) {
        const std::size_t start = model_.inner_offset(t, l, d) + static_cast<std::size_t>(inner_off_[static_cast<std::size_t>(l * D_ + d)] - 1);
        const double* w = v.data() + start;
        const double* b0 = inner_row(l, d, 0);
        double s0 = 0.0;
        for (int j = 0; j < width; ++j) s0 += w[j] * b0[j];
        y += s0;
        if (in_order_ >= 1) {
          const double* b1 = inner_row(l, d, 1);
          double s1 = 0.0;
          for (int j = 0; j < width; ++j) s1 += w[j] * b1[j];
          dy_[feature_index(t, l, d)] = s1;
        }
        if (in_order_ >= 2) {
          const double* b2 = inner_row(l, d, 2);
          double s2 = 0.0;
          for (int j = 0; j < width; ++j) s2 += w[j] * b2[j];
          d2y_[feature_index(t, l, d)] = s2;
        }
      }
      y = std::clamp(y, 0.0, 1.0);
      y_[static_cast<std::size_t>(t * L_ + l)] = y;
      const auto owidth = static_cast<std::size_t>(c.q[static_cast<std::size_t>(l)] + 1);
      const std::size_t idx = static_cast<std::size_t>(t * L_ + l);
      outer_off_[idx] = eval_basis_derivs(
          model_.outer_knots(l), y, out_order_,
          std::span<double>(outer_vals_).subspan(outer_base_[idx], static_cast<std::size_t>(out_order_ + 1) * owidth),
          scratch_);
    }
  }
  std::vector<int> orders(static_cast<std::size_t>(L_));
  for (int t = 0; t < T_; ++t) {
    for (const auto& s : slots_) {
      std::fill(orders.begin(), orders.end(), 0);
      for (int i : s) {
        if (i > 0) ++orders[static_cast<std::size_t>(i - 1)];
      }
      const std::size_t slot = static_cast<std::size_t>((s[0] * (L_ + 1) + s[1]) * (L_ + 1) + s[2]);
      for (int o = 0; o < O_; ++o) {
        phi_cache_[static_cast<std::size_t>(o * T_ + t) * slot_count_ + slot] = contract(o, t, orders.data());
      }
    }
  }
}

std::size_t Evaluator::phi_slot(int a, int b, int c) const {
  std::array<int, 3> s{a + 1, b + 1, c + 1};
  std::sort(s.begin(), s.end());
  const int order = (s[0] > 0) + (s[1] > 0) + (s[2] > 0);
  if (order > phi_order_) throw Error(ErrorKind::invalid_argument, "derivative order not prepared by this evaluator");
  return static_cast<std::size_t>((s[0] * (L_ + 1) + s[1]) * (L_ + 1) + s[2]);
}

double Evaluator::phi(int o, int t, int a, int b, int c) const {
  return phi_cache_[static_cast<std::size_t>(o * T_ + t) * slot_count_ + phi_slot(a, b, c)];
}

double Evaluator::contract(int o, int t, const int* orders) const {
  const ModelConfig& c = model_.config();
  for (int l = 0; l < L_; ++l) {
    const auto li = static_cast<std::size_t>(l);
    first_[li] = outer_off_[static_cast<std::size_t>(t * L_ + l)] - 1;
    width_[li] = c.q[li] + 1;
    factors_[li] = outer_row(t, l, orders[li]);
  }
  const auto w = model_.params().subspan(model_.outer_offset(o, t), model_.outer_tensor_size());
  return contract_local(w, model_.outer_strides(), first_, width_, factors_);
}

void Evaluator::scatter(std::span<double> grad, int o, int t, const int* orders, double scale) const {
  if (scale == 0.0) return;
  const ModelConfig& c = model_.config();
  for (int l = 0; l < L_; ++l) {
    const auto li = static_cast<std::size_t>(l);
    first_[li] = outer_off_[static_cast<std::size_t>(t * L_ + l)] - 1;
    width_[li] = c.q[li] + 1;
    factors_[li] = outer_row(t, l, orders[li]);
  }
  scatter_local(grad.subspan(model_.outer_offset(o, t), model_.outer_tensor_size()), model_.outer_strides(),
                first_, width_, factors_, scale);
}

double Evaluator::output(int o) const {
  double sum = 0.0;
  for (int t = 0; t < T_; ++t) sum += phi(o, t, -1, -1, -1);
  return sum;
}

double Evaluator::input_partial(int o, int d) const {
  if (in_order_ < 1) throw Error(ErrorKind::invalid_argument, "evaluator prepared without input derivatives");
  double sum = 0.0;
  for (int t = 0; t < T_; ++t) {
    for (int l = 0; l < L_; ++l) sum += phi(o, t, l, -1, -1) * feature_d(t, l, d);
  }
  return sum;
}

double Evaluator::input_second(int o, int d) const {
  if (in_order_ < 2) throw Error(ErrorKind::invalid_argument, "evaluator prepared without second derivatives");
  double sum = 0.0;
  for (int t = 0; t < T_; ++t) {
    for (int l = 0; l < L_; ++l) {
      sum += phi(o, t, l, -1, -1) * feature_d2(t, l, d);
      for (int k = 0; k < L_; ++k) sum += phi(o, t, l, k, -1) * feature_d(t, l, d) * feature_d(t, k, d);
    }
  }
  return sum;
}

double Evaluator::laplacian(int o, std::span<const double> scales) const {
  double sum = 0.0;
  for (int d = 0; d < D_; ++d) sum += scales[static_cast<std::size_t>(d)] * input_second(o, d);
  return sum;
}

void Evaluator::add_output_gradient(std::span<const double> coeff, std::span<double> grad) const {
  if (out_order_ <= in_order_) throw Error(ErrorKind::invalid_argument, "evaluator prepared without parameter gradients");
  const ModelConfig& c = model_.config();
  std::vector<int> orders(static_cast<std::size_t>(L_), 0);
  for (int t = 0; t < T_; ++t) {
    for (int o = 0; o < O_; ++o) scatter(grad, o, t, orders.data(), coeff[static_cast<std::size_t>(o)]);
    for (int l = 0; l < L_; ++l) {
      if (model_.frozen(t, l)) continue;
      double gy = 0.0;
      for (int o = 0; o < O_; ++o) gy += coeff[static_cast<std::size_t>(o)] * phi(o, t, l, -1, -1);
      if (gy == 0.0) continue;
      const int width = c.p[static_cast<std::size_t>(l)] + 1;
      for (int d = 0; d < D_; ++d) {
        double* g = grad.data() + model_.inner_offset(t, l, d) + static_cast<std::size_t>(inner_off_[static_cast<std::size_t>(l * D_ + d)] - 1);
        const double* b0 = inner_row(l, d, 0);
        for (int j = 0; j < width; ++j) g[j] += gy * b0[j];
      }
    }
  }
}

void Evaluator::add_laplacian_gradient(std::span<const double> coeff, std::span<const double> scales,
                                       std::span<double> grad) const {
  if (in_order_ < 2 || out_order_ < 3) {
    throw Error(ErrorKind::invalid_argument, "evaluator prepared without Laplacian gradients");
  }
  const ModelConfig& c = model_.config();
  const auto levels = static_cast<std::size_t>(L_);
  std::vector<double> a(levels * levels);
  std::vector<double> bsum(levels);
  std::vector<int> orders(levels);
  for (int t = 0; t < T_; ++t) {
    for (int l = 0; l < L_; ++l) {
      double b = 0.0;
      for (int d = 0; d < D_; ++d) b += scales[static_cast<std::size_t>(d)] * feature_d2(t, l, d);
      bsum[static_cast<std::size_t>(l)] = b;
      for (int k = 0; k < L_; ++k) {
        double s = 0.0;
        for (int d = 0; d < D_; ++d) s += scales[static_cast<std::size_t>(d)] * feature_d(t, l, d) * feature_d(t, k, d);
        a[static_cast<std::size_t>(l * L_ + k)] = s;
      }
    }
    for (int o = 0; o < O_; ++o) {
      const double co = coeff[static_cast<std::size_t>(o)];
      if (co == 0.0) continue;
      for (int l = 0; l < L_; ++l) {
        std::fill(orders.begin(), orders.end(), 0);
        orders[static_cast<std::size_t>(l)] = 1;
        scatter(grad, o, t, orders.data(), co * bsum[static_cast<std::size_t>(l)]);
        for (int k = l; k < L_; ++k) {
          std::fill(orders.begin(), orders.end(), 0);
          ++orders[static_cast<std::size_t>(l)];
          ++orders[static_cast<std::size_t>(k)];
          const double mult = (k == l) ? 1.0 : 2.0;
          scatter(grad, o, t, orders.data(), co * mult * a[static_cast<std::size_t>(l * L_ + k)]);
        }
      }
    }
    for (int j = 0; j < L_; ++j) {
      if (model_.frozen(t, j)) continue;
      double gy = 0.0;
      double g1 = 0.0;
      std::vector<double> g2(levels, 0.0);
      for (int o = 0; o < O_; ++o) {
        const double co = coeff[static_cast<std::size_t>(o)];
        if (co == 0.0) continue;
        double s = 0.0;
        for (int l = 0; l < L_; ++l) {
          s += phi(o, t, l, j, -1) * bsum[static_cast<std::size_t>(l)];
          for (int k = 0; k < L_; ++k) s += phi(o, t, l, k, j) * a[static_cast<std::size_t>(l * L_ + k)];
        }
        gy += co * s;
        g1 += co * phi(o, t, j, -1, -1);
        for (int k = 0; k < L_; ++k) g2[static_cast<std::size_t>(k)] += co * phi(o, t, j, k, -1);
      }
      const int width = c.p[static_cast<std::size_t>(j)] + 1;
      for (int d = 0; d < D_; ++d) {
        const double sd = scales[static_cast<std::size_t>(d)];
        double ga = 0.0;
        for (int k = 0; k < L_; ++k) ga += g2[static_cast<std::size_t>(k)] * feature_d(t, k, d);
        ga *= 2.0 * sd;
        const double gb = sd * g1;
        double* g = grad.data() + model_.inner_offset(t, j, d) + static_cast<std::size_t>(inner_off_[static_cast<std::size_t>(j * D_ + d)] - 1);
        const double* b0 = inner_row(j, d, 0);
        const double* b1 = inner_row(j, d, 1);
        const double* b2 = inner_row(j, d, 2);
        for (int n = 0; n < width; ++n) g[n] += gy * b0[n] + ga * b1[n] + gb * b2[n];
      }
    }
  }
}

}  // namespace exsplinet
