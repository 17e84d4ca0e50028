#include "exsplinet/pinn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>

#include "exsplinet/error.hpp"
#include "exsplinet/training.hpp"

namespace exsplinet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kStallDraws = 1'000'000;
constexpr double kStallRate = 1e-3;

}  // namespace

double EggDomain::level(double x1, double x2) const {
  const double c = (x1 - cx) / a;
  const double s = (x2 - cy) / (b * std::exp(k * c));
  return c * c + s * s - 1.0;
}

void EggDomain::boundary_point(double theta, double& x1, double& x2) const {
  const double c = std::cos(theta);
  x1 = cx + a * c;
  x2 = cy + b * std::exp(k * c) * std::sin(theta);
}

std::vector<double> DifferentialProblem::to_unit(std::span<const double> physical) const {
  std::vector<double> out(physical.size());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = std::clamp((physical[d] - lo[d]) / (hi[d] - lo[d]), 0.0, 1.0);
  return out;
}

std::vector<double> DifferentialProblem::to_physical(std::span<const double> unit) const {
  std::vector<double> out(unit.size());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = lo[d] + unit[d] * (hi[d] - lo[d]);
  return out;
}

std::vector<double> DifferentialProblem::laplacian_scales() const {
  std::vector<double> s(static_cast<std::size_t>(dim));
  for (std::size_t d = 0; d < s.size(); ++d) s[d] = 1.0 / ((hi[d] - lo[d]) * (hi[d] - lo[d]));
  return s;
}

DifferentialProblem make_problem(const std::string& name, const EggDomain& egg) {
  DifferentialProblem p;
  p.name = name;
  if (name == "exp3") {
    p.dim = 1;
    p.lo = {0.0};
    p.hi = {1.0};
    p.rhs = [](std::span<const double> x) { return 4.0 * kPi * kPi * std::sin(2.0 * kPi * x[0]); };
    p.boundary = [](std::span<const double>) { return 0.0; };
    p.exact = [](std::span<const double> x) { return std::sin(2.0 * kPi * x[0]); };
    p.inside = [](std::span<const double> x) { return x[0] > 0.0 && x[0] < 1.0; };
    p.boundary_at = [](double s, std::span<double> out) { out[0] = s < 0.5 ? 0.0 : 1.0; };
    return p;
  }
  if (name == "exp4") {
    if (!(egg.a > 0.0 && egg.b > 0.0)) throw Error(ErrorKind::invalid_argument, "egg semi-axes must be positive");
    p.dim = 2;
    // c spans [-1,1] and |s| <= 1 on the curve
    const double half_height = egg.b * std::exp(std::abs(egg.k));
    const double half = std::max(egg.a, half_height);
    p.lo = {egg.cx - half, egg.cy - half};
    p.hi = {egg.cx + half, egg.cy + half};
    auto u = [](std::span<const double> x) { return std::sin(kPi * (x[0] * x[0] + x[1] * x[1])); };
    p.rhs = [](std::span<const double> x) {
      const double r2 = x[0] * x[0] + x[1] * x[1];
      return 4.0 * kPi * kPi * r2 * std::sin(kPi * r2) - 4.0 * kPi * std::cos(kPi * r2);
    };
    p.boundary = u;
    p.exact = u;
    p.inside = [egg](std::span<const double> x) { return egg.inside(x[0], x[1]); };
    p.boundary_at = [egg](double s, std::span<double> out) { egg.boundary_point(2.0 * kPi * s, out[0], out[1]); };
    return p;
  }
  throw Error(ErrorKind::unknown_name, "unknown PINN problem '" + name + "'");
}

CollocationSet sample_collocation(const DifferentialProblem& problem, std::size_t interior, std::size_t boundary,
                                  std::uint64_t seed) {
  if (interior == 0 || boundary == 0) throw Error(ErrorKind::invalid_argument, "collocation counts must be >= 1");
  CollocationSet set;
  set.dim = problem.dim;
  const auto dim = static_cast<std::size_t>(problem.dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> phys(dim);
  std::size_t draws = 0;
  while (set.interior_count() < interior) {
    for (std::size_t d = 0; d < dim; ++d) phys[d] = problem.lo[d] + unit(rng) * (problem.hi[d] - problem.lo[d]);
    ++draws;
    if (problem.inside(phys)) {
      const auto z = problem.to_unit(phys);
      set.interior.insert(set.interior.end(), z.begin(), z.end());
      set.rhs.push_back(problem.rhs(phys));
    }
    if (draws >= kStallDraws && static_cast<double>(set.interior_count()) < kStallRate * static_cast<double>(draws)) {
      throw Error(ErrorKind::rejection_stall, "acceptance rate below 1e-3 after " + std::to_string(draws) + " draws");
    }
  }
  for (std::size_t i = 0; i < boundary; ++i) {
    const double s = dim == 1 ? (i % 2 == 0 ? 0.0 : 0.75) : unit(rng);
    problem.boundary_at(s, phys);
    const auto z = problem.to_unit(phys);
    set.boundary.insert(set.boundary.end(), z.begin(), z.end());
    set.boundary_values.push_back(problem.boundary(phys));
  }
  return set;
}

void require_pinn_degrees(const ModelConfig& config) {
  for (int l = 0; l < config.L; ++l) {
    const auto li = static_cast<std::size_t>(l);
    if (config.p[li] < 3 || config.q[li] < 3) {
      throw Error(ErrorKind::degree_too_low, "PINN needs inner and outer degree >= 3 for C2 smoothness; level " +
                                                 std::to_string(l + 1) + " has p=" + std::to_string(config.p[li]) +
                                                 ", q=" + std::to_string(config.q[li]));
    }
  }
  if (config.O != 1) throw Error(ErrorKind::config_mismatch, "PINN models have a single output");
}

PinnTerms differential_risk(const ExSpliNetModel& model, const DifferentialProblem& problem,
                            const CollocationSet& colloc, double lambda, Exec exec) {
  require_pinn_degrees(model.config());
  if (model.config().D != problem.dim) throw Error(ErrorKind::config_mismatch, "model D does not match the problem dimension");
  const auto scales = problem.laplacian_scales();
  const PinnSamples samples{colloc.interior, colloc.rhs, colloc.boundary, colloc.boundary_values, scales, lambda};
  return pinn_gradient(model, samples, {}, exec);
}

std::vector<double> evaluation_grid(const DifferentialProblem& problem, std::size_t min_inside) {
  std::vector<double> grid;
  if (problem.dim == 1) {
    for (int i = 0; i < 300; ++i) grid.push_back(i / 299.0);
    return grid;
  }
  if (problem.dim != 2) throw Error(ErrorKind::invalid_argument, "evaluation grids exist for D = 1 or 2");
  for (std::size_t n = 2;; ++n) {
    grid.clear();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double z[2] = {static_cast<double>(i) / static_cast<double>(n - 1), static_cast<double>(j) / static_cast<double>(n - 1)};
        const auto phys = problem.to_physical(z);
        if (problem.inside(phys)) grid.insert(grid.end(), z, z + 2);
      }
    }
    if (grid.size() / 2 >= min_inside) return grid;
  }
}

double mse_vs_exact(const ExSpliNetModel& model, const DifferentialProblem& problem, std::span<const double> grid) {
  if (!problem.exact) throw Error(ErrorKind::invalid_argument, "problem has no exact solution");
  const auto dim = static_cast<std::size_t>(problem.dim);
  const std::size_t count = grid.size() / dim;
  std::vector<double> pred(count);
  predict_batch(model, grid, pred, Exec::serial);
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const auto phys = problem.to_physical(grid.subspan(k * dim, dim));
    const double e = pred[k] - problem.exact(phys);
    sum += e * e;
  }
  return sum / static_cast<double>(count);
}

std::pair<ExSpliNetModel, PinnReport> pinn_train(ExSpliNetModel model, const DifferentialProblem& problem,
                                                 const CollocationSet& colloc, const PinnConfig& config,
                                                 const PinnCallback& on_epoch) {
  require_pinn_degrees(model.config());
  if (model.config().D != problem.dim) throw Error(ErrorKind::config_mismatch, "model D does not match the problem dimension");
  if (!(config.learning_rate > 0.0) || config.epochs < 1 || config.batch_size < 0 || !(config.lambda >= 0.0)) {
    throw Error(ErrorKind::invalid_hyperparameter, "PINN needs lr > 0, epochs >= 1, batch >= 0, lambda >= 0");
  }
  const auto start = std::chrono::steady_clock::now();
  const auto scales = problem.laplacian_scales();
  const auto dim = static_cast<std::size_t>(problem.dim);
  TrainConfig adam_cfg;
  adam_cfg.learning_rate = config.learning_rate;
  AdamState adam;
  std::vector<double> params(model.params().begin(), model.params().end());
  std::vector<double> grad(model.size());
  std::vector<double> best_params = params;
  PinnReport report;
  report.params = static_cast<std::int64_t>(model.size());
  double best = std::numeric_limits<double>::infinity();
  const PinnSamples full{colloc.interior, colloc.rhs, colloc.boundary, colloc.boundary_values, scales, config.lambda};

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(colloc.interior_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> batch_x;
  std::vector<double> batch_f;

  auto record = [&](int epoch, const PinnTerms& terms, std::span<const double> at) {
    if (!std::isfinite(terms.total)) throw Error(ErrorKind::numerical_failure, "PINN training diverged at epoch " + std::to_string(epoch));
    report.epochs.push_back({epoch, terms.total, terms.interior, terms.boundary});
    if (terms.total < best) {
      best = terms.total;
      report.best_epoch = epoch;
      best_params.assign(at.begin(), at.end());
    }
    if (on_epoch) on_epoch(report.epochs.back());
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.batch_size == 0 || static_cast<std::size_t>(config.batch_size) >= order.size()) {
      // risk at the parameters the step starts from
      const PinnTerms terms = pinn_gradient(model, full, grad, config.exec);
      record(epoch - 1, terms, params);
      adam_step(adam, params, grad, adam_cfg);
      model.set_params(params);
      continue;
    }
    std::shuffle(order.begin(), order.end(), rng);
    const auto bs = static_cast<std::size_t>(config.batch_size);
    for (std::size_t b = 0; b < order.size(); b += bs) {
      batch_x.clear();
      batch_f.clear();
      for (std::size_t i = b; i < std::min(order.size(), b + bs); ++i) {
        const std::size_t r = order[i];
        batch_x.insert(batch_x.end(), colloc.interior.begin() + static_cast<std::ptrdiff_t>(r * dim),
                       colloc.interior.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim));
        batch_f.push_back(colloc.rhs[r]);
      }
      const PinnSamples part{batch_x, batch_f, colloc.boundary, colloc.boundary_values, scales, config.lambda};
      pinn_gradient(model, part, grad, config.exec);
      adam_step(adam, params, grad, adam_cfg);
      model.set_params(params);
    }
    record(epoch, pinn_gradient(model, full, {}, config.exec), params);
  }
  if (config.batch_size == 0 || static_cast<std::size_t>(config.batch_size) >= order.size()) {
    record(config.epochs, pinn_gradient(model, full, {}, config.exec), params);
  }
  model.set_params(best_params);
  report.final_terms = pinn_gradient(model, full, {}, config.exec);
  if (problem.exact) {
    const auto grid = evaluation_grid(problem);
    report.eval_points = grid.size() / dim;
    report.mse_exact = mse_vs_exact(model, problem, grid);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(model), std::move(report)};
}

std::string solution_csv(const ExSpliNetModel& model, const DifferentialProblem& problem, std::span<const double> grid) {
  const auto dim = static_cast<std::size_t>(problem.dim);
  std::string out;
  for (std::size_t d = 0; d < dim; ++d) out += "x" + std::to_string(d + 1) + ",";
  out += "u_hat,u_exact,error\n";
  char buf[64];
  for (std::size_t k = 0; k < grid.size() / dim; ++k) {
    const auto z = grid.subspan(k * dim, dim);
    const auto phys = problem.to_physical(z);
    const double u = forward(model, z)[0];
    const double exact = problem.exact ? problem.exact(phys) : std::numeric_limits<double>::quiet_NaN();
    for (double v : phys) {
      std::snprintf(buf, sizeof buf, "%.10g,", v);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.6e\n", u, exact, u - exact);
    out += buf;
  }
  return out;
}

}  // namespace exsplinet
