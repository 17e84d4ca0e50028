#pragma once

// Physics-informed fitting of -lap u = f with Dirichlet data u = g.
//
// Problems are posed on a physical box [lo, hi]^D that is mapped affinely onto
// the model domain [0,1]^D; the Laplacian picks up the factor 1/(hi_d - lo_d)^2
// per axis, passed to the kernels as `scales`.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "exsplinet/kernels.hpp"
#include "exsplinet/model.hpp"

namespace exsplinet {

// Egg-shaped region: with c = (x1 - cx) / a and s = (x2 - cy) / (b exp(k c)),
// the inside is c^2 + s^2 < 1. k skews the width along x1.
struct EggDomain {
  double cx = 0.0;
  double cy = 0.0;
  double a = 1.0;
  double b = 0.75;
  double k = 0.2;

  double level(double x1, double x2) const;
  bool inside(double x1, double x2) const { return level(x1, x2) < 0.0; }
  void boundary_point(double theta, double& x1, double& x2) const;
};

struct DifferentialProblem {
  std::string name;
  int dim = 1;
  std::vector<double> lo;
  std::vector<double> hi;
  std::function<double(std::span<const double>)> rhs;       // physical coordinates
  std::function<double(std::span<const double>)> boundary;  // physical coordinates
  std::function<double(std::span<const double>)> exact;     // may be empty
  std::function<bool(std::span<const double>)> inside;
  // Physical boundary point for a uniform parameter in [0,1).
  std::function<void(double, std::span<double>)> boundary_at;

  std::vector<double> to_unit(std::span<const double> physical) const;
  std::vector<double> to_physical(std::span<const double> unit) const;
  std::vector<double> laplacian_scales() const;
};

// "exp3": -u'' = 4 pi^2 sin(2 pi x) on [0,1], u(0) = u(1) = 0.
// "exp4": -lap u = f on the egg domain with u = sin(pi (x1^2 + x2^2)).
DifferentialProblem make_problem(const std::string& name, const EggDomain& egg = {});

// Points are stored in model coordinates [0,1]^D.
struct CollocationSet {
  int dim = 1;
  std::vector<double> interior;
  std::vector<double> rhs;
  std::vector<double> boundary;
  std::vector<double> boundary_values;

  std::size_t interior_count() const { return interior.size() / static_cast<std::size_t>(dim); }
  std::size_t boundary_count() const { return boundary.size() / static_cast<std::size_t>(dim); }
};

// Interior by seeded rejection sampling on the box; boundary from uniform
// parameters (1D: the endpoints, alternating).
CollocationSet sample_collocation(const DifferentialProblem& problem, std::size_t interior, std::size_t boundary,
                                  std::uint64_t seed);

void require_pinn_degrees(const ModelConfig& config);

PinnTerms differential_risk(const ExSpliNetModel& model, const DifferentialProblem& problem,
                            const CollocationSet& colloc, double lambda, Exec exec = Exec::parallel);

struct PinnConfig {
  double learning_rate = 1e-3;
  int epochs = 5000;
  double lambda = 1e4;
  int batch_size = 0;  // 0: full batch
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
};

struct PinnEpoch {
  int epoch = 0;
  double total = 0.0;
  double interior = 0.0;
  double boundary = 0.0;
};

struct PinnReport {
  std::vector<PinnEpoch> epochs;
  PinnTerms final_terms;
  int best_epoch = 0;
  double mse_exact = 0.0;
  std::size_t eval_points = 0;
  double seconds = 0.0;
  std::int64_t params = 0;
};

// Uniform evaluation points in model coordinates: 300 on the interval in 1D,
// and in 2D the smallest n x n box grid with at least `min_inside` inside points.
std::vector<double> evaluation_grid(const DifferentialProblem& problem, std::size_t min_inside = 900);

double mse_vs_exact(const ExSpliNetModel& model, const DifferentialProblem& problem, std::span<const double> grid);

using PinnCallback = std::function<void(const PinnEpoch&)>;

// Adam on the differential risk. Returns the parameters with the lowest
// differential risk seen; every epoch's risk is recorded.
std::pair<ExSpliNetModel, PinnReport> pinn_train(ExSpliNetModel model, const DifferentialProblem& problem,
                                                 const CollocationSet& colloc, const PinnConfig& config,
                                                 const PinnCallback& on_epoch = {});

// Rows of (x_1..x_D physical, u_hat, u_exact, error) on the grid.
std::string solution_csv(const ExSpliNetModel& model, const DifferentialProblem& problem, std::span<const double> grid);

}  // namespace exsplinet
