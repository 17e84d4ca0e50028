// Serial reference kernels vs their OpenMP counterparts on experiment-sized batches.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "exsplinet/dataio.hpp"
#include "exsplinet/kernels.hpp"
#include "exsplinet/model.hpp"
#include "exsplinet/pinn.hpp"

using namespace exsplinet;

namespace {

ModelConfig uniform(int D, int O, int T, int L, int N, int M, int p, int q) {
  const auto n = static_cast<std::size_t>(L);
  return ModelConfig{D, O, T, L, std::vector<int>(n, N), std::vector<int>(n, M), std::vector<int>(n, p), std::vector<int>(n, q)};
}

double median_seconds(int reps, const std::function<void()>& body) {
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    body();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

void report(const std::string& name, std::size_t samples, double serial, double parallel, double diff) {
  std::printf("%-28s %8zu %12.3f %12.3f %8.2fx %10.2e\n", name.c_str(), samples, serial * 1e3, parallel * 1e3, serial / parallel, diff);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel benchmark: serial reference vs OpenMP"};
  int reps = 5;
  int threads = 0;
  app.add_option("--reps", reps, "Repetitions per timing (median is reported)")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "Worker thread cap (0 = runtime default)")->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);
  set_thread_count(threads);

  std::printf("threads: %d\n", threads > 0 ? threads : omp_get_max_threads());
  std::printf("%-28s %8s %12s %12s %9s %10s\n", "kernel", "samples", "serial ms", "parallel ms", "speedup", "max diff");

  struct Case {
    std::string name;
    ModelConfig config;
    std::string data;
    std::size_t size;
  };
  const std::vector<Case> cases{
      {"risk exp1 (5750 params)", uniform(1, 1, 5, 3, 50, 10, 3, 3), "exp1", 5000},
      {"risk exp2 (1300 params)", uniform(4, 1, 20, 2, 5, 5, 3, 3), "exp2", 10000},
  };
  for (const Case& c : cases) {
    const ExSpliNetModel m = init_random(c.config, 1);
    const Dataset d = synthetic(c.data, c.size, 1, 1).first;
    const SampleView view{d.inputs, d.targets, {}};
    std::vector<double> gs(m.size()), gp(m.size());
    const double ts = median_seconds(reps, [&] { risk_gradient(m, view, gs, Exec::serial); });
    const double tp = median_seconds(reps, [&] { risk_gradient(m, view, gp, Exec::parallel); });
    report(c.name, c.size, ts, tp, max_diff(gs, gp));

    std::vector<double> os(d.size()), op(d.size());
    const double ps = median_seconds(reps, [&] { predict_batch(m, d.inputs, os, Exec::serial); });
    const double pp = median_seconds(reps, [&] { predict_batch(m, d.inputs, op, Exec::parallel); });
    report("predict " + c.data, c.size, ps, pp, max_diff(os, op));
  }

  for (const char* name : {"exp3", "exp4"}) {
    const DifferentialProblem problem = make_problem(name);
    const bool one_d = problem.dim == 1;
    const CollocationSet s = sample_collocation(problem, one_d ? 998 : 2062, one_d ? 2 : 600, 1);
    const ExSpliNetModel m = init_random(uniform(problem.dim, 1, 10, 2, 5, 10, 3, 3), 1);
    const auto scales = problem.laplacian_scales();
    const PinnSamples ps{s.interior, s.rhs, s.boundary, s.boundary_values, scales, 1e4};
    std::vector<double> gs(m.size()), gp(m.size());
    const double ts = median_seconds(reps, [&] { pinn_gradient(m, ps, gs, Exec::serial); });
    const double tp = median_seconds(reps, [&] { pinn_gradient(m, ps, gp, Exec::parallel); });
    report(std::string("pinn ") + name, s.interior_count() + s.boundary_count(), ts, tp, max_diff(gs, gp));
  }
  return 0;
}
