#pragma once

// Batched risk/gradient kernels. Each comes in a serial reference form and an
// OpenMP form. The parallel form splits samples into chunks whose size depends
// only on the sample count, accumulates each chunk into its own buffer and
// combines the buffers by a fixed pairwise tree, so its result does not depend
// on the number of threads.

#include <cstddef>
#include <span>

#include "exsplinet/model.hpp"

namespace exsplinet {

enum class Exec { serial, parallel };

// Row-major sample block. When `indices` is non-empty only those rows are used,
// in that order.
struct SampleView {
  std::span<const double> inputs;   // rows x D
  std::span<const double> targets;  // rows x O
  std::span<const std::size_t> indices;

  std::size_t count(int dim) const {
    return indices.empty() ? inputs.size() / static_cast<std::size_t>(dim) : indices.size();
  }
  std::size_t row(std::size_t k) const { return indices.empty() ? k : indices[k]; }
};

// Mean squared error over the view. If grad is non-empty it is overwritten by
// the raw-parameter gradient.
double risk_gradient(const ExSpliNetModel& model, const SampleView& samples, std::span<double> grad, Exec exec);

// Model outputs for every row, rows x O.
void predict_batch(const ExSpliNetModel& model, std::span<const double> inputs, std::span<double> outputs, Exec exec);

struct PinnSamples {
  std::span<const double> interior;  // K_i x D, in [0,1]^D
  std::span<const double> rhs;       // f at interior points (already in model coordinates)
  std::span<const double> boundary;  // K_b x D
  std::span<const double> boundary_values;
  std::span<const double> scales;    // Laplacian axis weights per input dimension
  double lambda = 1e4;
};

struct PinnTerms {
  double total = 0.0;
  double interior = 0.0;
  double boundary = 0.0;
};

// Differential risk mean((-lap u - f)^2) + lambda mean((u - g)^2); single output.
// If grad is non-empty it is overwritten by the raw-parameter gradient.
PinnTerms pinn_gradient(const ExSpliNetModel& model, const PinnSamples& samples, std::span<double> grad, Exec exec);

// Number of chunks used by the parallel kernels for `count` samples.
std::size_t chunk_count(std::size_t count);

void set_thread_count(int threads);

}  // namespace exsplinet
