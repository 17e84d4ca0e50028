#include "exsplinet/kernels.hpp"

#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "exsplinet/autodiff.hpp"
#include "exsplinet/error.hpp"

namespace exsplinet {

namespace {

std::size_t chunk_size(std::size_t count) { return std::max<std::size_t>(16, (count + 63) / 64); }

// Buffers hold [gradient..., scalar sums...]. Each chunk runs body(begin, end,
// evaluator, buffer) serially; the buffers are then combined pairwise.
template <typename MakeEval, typename Body>
std::vector<double> chunked_sum(std::size_t count, std::size_t width, MakeEval make_eval, Body body) {
  const std::size_t size = chunk_size(count);
  const std::size_t chunks = (count + size - 1) / size;
  std::vector<std::vector<double>> buffers(chunks);
  std::vector<int> failed(chunks, 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    try {
      auto& buf = buffers[static_cast<std::size_t>(c)];
      buf.assign(width, 0.0);
      auto ev = make_eval();
      const std::size_t begin = static_cast<std::size_t>(c) * size;
      body(begin, std::min(count, begin + size), ev, buf);
    } catch (...) {
      failed[static_cast<std::size_t>(c)] = 1;
    }
  }
  if (std::find(failed.begin(), failed.end(), 1) != failed.end()) {
    // rerun serially so the original exception propagates with its message
    std::vector<double> buf(width, 0.0);
    auto ev = make_eval();
    body(0, count, ev, buf);
    return buf;
  }
  for (std::size_t stride = 1; stride < chunks; stride *= 2) {
    for (std::size_t i = 0; i + stride < chunks; i += 2 * stride) {
      auto& dst = buffers[i];
      const auto& src = buffers[i + stride];
      for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
    }
  }
  return chunks == 0 ? std::vector<double>(width, 0.0) : std::move(buffers[0]);
}

template <typename MakeEval, typename Body>
std::vector<double> serial_sum(std::size_t count, std::size_t width, MakeEval make_eval, Body body) {
  std::vector<double> buf(width, 0.0);
  auto ev = make_eval();
  body(0, count, ev, buf);
  return buf;
}

template <typename MakeEval, typename Body>
std::vector<double> run(Exec exec, std::size_t count, std::size_t width, MakeEval make_eval, Body body) {
  return exec == Exec::parallel ? chunked_sum(count, width, make_eval, body) : serial_sum(count, width, make_eval, body);
}

}  // namespace

std::size_t chunk_count(std::size_t count) {
  const std::size_t size = chunk_size(count);
  return (count + size - 1) / size;
}

void set_thread_count(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

double risk_gradient(const ExSpliNetModel& model, const SampleView& samples, std::span<double> grad, Exec exec) {
  const ModelConfig& c = model.config();
  const auto dim = static_cast<std::size_t>(c.D);
  const auto outputs = static_cast<std::size_t>(c.O);
  const std::size_t count = samples.count(c.D);
  if (count == 0) throw Error(ErrorKind::empty_dataset, "risk over an empty batch");
  if (samples.targets.size() * dim != samples.inputs.size() * outputs) {
    throw Error(ErrorKind::shape_mismatch, "targets do not match the model output arity");
  }
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != model.size()) throw Error(ErrorKind::shape_mismatch, "gradient buffer has wrong size");
  const std::size_t p = want_grad ? model.size() : 0;
  const double inv = 1.0 / static_cast<double>(count);

  auto make_eval = [&] { return Evaluator(model, 0, want_grad); };
  auto body = [&](std::size_t begin, std::size_t end, Evaluator& ev, std::vector<double>& buf) {
    std::vector<double> coeff(outputs);
    double risk = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t r = samples.row(k);
      ev.evaluate(samples.inputs.subspan(r * dim, dim));
      for (std::size_t o = 0; o < outputs; ++o) {
        const double e = ev.output(static_cast<int>(o)) - samples.targets[r * outputs + o];
        risk += e * e;
        coeff[o] = 2.0 * e * inv;
      }
      if (want_grad) ev.add_output_gradient(coeff, std::span<double>(buf).first(p));
    }
    buf[p] += risk;
  };
  std::vector<double> total = run(exec, count, p + 1, make_eval, body);
  if (want_grad) {
    std::copy(total.begin(), total.begin() + static_cast<std::ptrdiff_t>(p), grad.begin());
    chain_reparam(model, grad);
  }
  return total[p] * inv;
}

void predict_batch(const ExSpliNetModel& model, std::span<const double> inputs, std::span<double> outputs, Exec exec) {
  const auto dim = static_cast<std::size_t>(model.config().D);
  const auto outs = static_cast<std::size_t>(model.config().O);
  const std::size_t count = inputs.size() / dim;
  if (outputs.size() != count * outs) throw Error(ErrorKind::shape_mismatch, "output buffer has wrong size");
  auto work = [&](std::size_t begin, std::size_t end) {
    Evaluator ev(model, 0, false);
    for (std::size_t k = begin; k < end; ++k) {
      ev.evaluate(inputs.subspan(k * dim, dim));
      for (std::size_t o = 0; o < outs; ++o) outputs[k * outs + o] = ev.output(static_cast<int>(o));
    }
  };
  if (exec == Exec::serial) {
    work(0, count);
    return;
  }
  const std::size_t size = chunk_size(count);
  const std::size_t chunks = (count + size - 1) / size;
  std::vector<int> failed(chunks, 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    try {
      const std::size_t begin = static_cast<std::size_t>(c) * size;
      work(begin, std::min(count, begin + size));
    } catch (...) {
      failed[static_cast<std::size_t>(c)] = 1;
    }
  }
  if (std::find(failed.begin(), failed.end(), 1) != failed.end()) work(0, count);
}

PinnTerms pinn_gradient(const ExSpliNetModel& model, const PinnSamples& samples, std::span<double> grad, Exec exec) {
  const ModelConfig& c = model.config();
  if (c.O != 1) throw Error(ErrorKind::config_mismatch, "PINN models have a single output");
  const auto dim = static_cast<std::size_t>(c.D);
  const std::size_t ki = samples.interior.size() / dim;
  const std::size_t kb = samples.boundary.size() / dim;
  if (ki == 0 || kb == 0) throw Error(ErrorKind::empty_dataset, "PINN needs interior and boundary points");
  if (samples.rhs.size() != ki || samples.boundary_values.size() != kb || samples.scales.size() != dim) {
    throw Error(ErrorKind::shape_mismatch, "PINN sample arrays are inconsistent");
  }
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != model.size()) throw Error(ErrorKind::shape_mismatch, "gradient buffer has wrong size");
  const std::size_t p = want_grad ? model.size() : 0;
  const double inv_i = 1.0 / static_cast<double>(ki);
  const double inv_b = 1.0 / static_cast<double>(kb);
  const double lambda = samples.lambda;

  // Interior rows come first, then boundary rows, in one index space.
  auto make_eval = [&] { return Evaluator(model, 2, want_grad); };
  auto body = [&](std::size_t begin, std::size_t end, Evaluator& ev, std::vector<double>& buf) {
    double coeff[1];
    double sum_i = 0.0;
    double sum_b = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      if (k < ki) {
        ev.evaluate(samples.interior.subspan(k * dim, dim));
        const double r = -ev.laplacian(0, samples.scales) - samples.rhs[k];
        sum_i += r * r;
        if (want_grad) {
          coeff[0] = -2.0 * r * inv_i;
          ev.add_laplacian_gradient(coeff, samples.scales, std::span<double>(buf).first(p));
        }
      } else {
        const std::size_t b = k - ki;
        ev.evaluate(samples.boundary.subspan(b * dim, dim));
        const double r = ev.output(0) - samples.boundary_values[b];
        sum_b += r * r;
        if (want_grad) {
          coeff[0] = 2.0 * lambda * r * inv_b;
          ev.add_output_gradient(coeff, std::span<double>(buf).first(p));
        }
      }
    }
    buf[p] += sum_i;
    buf[p + 1] += sum_b;
  };
  std::vector<double> total = run(exec, ki + kb, p + 2, make_eval, body);
  if (want_grad) {
    std::copy(total.begin(), total.begin() + static_cast<std::ptrdiff_t>(p), grad.begin());
    chain_reparam(model, grad);
  }
  PinnTerms terms;
  terms.interior = total[p] * inv_i;
  terms.boundary = total[p + 1] * inv_b;
  terms.total = terms.interior + lambda * terms.boundary;
  return terms;
}

}  // namespace exsplinet
