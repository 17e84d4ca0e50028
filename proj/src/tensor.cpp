#include "exsplinet/tensor.hpp"

#include <string>

#include "exsplinet/error.hpp"

namespace exsplinet {

namespace {

std::vector<std::size_t> strides_of(std::span<const int> shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t a = shape.size(); a-- > 1;) s[a - 1] = s[a] * static_cast<std::size_t>(shape[a]);
  return s;
}

double contract_rec(const double* w, const std::size_t* strides, const int* width,
                    const double* const* factors, std::size_t axes, std::size_t axis) {
  const double* f = factors[axis];
  const std::size_t stride = strides[axis];
  double sum = 0.0;
  if (axis + 1 == axes) {
    for (int j = 0; j < width[axis]; ++j) sum += w[static_cast<std::size_t>(j) * stride] * f[j];
    return sum;
  }
  for (int j = 0; j < width[axis]; ++j) {
    if (f[j] == 0.0) continue;
    sum += f[j] * contract_rec(w + static_cast<std::size_t>(j) * stride, strides, width, factors,
                               axes, axis + 1);
  }
  return sum;
}

void scatter_rec(double* g, const std::size_t* strides, const int* width,
                 const double* const* factors, std::size_t axes, std::size_t axis, double scale) {
  const double* f = factors[axis];
  const std::size_t stride = strides[axis];
  if (axis + 1 == axes) {
    for (int j = 0; j < width[axis]; ++j) g[static_cast<std::size_t>(j) * stride] += scale * f[j];
    return;
  }
  for (int j = 0; j < width[axis]; ++j) {
    if (f[j] == 0.0) continue;
    scatter_rec(g + static_cast<std::size_t>(j) * stride, strides, width, factors, axes, axis + 1,
                scale * f[j]);
  }
}

std::size_t local_base(std::span<const std::size_t> strides, std::span<const int> first) {
  std::size_t base = 0;
  for (std::size_t a = 0; a < strides.size(); ++a) base += static_cast<std::size_t>(first[a]) * strides[a];
  return base;
}

}  // namespace

std::size_t shape_product(std::span<const int> shape) {
  std::size_t n = 1;
  for (int m : shape) n *= static_cast<std::size_t>(m);
  return n;
}

WeightTensor WeightTensor::zeros(std::vector<int> shape) { return filled(std::move(shape), 0.0); }

WeightTensor WeightTensor::filled(std::vector<int> shape, double value) {
  WeightTensor w;
  w.values.assign(shape_product(shape), value);
  w.shape = std::move(shape);
  return w;
}

std::vector<std::size_t> WeightTensor::strides() const { return strides_of(shape); }

double& WeightTensor::at(std::span<const int> index) {
  const auto s = strides();
  std::size_t flat = 0;
  for (std::size_t a = 0; a < s.size(); ++a) flat += static_cast<std::size_t>(index[a]) * s[a];
  return values[flat];
}

double WeightTensor::at(std::span<const int> index) const {
  return const_cast<WeightTensor*>(this)->at(index);
}

double TensorBasisSparse::entry(std::span<const int> index) const {
  double product = 1.0;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const int j = index[a] - axes[a].offset;
    if (j < 0 || j >= static_cast<int>(axes[a].values.size())) return 0.0;
    product *= axes[a].values[static_cast<std::size_t>(j)];
  }
  return product;
}

std::vector<double> TensorBasisSparse::expand(std::span<const int> basis_counts) const {
  WeightTensor dense = WeightTensor::zeros({basis_counts.begin(), basis_counts.end()});
  std::vector<int> first(axes.size());
  std::vector<int> width(axes.size());
  std::vector<const double*> factors(axes.size());
  for (std::size_t a = 0; a < axes.size(); ++a) {
    first[a] = axes[a].offset - 1;
    width[a] = static_cast<int>(axes[a].values.size());
    factors[a] = axes[a].values.data();
  }
  const auto s = dense.strides();
  scatter_local(dense.values, s, first, width, factors, 1.0);
  return dense.values;
}

TensorBasisSparse tensor_basis(std::span<const int> basis_counts, std::span<const int> degrees,
                               std::span<const double> y) {
  if (basis_counts.size() != degrees.size() || degrees.size() != y.size()) {
    throw Error(ErrorKind::shape_mismatch, "tensor_basis: M, q, y lengths differ");
  }
  TensorBasisSparse b;
  b.axes.reserve(y.size());
  for (std::size_t a = 0; a < y.size(); ++a) b.axes.push_back(basis_sparse(basis_counts[a], degrees[a], y[a]));
  return b;
}

double tensor_dot(const WeightTensor& w, const TensorBasisSparse& b) {
  if (w.shape.size() != b.axes.size()) {
    throw Error(ErrorKind::shape_mismatch, "tensor_dot: rank mismatch");
  }
  std::vector<int> first(b.axes.size());
  std::vector<int> width(b.axes.size());
  std::vector<const double*> factors(b.axes.size());
  for (std::size_t a = 0; a < b.axes.size(); ++a) {
    const int span_end = b.axes[a].offset - 1 + static_cast<int>(b.axes[a].values.size());
    if (span_end > w.shape[a]) throw Error(ErrorKind::shape_mismatch, "tensor_dot: shape mismatch");
    first[a] = b.axes[a].offset - 1;
    width[a] = static_cast<int>(b.axes[a].values.size());
    factors[a] = b.axes[a].values.data();
  }
  return contract_local(w.values, w.strides(), first, width, factors);
}

AxisDerivative axis_derivative_weights(const WeightTensor& w, std::span<const int> degrees,
                                       int axis) {
  const std::size_t rank = w.shape.size();
  if (axis < 0 || static_cast<std::size_t>(axis) >= rank || degrees.size() != rank) {
    throw Error(ErrorKind::shape_mismatch, "axis_derivative_weights: bad axis or degree list");
  }
  const auto ax = static_cast<std::size_t>(axis);
  if (degrees[ax] < 1) {
    throw Error(ErrorKind::degree_too_low,
                "axis " + std::to_string(axis) + " has degree " + std::to_string(degrees[ax]));
  }
  AxisDerivative out;
  out.basis_counts = w.shape;
  out.basis_counts[ax] -= 1;
  out.degrees.assign(degrees.begin(), degrees.end());
  out.degrees[ax] -= 1;
  out.weights = WeightTensor::zeros(out.basis_counts);

  const KnotVector kv(w.shape[ax], degrees[ax]);
  const auto in_strides = w.strides();
  const auto out_strides = out.weights.strides();
  const std::size_t fibers = w.size() / static_cast<std::size_t>(w.shape[ax]);
  std::vector<double> fiber(static_cast<std::size_t>(w.shape[ax]));
  std::vector<int> idx(rank, 0);  // odometer over all axes except `ax`
  for (std::size_t f = 0; f < fibers; ++f) {
    std::size_t in_base = 0;
    std::size_t out_base = 0;
    for (std::size_t a = 0; a < rank; ++a) {
      in_base += static_cast<std::size_t>(idx[a]) * in_strides[a];
      out_base += static_cast<std::size_t>(idx[a]) * out_strides[a];
    }
    for (int m = 0; m < w.shape[ax]; ++m) {
      fiber[static_cast<std::size_t>(m)] = w.values[in_base + static_cast<std::size_t>(m) * in_strides[ax]];
    }
    const std::vector<double> c = derivative_weights(fiber, kv);
    for (std::size_t m = 0; m < c.size(); ++m) out.weights.values[out_base + m * out_strides[ax]] = c[m];
    for (std::size_t a = rank; a-- > 0;) {
      if (a == ax) continue;
      if (++idx[a] < w.shape[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

double contract_local(std::span<const double> w, std::span<const std::size_t> strides,
                      std::span<const int> first, std::span<const int> width,
                      std::span<const double* const> factors) {
  if (strides.empty()) return w.empty() ? 0.0 : w[0];
  return contract_rec(w.data() + local_base(strides, first), strides.data(), width.data(),
                      factors.data(), strides.size(), 0);
}

void scatter_local(std::span<double> g, std::span<const std::size_t> strides,
                   std::span<const int> first, std::span<const int> width,
                   std::span<const double* const> factors, double scale) {
  if (strides.empty()) return;
  scatter_rec(g.data() + local_base(strides, first), strides.data(), width.data(), factors.data(),
              strides.size(), 0, scale);
}

}  // namespace exsplinet
