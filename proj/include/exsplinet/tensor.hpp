#pragma once

// L-variate tensor-product B-splines.
//
// Weight tensors are stored flat in lexicographic order with axis 0 slowest:
//   flat(m_0, ..., m_{L-1}) = ((m_0 * M_1 + m_1) * M_2 + m_2) ...
// (0-based m here; the matching basis index is m + 1). This is the Kronecker
// order of the tensor-product basis vector and the checkpoint order.

#include <cstddef>
#include <span>
#include <vector>

#include "exsplinet/bspline.hpp"

namespace exsplinet {

struct WeightTensor {
  std::vector<int> shape;
  std::vector<double> values;

  static WeightTensor zeros(std::vector<int> shape);
  static WeightTensor filled(std::vector<int> shape, double value);

  std::size_t size() const noexcept { return values.size(); }
  std::vector<std::size_t> strides() const;
  // index holds 0-based positions per axis
  double& at(std::span<const int> index);
  double at(std::span<const int> index) const;
};

std::size_t shape_product(std::span<const int> shape);

struct TensorBasisSparse {
  std::vector<SparseBasis> axes;

  // Product of per-axis values for 1-based multi-index; 0 outside the windows.
  double entry(std::span<const int> index) const;
  // Full Kronecker-ordered vector for the given per-axis basis counts.
  std::vector<double> expand(std::span<const int> basis_counts) const;
};

TensorBasisSparse tensor_basis(std::span<const int> basis_counts, std::span<const int> degrees,
                               std::span<const double> y);

double tensor_dot(const WeightTensor& w, const TensorBasisSparse& b);

struct AxisDerivative {
  WeightTensor weights;
  std::vector<int> basis_counts;
  std::vector<int> degrees;
};

// Weights of d/dy_axis as a tensor spline with basis count and degree
// lowered by one along `axis` (0-based).
AxisDerivative axis_derivative_weights(const WeightTensor& w, std::span<const int> degrees,
                                       int axis);

// Local contraction kernels used on the hot paths. For each axis a, `first[a]`
// is the 0-based start of the window, `width[a]` its length and `factors[a]`
// points at width[a] values. `strides` are the flat strides of the full tensor.
double contract_local(std::span<const double> w, std::span<const std::size_t> strides,
                      std::span<const int> first, std::span<const int> width,
                      std::span<const double* const> factors);

// g[cell] += scale * prod_a factors[a][j_a] over the local window.
void scatter_local(std::span<double> g, std::span<const std::size_t> strides,
                   std::span<const int> first, std::span<const int> width,
                   std::span<const double* const> factors, double scale);

}  // namespace exsplinet
