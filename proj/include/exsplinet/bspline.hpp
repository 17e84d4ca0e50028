#pragma once

// Univariate B-splines on open-uniform knot vectors over [0,1].
//
// Basis indices are 1-based in every public signature (n = 1..N, offsets
// returned by the sparse evaluators), matching the on-disk formats.
// Evaluation uses the half-open convention [xi_m, xi_{m+1}) except at x = 1,
// where every basis function takes its limit from the left.

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace exsplinet {

class KnotVector {
 public:
  KnotVector(int basis_count, int degree);

  int basis_count() const noexcept { return n_; }
  int degree() const noexcept { return p_; }
  std::span<const double> knots() const noexcept { return knots_; }

  // xi_i with 1 <= i <= N + p + 1.
  double knot(int i) const noexcept { return knots_[static_cast<std::size_t>(i - 1)]; }

  // Index m (1-based) with xi_m <= x < xi_{m+1} and p+1 <= m <= N.
  // x = 1 maps to m = N so that evaluation yields the left limit.
  int find_span(double x) const;

 private:
  int n_;
  int p_;
  std::vector<double> knots_;
};

KnotVector open_uniform_knots(int basis_count, int degree);

struct SparseBasis {
  int offset = 1;               // 1-based index of values[0]
  std::vector<double> values;   // exactly p+1 entries
};

// Local basis values and derivatives at a point: value(a, j) is the a-th
// (right-hand) derivative of B_{offset+j}.
struct SparseBasisDerivs {
  int offset = 1;
  int degree = 0;
  int max_order = 0;
  std::vector<double> values;  // (max_order+1) x (degree+1), row-major by order

  double value(int order, int j) const {
    return values[static_cast<std::size_t>(order * (degree + 1) + j)];
  }
  std::span<const double> order(int a) const {
    return std::span<const double>(values).subspan(static_cast<std::size_t>(a * (degree + 1)),
                                                   static_cast<std::size_t>(degree + 1));
  }
};

// Cox-de Boor recursion evaluated literally; slow, used as reference.
double basis_oracle(const KnotVector& kv, int n, double x);

// Index window [lo, hi] (1-based, inclusive) containing every nonzero basis
// function at x. Requires p >= 1.
std::pair<int, int> support_window(int basis_count, int degree, double x);

SparseBasis basis_sparse(const KnotVector& kv, double x);
SparseBasis basis_sparse(int basis_count, int degree, double x);

// Local values plus derivatives up to max_order. Orders above the degree are zero.
SparseBasisDerivs basis_sparse_derivs(const KnotVector& kv, double x, int max_order);

// Allocation-free variant: out must hold (max_order+1)*(p+1) doubles and
// scratch 2*(max_order+1)*(p+1) doubles. Returns the 1-based offset.
int eval_basis_derivs(const KnotVector& kv, double x, int max_order, std::span<double> out,
                      std::span<double> scratch);

std::vector<double> basis_dense(const KnotVector& kv, double x);
std::vector<double> basis_dense(int basis_count, int degree, double x);

class Spline1D {
 public:
  Spline1D(std::vector<double> weights, int degree);

  const KnotVector& knots() const noexcept { return knots_; }
  std::span<const double> weights() const noexcept { return weights_; }
  int basis_count() const noexcept { return knots_.basis_count(); }
  int degree() const noexcept { return knots_.degree(); }

 private:
  std::vector<double> weights_;
  KnotVector knots_;
};

// de Boor's triangular scheme, O(p^2) per point.
double de_boor_eval(const Spline1D& s, double x);

std::vector<double> greville(int basis_count, int degree);

// Degree p-1 spline on the (N-1, p-1) open-uniform knots equal to the
// right-hand derivative of s.
Spline1D derivative_spline(const Spline1D& s);

// Derivative weights only: c_n = p (w_{n+1} - w_n) / (xi_{n+p+1} - xi_{n+1}).
std::vector<double> derivative_weights(std::span<const double> weights, const KnotVector& kv);

// Schoenberg quasi-interpolant coefficients f(xi*_n).
std::vector<double> schoenberg_weights(const std::function<double(double)>& f, int basis_count,
                                       int degree);

}  // namespace exsplinet
