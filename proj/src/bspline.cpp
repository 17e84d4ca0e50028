#include "exsplinet/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "exsplinet/error.hpp"

namespace exsplinet {

namespace {

void check_hyper(int basis_count, int degree) {
  if (degree < 0 || basis_count <= degree) {
    throw Error(ErrorKind::invalid_hyperparameter,
                "need N > p >= 0, got N=" + std::to_string(basis_count) +
                    " p=" + std::to_string(degree));
  }
}

void check_domain(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorKind::out_of_domain, "x=" + std::to_string(x) + " not in [0,1]");
  }
}

double oracle_rec(const KnotVector& kv, int p, int n, double x) {
  if (p == 0) {
    const double a = kv.knot(n);
    const double b = kv.knot(n + 1);
    if (x < 1.0) return (a <= x && x < b) ? 1.0 : 0.0;
    // left limit at the right end: the last nonempty interval owns x = 1
    return (a < 1.0 && b == 1.0) ? 1.0 : 0.0;
  }
  double value = 0.0;
  const double den1 = kv.knot(n + p) - kv.knot(n);
  if (den1 != 0.0) value += (x - kv.knot(n)) / den1 * oracle_rec(kv, p - 1, n, x);
  const double den2 = kv.knot(n + p + 1) - kv.knot(n + 1);
  if (den2 != 0.0) value += (kv.knot(n + p + 1) - x) / den2 * oracle_rec(kv, p - 1, n + 1, x);
  return value;
}

}  // namespace

KnotVector::KnotVector(int basis_count, int degree) : n_(basis_count), p_(degree) {
  check_hyper(basis_count, degree);
  knots_.resize(static_cast<std::size_t>(n_ + p_ + 1));
  const int intervals = n_ - p_;
  for (int i = 0; i < n_ + p_ + 1; ++i) {
    // 0-based position i holds xi_{i+1}
    if (i <= p_) {
      knots_[static_cast<std::size_t>(i)] = 0.0;
    } else if (i >= n_) {
      knots_[static_cast<std::size_t>(i)] = 1.0;
    } else {
      knots_[static_cast<std::size_t>(i)] = static_cast<double>(i - p_) / intervals;
    }
  }
}

int KnotVector::find_span(double x) const {
  check_domain(x);
  if (x >= 1.0) return n_;
  int m = p_ + 1 + static_cast<int>(std::floor(x * (n_ - p_)));
  m = std::clamp(m, p_ + 1, n_);
  while (m > p_ + 1 && x < knot(m)) --m;
  while (m < n_ && x >= knot(m + 1)) ++m;
  return m;
}

KnotVector open_uniform_knots(int basis_count, int degree) { return {basis_count, degree}; }

double basis_oracle(const KnotVector& kv, int n, double x) {
  check_domain(x);
  if (n < 1 || n > kv.basis_count()) {
    throw Error(ErrorKind::index_out_of_range,
                "basis index " + std::to_string(n) + " outside 1.." +
                    std::to_string(kv.basis_count()));
  }
  return oracle_rec(kv, kv.degree(), n, x);
}

std::pair<int, int> support_window(int basis_count, int degree, double x) {
  check_hyper(basis_count, degree);
  if (degree < 1) {
    throw Error(ErrorKind::invalid_hyperparameter, "support_window requires p >= 1");
  }
  check_domain(x);
  const double zeta = (1.0 - x) * degree + x * basis_count;
  int lo = static_cast<int>(std::floor(zeta)) + 1 - degree;
  int hi = static_cast<int>(std::ceil(zeta));
  // widen by the located span so that rounding in zeta never drops a nonzero
  const int m = KnotVector(basis_count, degree).find_span(x);
  lo = std::min(lo, m - degree);
  hi = std::max(hi, m);
  return {std::clamp(lo, 1, basis_count), std::clamp(hi, 1, basis_count)};
}

int eval_basis_derivs(const KnotVector& kv, double x, int max_order, std::span<double> out,
                      std::span<double> scratch) {
  const int p = kv.degree();
  const int m = kv.find_span(x);
  const std::size_t width = static_cast<std::size_t>(p + 1);
  const std::size_t rows = static_cast<std::size_t>(max_order + 1);
  double* prev = scratch.data();
  double* cur = scratch.data() + rows * width;
  std::fill(prev, prev + rows * width, 0.0);
  prev[0] = 1.0;
  for (int d = 1; d <= p; ++d) {
    for (int j = 0; j <= d; ++j) {
      const int n = m - d + j;
      const double den1 = kv.knot(n + d) - kv.knot(n);
      const double den2 = kv.knot(n + d + 1) - kv.knot(n + 1);
      const double inv1 = den1 > 0.0 ? 1.0 / den1 : 0.0;
      const double inv2 = den2 > 0.0 ? 1.0 / den2 : 0.0;
      const bool has_left = j >= 1;
      const bool has_right = j <= d - 1;
      for (std::size_t a = 0; a < rows; ++a) {
        const double left = has_left ? prev[a * width + static_cast<std::size_t>(j - 1)] : 0.0;
        const double right = has_right ? prev[a * width + static_cast<std::size_t>(j)] : 0.0;
        double v;
        if (a == 0) {
          v = (x - kv.knot(n)) * inv1 * left + (kv.knot(n + d + 1) - x) * inv2 * right;
        } else {
          const double left_lower = has_left ? prev[(a - 1) * width + static_cast<std::size_t>(j - 1)] : 0.0;
          const double right_lower = has_right ? prev[(a - 1) * width + static_cast<std::size_t>(j)] : 0.0;
          v = d * (left_lower * inv1 - right_lower * inv2);
        }
        cur[a * width + static_cast<std::size_t>(j)] = v;
      }
    }
    // entries beyond j = d are stale from two degrees ago; clear them
    for (std::size_t a = 0; a < rows; ++a) {
      for (std::size_t j = static_cast<std::size_t>(d + 1); j < width; ++j) cur[a * width + j] = 0.0;
    }
    std::swap(prev, cur);
  }
  std::copy(prev, prev + rows * width, out.begin());
  return m - p;
}

SparseBasisDerivs basis_sparse_derivs(const KnotVector& kv, double x, int max_order) {
  if (max_order < 0) throw Error(ErrorKind::invalid_argument, "negative derivative order");
  SparseBasisDerivs result;
  result.degree = kv.degree();
  result.max_order = max_order;
  const std::size_t size = static_cast<std::size_t>((max_order + 1) * (kv.degree() + 1));
  result.values.assign(size, 0.0);
  std::vector<double> scratch(2 * size);
  result.offset = eval_basis_derivs(kv, x, max_order, result.values, scratch);
  return result;
}

SparseBasis basis_sparse(const KnotVector& kv, double x) {
  SparseBasisDerivs d = basis_sparse_derivs(kv, x, 0);
  return SparseBasis{d.offset, std::move(d.values)};
}

SparseBasis basis_sparse(int basis_count, int degree, double x) {
  return basis_sparse(KnotVector(basis_count, degree), x);
}

std::vector<double> basis_dense(const KnotVector& kv, double x) {
  const SparseBasis sb = basis_sparse(kv, x);
  std::vector<double> dense(static_cast<std::size_t>(kv.basis_count()), 0.0);
  for (std::size_t j = 0; j < sb.values.size(); ++j) {
    dense[static_cast<std::size_t>(sb.offset - 1) + j] = sb.values[j];
  }
  return dense;
}

std::vector<double> basis_dense(int basis_count, int degree, double x) {
  return basis_dense(KnotVector(basis_count, degree), x);
}

Spline1D::Spline1D(std::vector<double> weights, int degree)
    : weights_(std::move(weights)), knots_(static_cast<int>(weights_.size()), degree) {}

double de_boor_eval(const Spline1D& s, double x) {
  const KnotVector& kv = s.knots();
  const int p = kv.degree();
  const int m = kv.find_span(x);
  std::vector<double> w(s.weights().begin() + (m - p - 1), s.weights().begin() + m);
  for (int q = 0; q < p; ++q) {
    for (int j = p; j >= q + 1; --j) {
      const int n = m - p + j;
      const double lo = kv.knot(n);
      const double alpha = (x - lo) / (kv.knot(n + p - q) - lo);
      w[static_cast<std::size_t>(j)] =
          alpha * w[static_cast<std::size_t>(j)] + (1.0 - alpha) * w[static_cast<std::size_t>(j - 1)];
    }
  }
  return w[static_cast<std::size_t>(p)];
}

std::vector<double> greville(int basis_count, int degree) {
  check_hyper(basis_count, degree);
  if (degree < 1) throw Error(ErrorKind::invalid_hyperparameter, "Greville abscissae need p >= 1");
  const KnotVector kv(basis_count, degree);
  std::vector<double> g(static_cast<std::size_t>(basis_count));
  for (int n = 1; n <= basis_count; ++n) {
    double sum = 0.0;
    for (int i = n + 1; i <= n + degree; ++i) sum += kv.knot(i);
    g[static_cast<std::size_t>(n - 1)] = sum / degree;
  }
  return g;
}

std::vector<double> derivative_weights(std::span<const double> weights, const KnotVector& kv) {
  const int p = kv.degree();
  const int n_count = kv.basis_count();
  if (p < 1) throw Error(ErrorKind::degree_too_low, "derivative of a degree-0 spline");
  if (static_cast<int>(weights.size()) != n_count) {
    throw Error(ErrorKind::shape_mismatch, "weight count does not match basis count");
  }
  std::vector<double> c(static_cast<std::size_t>(n_count - 1));
  for (int n = 1; n <= n_count - 1; ++n) {
    const double den = kv.knot(n + p + 1) - kv.knot(n + 1);
    const auto i = static_cast<std::size_t>(n - 1);
    c[i] = den > 0.0 ? p * (weights[i + 1] - weights[i]) / den : 0.0;
  }
  return c;
}

Spline1D derivative_spline(const Spline1D& s) {
  return Spline1D(derivative_weights(s.weights(), s.knots()), s.degree() - 1);
}

std::vector<double> schoenberg_weights(const std::function<double(double)>& f, int basis_count,
                                       int degree) {
  std::vector<double> g = greville(basis_count, degree);
  for (double& v : g) v = f(v);
  return g;
}

}  // namespace exsplinet
