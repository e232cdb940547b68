#pragma once

// Shared helpers for the unit tests: random tensors and a tiny dense-matrix
// toolkit written with plain loops, used as an independent oracle for the
// autodiff primitives.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "grad_check.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace testing {

using sdgl::Rng;
using sdgl::Shape;
using sdgl::Tensor;

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
  Tensor t = Tensor::zeros(shape, requires_grad);
  for (auto& v : t.mutable_data()) v = rng.uniform(lo, hi);
  return t;
}

// Finite-difference settings for deep compositions: the fourth-order stencil
// at a larger step keeps rounding noise below their smallest gradients, and
// gradients at the rounding level are compared absolutely.
inline sdgl::GradCheckOptions composite_check(double tolerance = 1e-4) {
  sdgl::GradCheckOptions o;
  o.step = 1e-4;
  o.tolerance = tolerance;
  o.five_point = true;
  o.rounding_allowance = 10.0;
  return o;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

// Row-major dense matrix with loop-based operations.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}
  double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

  // View of the trailing [r, c] block `index` of a tensor.
  static Mat from(const Tensor& t, std::size_t index = 0) {
    const std::size_t r = t.dim(t.rank() - 2), c = t.dim(t.rank() - 1);
    Mat m(r, c);
    for (std::size_t k = 0; k < r * c; ++k) m.v[k] = t[index * r * c + k];
    return m;
  }
  // Rank-1 tensor as a row vector.
  static Mat row(const Tensor& t) {
    Mat m(1, t.numel());
    for (std::size_t k = 0; k < t.numel(); ++k) m.v[k] = t[k];
    return m;
  }
};

inline Mat mm(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

inline Mat tr(const Mat& a) {
  Mat out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

template <typename F>
Mat map(const Mat& a, F f) {
  Mat out = a;
  for (auto& x : out.v) x = f(x);
  return out;
}

template <typename F>
Mat zip(const Mat& a, const Mat& b, F f) {
  Mat out = a;
  for (std::size_t k = 0; k < a.v.size(); ++k) out.v[k] = f(a.v[k], b.v[k]);
  return out;
}

inline Mat plus(const Mat& a, const Mat& b) { return zip(a, b, [](double x, double y) { return x + y; }); }

// Adds a row vector to every row.
inline Mat add_row(const Mat& a, const Mat& r) {
  Mat out = a;
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out(i, j) += r.v[j];
  return out;
}

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Mat softmax_rows(const Mat& a) {
  Mat out = a;
  for (std::size_t i = 0; i < a.rows; ++i) {
    double mx = a(i, 0);
    for (std::size_t j = 1; j < a.cols; ++j) mx = std::max(mx, a(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += (out(i, j) = std::exp(a(i, j) - mx));
    for (std::size_t j = 0; j < a.cols; ++j) out(i, j) /= s;
  }
  return out;
}

// Row-wise normalization with scale g and shift b (each a 1 x cols row).
inline Mat layer_norm_rows(const Mat& a, const Mat& g, const Mat& b, double eps = 1e-5) {
  Mat out = a;
  for (std::size_t i = 0; i < a.rows; ++i) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) m += a(i, j);
    m /= static_cast<double>(a.cols);
    double var = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) var += (a(i, j) - m) * (a(i, j) - m);
    var /= static_cast<double>(a.cols);
    const double inv = 1.0 / std::sqrt(var + eps * eps);
    for (std::size_t j = 0; j < a.cols; ++j) out(i, j) = (a(i, j) - m) * inv * g.v[j] + b.v[j];
  }
  return out;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.v.size(); ++k) m = std::max(m, std::fabs(a.v[k] - b.v[k]));
  return m;
}

}  // namespace testing
