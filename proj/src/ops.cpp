#include "ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace sdgl::ops {

namespace {

using ImplPtr = std::shared_ptr<TensorImpl>;

std::vector<double>& grad_of(const ImplPtr& t) {
  if (t->grad.empty()) t->grad.assign(t->data.size(), 0.0);
  return t->grad;
}

void check_finite(const char* op, const Tensor& t) {
  if (!debug_checks() || !t.defined()) return;
  for (double v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + ": non-finite input of shape " + shape_str(t.shape()));
    }
  }
}

// Active tape if any input participates in differentiation.
Tape* recording(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = Tape::active();
  if (tape == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return tape;
  }
  return nullptr;
}

[[noreturn]] void dim_error(const char* op, const std::string& what) {
  throw DimensionError(std::string(op) + ": " + what);
}

std::string shapes2(const Tensor& a, const Tensor& b) {
  return shape_str(a.shape()) + " vs " + shape_str(b.shape());
}

// ---------------------------------------------------------------------------
// Broadcasting

struct Broadcast {
  Shape out;
  std::vector<std::size_t> stride_a;  // per output axis, 0 where broadcast
  std::vector<std::size_t> stride_b;
  bool same = false;
};

std::vector<std::size_t> aligned_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t stride = 1;
  const std::size_t offset = out.size() - in.size();
  for (std::size_t k = in.size(); k-- > 0;) {
    strides[k + offset] = in[k] == 1 ? 0 : stride;
    stride *= in[k];
  }
  return strides;
}

Broadcast broadcast(const char* op, const Tensor& a, const Tensor& b) {
  Broadcast bc;
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa == sb) {
    bc.out = sa;
    bc.same = true;
    return bc;
  }
  const std::size_t rank = std::max(sa.size(), sb.size());
  bc.out.assign(rank, 1);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::size_t da = k + sa.size() >= rank ? sa[k + sa.size() - rank] : 1;
    const std::size_t db = k + sb.size() >= rank ? sb[k + sb.size() - rank] : 1;
    if (da != db && da != 1 && db != 1) dim_error(op, "cannot broadcast " + shapes2(a, b));
    bc.out[k] = std::max(da, db);
  }
  bc.stride_a = aligned_strides(sa, bc.out);
  bc.stride_b = aligned_strides(sb, bc.out);
  return bc;
}

template <typename Fn>
void for_each_broadcast(const Broadcast& bc, Fn&& fn) {
  const std::size_t n = shape_numel(bc.out);
  if (bc.same) {
    for (std::size_t i = 0; i < n; ++i) fn(i, i, i);
    return;
  }
  const std::size_t rank = bc.out.size();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t o = 0; o < n; ++o) {
    fn(o, ia, ib);
    for (std::size_t k = rank; k-- > 0;) {
      ++idx[k];
      ia += bc.stride_a[k];
      ib += bc.stride_b[k];
      if (idx[k] < bc.out[k]) break;
      ia -= bc.stride_a[k] * idx[k];
      ib -= bc.stride_b[k] * idx[k];
      idx[k] = 0;
    }
  }
}

template <typename Fwd, typename DA, typename DB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, DA da, DB db) {
  check_finite(op, a);
  check_finite(op, b);
  Broadcast bc = broadcast(op, a, b);
  std::vector<double> out(shape_numel(bc.out));
  const auto& xa = a.impl()->data;
  const auto& xb = b.impl()->data;
  for_each_broadcast(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) {
    out[o] = fwd(xa[ia], xb[ib]);
  });
  Tape* tape = recording({&a, &b});
  Tensor result(bc.out, std::move(out), tape != nullptr);
  if (tape) {
    tape->record([ai = a.impl(), bi = b.impl(), oi = result.impl(), bc = std::move(bc), da, db] {
      if (oi->grad.empty()) return;
      const auto& g = oi->grad;
      if (ai->requires_grad) {
        auto& ga = grad_of(ai);
        for_each_broadcast(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) {
          ga[ia] += da(g[o], ai->data[ia], bi->data[ib]);
        });
      }
      if (bi->requires_grad) {
        auto& gb = grad_of(bi);
        for_each_broadcast(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) {
          gb[ib] += db(g[o], ai->data[ia], bi->data[ib]);
        });
      }
    });
  }
  return result;
}

// Unary op whose derivative is expressed through input x and output y.
template <typename Fwd, typename Deriv>
Tensor unary(const char* op, const Tensor& x, Fwd fwd, Deriv deriv) {
  check_finite(op, x);
  const auto& xs = x.impl()->data;
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = fwd(xs[i]);
  Tape* tape = recording({&x});
  Tensor result(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    tape->record([xi = x.impl(), oi = result.impl(), deriv] {
      if (oi->grad.empty()) return;
      auto& gx = grad_of(xi);
      for (std::size_t i = 0; i < gx.size(); ++i) {
        gx[i] += oi->grad[i] * deriv(xi->data[i], oi->data[i]);
      }
    });
  }
  return result;
}

double stable_sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// outer x axis x inner decomposition around one axis.
struct AxisSplit {
  std::size_t outer = 1, dim = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t k = 0; k < axis; ++k) s.outer *= shape[k];
  s.dim = shape[axis];
  for (std::size_t k = axis + 1; k < shape.size(); ++k) s.inner *= shape[k];
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double g, double, double y) { return g / y; },
      [](double g, double x, double y) { return -g * x / (y * y); });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      "scale", x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary(
      "add_scalar", x, [value](double v) { return v + value; },
      [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary("sigmoid", x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor abs(const Tensor& x) {
  return unary(
      "abs", x, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& x) {
  return unary(
      "square", x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

// ---------------------------------------------------------------------------
// Linear algebra and layout

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_finite("matmul", a);
  check_finite("matmul", b);
  const std::size_t ra = a.rank(), rb = b.rank();
  if (ra < 2 || ra > 3 || rb < 2 || rb > 3) {
    dim_error("matmul", "operands must have rank 2 or 3, got " + shapes2(a, b));
  }
  const std::size_t m = a.dim(ra - 2), k = a.dim(ra - 1);
  const std::size_t k2 = b.dim(rb - 2), n = b.dim(rb - 1);
  if (k != k2) dim_error("matmul", "inner dimensions differ: " + shapes2(a, b));
  const bool a_batched = ra == 3, b_batched = rb == 3;
  if (a_batched && b_batched && a.dim(0) != b.dim(0)) {
    dim_error("matmul", "batch sizes differ: " + shapes2(a, b));
  }
  const std::size_t batch = a_batched ? a.dim(0) : (b_batched ? b.dim(0) : 1);
  Shape out_shape = (a_batched || b_batched) ? Shape{batch, m, n} : Shape{m, n};
  std::vector<double> out(batch * m * n, 0.0);
  const double* pa = a.impl()->data.data();
  const double* pb = b.impl()->data.data();
  const std::size_t step_a = a_batched ? m * k : 0, step_b = b_batched ? k * n : 0;
  for (std::size_t bi = 0; bi < batch; ++bi) {
    const double* A = pa + bi * step_a;
    const double* B = pb + bi * step_b;
    double* C = out.data() + bi * m * n;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = A[i * k + p];
        const double* brow = B + p * n;
        double* crow = C + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }
  Tape* tape = recording({&a, &b});
  Tensor result(std::move(out_shape), std::move(out), tape != nullptr);
  if (tape) {
    tape->record([ai = a.impl(), bi_ = b.impl(), oi = result.impl(), batch, m, k, n, step_a,
                  step_b] {
      if (oi->grad.empty()) return;
      const double* G = oi->grad.data();
      double* gA = ai->requires_grad ? grad_of(ai).data() : nullptr;
      double* gB = bi_->requires_grad ? grad_of(bi_).data() : nullptr;
      for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* A = ai->data.data() + bi * step_a;
        const double* B = bi_->data.data() + bi * step_b;
        const double* Gb = G + bi * m * n;
        if (gA) {
          double* dA = gA + bi * step_a;
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < n; ++j) acc += Gb[i * n + j] * B[p * n + j];
              dA[i * k + p] += acc;
            }
          }
        }
        if (gB) {
          double* dB = gB + bi * step_b;
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              const double aip = A[i * k + p];
              for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += aip * Gb[i * n + j];
            }
          }
        }
      }
    });
  }
  return result;
}

Tensor transpose(const Tensor& x) {
  if (x.rank() < 2) dim_error("transpose", "rank < 2: " + shape_str(x.shape()));
  std::vector<std::size_t> axes(x.rank());
  std::iota(axes.begin(), axes.end(), 0);
  std::swap(axes[x.rank() - 1], axes[x.rank() - 2]);
  return permute(x, axes);
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const std::size_t rank = x.rank();
  if (axes.size() != rank) dim_error("permute", "axis list does not match rank");
  std::vector<bool> seen(rank, false);
  for (auto a : axes) {
    if (a >= rank || seen[a]) dim_error("permute", "invalid axis permutation");
    seen[a] = true;
  }
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t k = rank; k-- > 1;) in_strides[k - 1] = in_strides[k] * x.dim(k);
  Shape out_shape(rank);
  std::vector<std::size_t> strides(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    out_shape[k] = x.dim(axes[k]);
    strides[k] = in_strides[axes[k]];
  }
  const std::size_t n = x.numel();
  // Flat output index -> flat input index.
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t off = 0;
  for (std::size_t o = 0; o < n; ++o) {
    map[o] = off;
    for (std::size_t k = rank; k-- > 0;) {
      ++idx[k];
      off += strides[k];
      if (idx[k] < out_shape[k]) break;
      off -= strides[k] * idx[k];
      idx[k] = 0;
    }
  }
  std::vector<double> out(n);
  const auto& xs = x.impl()->data;
  for (std::size_t o = 0; o < n; ++o) out[o] = xs[map[o]];
  Tape* tape = recording({&x});
  Tensor result(std::move(out_shape), std::move(out), tape != nullptr);
  if (tape) {
    tape->record([xi = x.impl(), oi = result.impl(), map = std::move(map)] {
      if (oi->grad.empty()) return;
      auto& gx = grad_of(xi);
      for (std::size_t o = 0; o < map.size(); ++o) gx[map[o]] += oi->grad[o];
    });
  }
  return result;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    dim_error("reshape", "cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  Tape* tape = recording({&x});
  Tensor result(std::move(shape), x.impl()->data, tape != nullptr);
  if (tape) {
    tape->record([xi = x.impl(), oi = result.impl()] {
      if (oi->grad.empty()) return;
      auto& gx = grad_of(xi);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += oi->grad[i];
    });
  }
  return result;
}

// ---------------------------------------------------------------------------
// Normalization

Tensor row_softmax(const Tensor& x) {
  check_finite("row_softmax", x);
  if (x.rank() < 1) dim_error("row_softmax", "scalar input");
  const std::size_t d = x.dim(x.rank() - 1);
  const std::size_t rows = d == 0 ? 0 : x.numel() / d;
  const auto& xs = x.impl()->data;
  std::vector<double> out(xs.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xs.data() + r * d;
    double* y = out.data() + r * d;
    const double mx = *std::max_element(in, in + d);
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) z += (y[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < d; ++j) y[j] /= z;
  }
  Tape* tape = recording({&x});
  Tensor result(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    tape->record([xi = x.impl(), oi = result.impl(), rows, d] {
      if (oi->grad.empty()) return;
      auto& gx = grad_of(xi);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* y = oi->data.data() + r * d;
        const double* g = oi->grad.data() + r * d;
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += g[j] * y[j];
        for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += y[j] * (g[j] - dot);
      }
    });
  }
  return result;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  check_finite("layer_norm", x);
  if (x.rank() < 1) dim_error("layer_norm", "scalar input");
  const std::size_t d = x.dim(x.rank() - 1);
  for (const Tensor* p : {&gamma, &beta}) {
    if (p->defined() && p->shape() != Shape{d}) {
      dim_error("layer_norm", "affine parameter " + shape_str(p->shape()) +
                                  " does not match feature size " + std::to_string(d));
    }
  }
  const std::size_t rows = d == 0 ? 0 : x.numel() / d;
  const auto& xs = x.impl()->data;
  std::vector<double> xhat(xs.size()), inv_std(rows), out(xs.size());
  const double eps2 = eps * eps;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xs.data() + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += in[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (in[j] - mean) * (in[j] - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps2);
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (in[j] - mean) * inv_std[r];
      xhat[r * d + j] = h;
      double y = h;
      if (gamma.defined()) y *= gamma[j];
      if (beta.defined()) y += beta[j];
      out[r * d + j] = y;
    }
  }
  Tape* tape = recording({&x, &gamma, &beta});
  Tensor result(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    ImplPtr gi = gamma.defined() ? gamma.impl() : nullptr;
    ImplPtr bi = beta.defined() ? beta.impl() : nullptr;
    tape->record([xi = x.impl(), gi, bi, oi = result.impl(), xhat = std::move(xhat),
                  inv_std = std::move(inv_std), rows, d] {
      if (oi->grad.empty()) return;
      std::vector<double> dxhat(d);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* g = oi->grad.data() + r * d;
        const double* h = xhat.data() + r * d;
        if (gi && gi->requires_grad) {
          auto& gg = grad_of(gi);
          for (std::size_t j = 0; j < d; ++j) gg[j] += g[j] * h[j];
        }
        if (bi && bi->requires_grad) {
          auto& gb = grad_of(bi);
          for (std::size_t j = 0; j < d; ++j) gb[j] += g[j];
        }
        if (!xi->requires_grad) continue;
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          dxhat[j] = gi ? g[j] * gi->data[j] : g[j];
          m1 += dxhat[j];
          m2 += dxhat[j] * h[j];
        }
        m1 /= static_cast<double>(d);
        m2 /= static_cast<double>(d);
        auto& gx = grad_of(xi);
        for (std::size_t j = 0; j < d; ++j) {
          gx[r * d + j] += inv_std[r] * (dxhat[j] - m1 - h[j] * m2);
        }
      }
    });
  }
  return result;
}

Tensor dropout(const Tensor& x, double keep_prob, Rng& rng, bool training) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw ConfigError("dropout: keep probability must lie in (0, 1], got " +
                      std::to_string(keep_prob));
  }
  if (!training || keep_prob == 1.0) return x;
  check_finite("dropout", x);
  const auto& xs = x.impl()->data;
  std::vector<double> mask(xs.size()), out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mask[i] = rng.uniform() < keep_prob ? 1.0 / keep_prob : 0.0;
    out[i] = xs[i] * mask[i];
  }
  Tape* tape = recording({&x});
  Tensor result(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    tape->record([xi = x.impl(), oi = result.impl(), mask = std::move(mask)] {
      if (oi->grad.empty()) return;
      auto& gx = grad_of(xi);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += oi->grad[i] * mask[i];
    });
  }
  return result;
}

// ---------------------------------------------------------------------------
// Structural

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) dim_error("concat", "no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) dim_error("concat", "axis out of range for " + shape_str(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    check_finite("concat", p);
    Shape s = p.shape();
    if (s.size() != first.size()) dim_error("concat", "rank mismatch " + shapes2(parts[0], p));
    s[axis] = first[axis];
    if (s != first) dim_error("concat", "shape mismatch off the concat axis " + shapes2(parts[0], p));
    out_shape[axis] += p.dim(axis);
  }
  const AxisSplit total = split_at(out_shape, axis);
  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t block = p.dim(axis) * total.inner;
    const auto& ps = p.impl()->data;
    for (std::size_t o = 0; o < total.outer; ++o) {
      std::copy_n(ps.data() + o * block, block,
                  out.data() + o * total.dim * total.inner + offset * total.inner);
    }
    offset += p.dim(axis);
  }
  Tape* tape = Tape::active();
  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (!any) tape = nullptr;
  Tensor result(std::move(out_shape), std::move(out), tape != nullptr);
  if (tape) {
    std::vector<ImplPtr> impls;
    for (const auto& p : parts) impls.push_back(p.impl());
    tape->record([impls = std::move(impls), offsets = std::move(offsets), oi = result.impl(),
                  total, axis] {
      if (oi->grad.empty()) return;
      for (std::size_t q = 0; q < impls.size(); ++q) {
        const auto& pi = impls[q];
        if (!pi->requires_grad) continue;
        auto& gp = grad_of(pi);
        const std::size_t block = pi->shape[axis] * total.inner;
        for (std::size_t o = 0; o < total.outer; ++o) {
          const double* src =
              oi->grad.data() + o * total.dim * total.inner + offsets[q] * total.inner;
          double* dst = gp.data() + o * block;
          for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return result;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  if (axis >= x.rank()) dim_error("slice", "axis out of range for " + shape_str(x.shape()));
  if (start + length > x.dim(axis)) {
    dim_error("slice", "range [" + std::to_string(start) + "," + std::to_string(start + length) +
                           ") exceeds axis " + std::to_string(axis) + " of " +
                           shape_str(x.shape()));
  }
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  const std::size_t block = length * s.inner;
  std::vector<double> out(s.outer * block);
  const auto& xs = x.impl()->data;
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(xs.data() + o * s.dim * s.inner + start * s.inner, block, out.data() + o * block);
  }
  Tape* tape = recording({&x});
  Tensor result(std::move(out_shape), std::move(out), tape != nullptr);
  if (tape) {
    tape->record([xi = x.impl(), oi = result.impl(), s, start, block] {
      if (oi->grad.empty()) return;
      auto& gx = grad_of(xi);
      for (std::size_t o = 0; o < s.outer; ++o) {
        double* dst = gx.data() + o * s.dim * s.inner + start * s.inner;
        const double* src = oi->grad.data() + o * block;
        for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
      }
    });
  }
  return result;
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& x) {
  check_finite("sum", x);
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tape* tape = recording({&x});
  Tensor result({}, {total}, tape != nullptr);
  if (tape) {
    tape->record([xi = x.impl(), oi = result.impl()] {
      if (oi->grad.empty()) return;
      auto& gx = grad_of(xi);
      const double g = oi->grad[0];
      for (auto& v : gx) v += g;
    });
  }
  return result;
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) dim_error("mean", "empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor sum_axis(const Tensor& x, std::size_t axis, bool keepdim) {
  check_finite("sum_axis", x);
  if (axis >= x.rank()) dim_error("sum_axis", "axis out of range for " + shape_str(x.shape()));
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  if (keepdim) {
    out_shape[axis] = 1;
  } else {
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  }
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto& xs = x.impl()->data;
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t k = 0; k < s.dim; ++k) {
      const double* src = xs.data() + (o * s.dim + k) * s.inner;
      double* dst = out.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  }
  Tape* tape = recording({&x});
  Tensor result(std::move(out_shape), std::move(out), tape != nullptr);
  if (tape) {
    tape->record([xi = x.impl(), oi = result.impl(), s] {
      if (oi->grad.empty()) return;
      auto& gx = grad_of(xi);
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t k = 0; k < s.dim; ++k) {
          double* dst = gx.data() + (o * s.dim + k) * s.inner;
          const double* src = oi->grad.data() + o * s.inner;
          for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return result;
}

// ---------------------------------------------------------------------------
// Spatio-temporal kernels

Tensor conv_time(const Tensor& x, const Tensor& weight, const Tensor& bias,
                 std::size_t dilation) {
  check_finite("conv_time", x);
  check_finite("conv_time", weight);
  if (x.rank() != 4) dim_error("conv_time", "input must be [B,C,N,T], got " + shape_str(x.shape()));
  if (weight.rank() != 3 || weight.dim(1) != x.dim(1)) {
    dim_error("conv_time", "weight " + shape_str(weight.shape()) + " does not fit input " +
                               shape_str(x.shape()));
  }
  if (dilation == 0) dim_error("conv_time", "dilation must be >= 1");
  const std::size_t B = x.dim(0), Ci = x.dim(1), N = x.dim(2), T = x.dim(3);
  const std::size_t Co = weight.dim(0), K = weight.dim(2);
  if (bias.defined() && bias.shape() != Shape{Co}) {
    dim_error("conv_time", "bias " + shape_str(bias.shape()) + " does not match " +
                               std::to_string(Co) + " output channels");
  }
  const std::size_t span = dilation * (K - 1);
  if (T < span + 1) {
    dim_error("conv_time", "time length " + std::to_string(T) + " shorter than required minimum " +
                               std::to_string(span + 1));
  }
  const std::size_t To = T - span;
  std::vector<double> out(B * Co * N * To, 0.0);
  const double* X = x.impl()->data.data();
  const double* W = weight.impl()->data.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < Co; ++o) {
      double* Y = out.data() + ((b * Co + o) * N) * To;
      if (bias.defined()) std::fill_n(Y, N * To, bias[o]);
      for (std::size_t i = 0; i < Ci; ++i) {
        const double* Xi = X + ((b * Ci + i) * N) * T;
        for (std::size_t s = 0; s < K; ++s) {
          const double w = W[(o * Ci + i) * K + s];
          const std::size_t shift = span - dilation * s;
          for (std::size_t n = 0; n < N; ++n) {
            const double* src = Xi + n * T + shift;
            double* dst = Y + n * To;
            for (std::size_t t = 0; t < To; ++t) dst[t] += w * src[t];
          }
        }
      }
    }
  }
  Tape* tape = recording({&x, &weight, &bias});
  Tensor result({B, Co, N, To}, std::move(out), tape != nullptr);
  if (tape) {
    ImplPtr bi = bias.defined() ? bias.impl() : nullptr;
    tape->record([xi = x.impl(), wi = weight.impl(), bi, oi = result.impl(), B, Ci, N, T, Co, K,
                  To, span, dilation] {
      if (oi->grad.empty()) return;
      const double* G = oi->grad.data();
      const double* X = xi->data.data();
      const double* W = wi->data.data();
      double* gX = xi->requires_grad ? grad_of(xi).data() : nullptr;
      double* gW = wi->requires_grad ? grad_of(wi).data() : nullptr;
      double* gB = (bi && bi->requires_grad) ? grad_of(bi).data() : nullptr;
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t o = 0; o < Co; ++o) {
          const double* Gy = G + ((b * Co + o) * N) * To;
          if (gB) {
            double acc = 0.0;
            for (std::size_t q = 0; q < N * To; ++q) acc += Gy[q];
            gB[o] += acc;
          }
          for (std::size_t i = 0; i < Ci; ++i) {
            const std::size_t xoff = ((b * Ci + i) * N) * T;
            for (std::size_t s = 0; s < K; ++s) {
              const std::size_t widx = (o * Ci + i) * K + s;
              const std::size_t shift = span - dilation * s;
              double acc = 0.0;
              for (std::size_t n = 0; n < N; ++n) {
                const double* g = Gy + n * To;
                const double* src = X + xoff + n * T + shift;
                if (gW) {
                  for (std::size_t t = 0; t < To; ++t) acc += g[t] * src[t];
                }
                if (gX) {
                  double* dst = gX + xoff + n * T + shift;
                  const double w = W[widx];
                  for (std::size_t t = 0; t < To; ++t) dst[t] += w * g[t];
                }
              }
              if (gW) gW[widx] += acc;
            }
          }
        }
      }
    });
  }
  return result;
}

Tensor node_mix(const Tensor& p, const Tensor& x) {
  check_finite("node_mix", p);
  check_finite("node_mix", x);
  if (x.rank() != 4) dim_error("node_mix", "features must be [B,C,N,T], got " + shape_str(x.shape()));
  const std::size_t B = x.dim(0), C = x.dim(1), N = x.dim(2), T = x.dim(3);
  const bool batched = p.rank() == 3;
  const bool ok = (p.rank() == 2 && p.dim(0) == N && p.dim(1) == N) ||
                  (batched && p.dim(0) == B && p.dim(1) == N && p.dim(2) == N);
  if (!ok) dim_error("node_mix", "propagation matrix " + shapes2(p, x));
  std::vector<double> out(x.numel(), 0.0);
  const double* X = x.impl()->data.data();
  const double* P = p.impl()->data.data();
  for (std::size_t b = 0; b < B; ++b) {
    const double* Pb = P + (batched ? b * N * N : 0);
    for (std::size_t c = 0; c < C; ++c) {
      const double* Xc = X + ((b * C + c) * N) * T;
      double* Yc = out.data() + ((b * C + c) * N) * T;
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
          const double pij = Pb[i * N + j];
          const double* src = Xc + j * T;
          double* dst = Yc + i * T;
          for (std::size_t t = 0; t < T; ++t) dst[t] += pij * src[t];
        }
      }
    }
  }
  Tape* tape = recording({&p, &x});
  Tensor result(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    tape->record([pi = p.impl(), xi = x.impl(), oi = result.impl(), B, C, N, T, batched] {
      if (oi->grad.empty()) return;
      const double* G = oi->grad.data();
      double* gP = pi->requires_grad ? grad_of(pi).data() : nullptr;
      double* gX = xi->requires_grad ? grad_of(xi).data() : nullptr;
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t poff = batched ? b * N * N : 0;
        const double* Pb = pi->data.data() + poff;
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t off = ((b * C + c) * N) * T;
          const double* Xc = xi->data.data() + off;
          const double* Gc = G + off;
          for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < N; ++j) {
              const double* g = Gc + i * T;
              if (gP) {
                double acc = 0.0;
                const double* src = Xc + j * T;
                for (std::size_t t = 0; t < T; ++t) acc += g[t] * src[t];
                gP[poff + i * N + j] += acc;
              }
              if (gX) {
                const double pij = Pb[i * N + j];
                double* dst = gX + off + j * T;
                for (std::size_t t = 0; t < T; ++t) dst[t] += pij * g[t];
              }
            }
          }
        }
      }
    });
  }
  return result;
}

}  // namespace sdgl::ops
