#pragma once

#include <cstddef>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

// Differentiable primitives. Every op validates shapes, raises
// DimensionError naming itself on mismatch, and records its backward pass on
// the active tape when any input requires gradients.
namespace sdgl::ops {

// Elementwise with numpy-style trailing-axis broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor square(const Tensor& x);

// [m,k]x[k,n], [B,m,k]x[B,k,n], and either operand rank 2 against a rank-3
// partner (the rank-2 operand is shared across the batch).
Tensor matmul(const Tensor& a, const Tensor& b);
// Swaps the last two axes.
Tensor transpose(const Tensor& x);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor reshape(const Tensor& x, Shape shape);

// Softmax over the last axis.
Tensor row_softmax(const Tensor& x);

// Normalizes over the last axis: (x - mean) / sqrt(var + eps^2), then
// applies the optional per-feature scale and shift (pass undefined tensors to
// skip). A constant row maps to zero.
inline constexpr double kLayerNormEps = 1e-5;
Tensor layer_norm(const Tensor& x, const Tensor& gamma = {}, const Tensor& beta = {},
                  double eps = kLayerNormEps);

// Inverted dropout: kept entries are divided by keep_prob. Identity when not
// training or keep_prob == 1.
Tensor dropout(const Tensor& x, double keep_prob, Rng& rng, bool training);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor sum_axis(const Tensor& x, std::size_t axis, bool keepdim = false);

// Dilated convolution along the last (time) axis of x[B, Cin, N, T] with
// weight[Cout, Cin, k] and optional bias[Cout]:
//   out[b,o,n,t'] = bias[o] + sum_{i,s} w[o,i,s] * x[b,i,n, t' + d(k-1) - d s]
// so tap s reaches s*d steps into the past. No padding: T' = T - d(k-1).
Tensor conv_time(const Tensor& x, const Tensor& weight, const Tensor& bias,
                 std::size_t dilation);

// Propagation along the node axis: out[b,c,i,t] = sum_j P[i,j] x[b,c,j,t],
// with P either [N,N] (shared) or [B,N,N] (per sample).
Tensor node_mix(const Tensor& p, const Tensor& x);

}  // namespace sdgl::ops
