#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "params.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace sdgl {

inline constexpr std::array<std::size_t, 4> kInceptionKernels = {2, 3, 6, 7};
inline constexpr std::size_t kMaxKernel = 7;

// Closed form 1 + (c-1)(q^k - 1)/(q - 1), rounded up to an integer.
// Throws ConfigError unless c >= 2, q > 1, k >= 1.
std::size_t receptive_field(std::size_t max_kernel, double growth, std::size_t layers);

// Dilation of the 1-based layer j: floor(q^(j-1)), at least 1.
std::size_t layer_dilation(double growth, std::size_t layer);

// Receptive field realised by a stack with the given per-layer dilations.
std::size_t stack_receptive_field(std::size_t max_kernel, const std::vector<std::size_t>& dilations);

// Four parallel dilated convolutions with kernels 1x2, 1x3, 1x6, 1x7, each
// producing out_channels/4 channels.
struct InceptionLayer {
  std::array<Tensor, 4> weights;  // [Cout/4, Cin, k]
  std::array<Tensor, 4> biases;   // [Cout/4]
  std::size_t dilation = 1;

  static InceptionLayer init(std::size_t in_channels, std::size_t out_channels,
                             std::size_t dilation, Rng& rng);
  ParamList parameters() const;
};

// x [B, C, N, T] -> [B, C', N, T - 6 * dilation]. Shorter branches are
// truncated to the 1x7 branch's length by dropping leading steps.
Tensor dilated_inception(const Tensor& x, const InceptionLayer& layer);

struct GatedTcnLayer {
  InceptionLayer filter;  // tanh branch
  InceptionLayer gate;    // sigmoid branch

  static GatedTcnLayer init(std::size_t in_channels, std::size_t out_channels,
                            std::size_t dilation, Rng& rng);
  ParamList parameters() const;
};

// tanh(filter(x)) * sigmoid(gate(x)).
Tensor gated_tcn(const Tensor& x, const GatedTcnLayer& layer);

}  // namespace sdgl
