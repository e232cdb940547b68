#include "temporal_conv.hpp"

#include <cmath>

#include "errors.hpp"
#include "init.hpp"
#include "ops.hpp"

namespace sdgl {

std::size_t receptive_field(std::size_t max_kernel, double growth, std::size_t layers) {
  if (max_kernel < 2) throw ConfigError("receptive_field: kernel size must be >= 2");
  if (!(growth > 1.0)) throw ConfigError("receptive_field: dilation growth q must be > 1");
  if (layers < 1) throw ConfigError("receptive_field: need at least one layer");
  const double c = static_cast<double>(max_kernel);
  const double r =
      1.0 + (c - 1.0) * (std::pow(growth, static_cast<double>(layers)) - 1.0) / (growth - 1.0);
  return static_cast<std::size_t>(std::ceil(r - 1e-9));
}

std::size_t layer_dilation(double growth, std::size_t layer) {
  if (layer < 1) throw ConfigError("layer_dilation: layers are 1-based");
  const double d = std::floor(std::pow(growth, static_cast<double>(layer - 1)) + 1e-9);
  return d < 1.0 ? 1 : static_cast<std::size_t>(d);
}

std::size_t stack_receptive_field(std::size_t max_kernel,
                                  const std::vector<std::size_t>& dilations) {
  std::size_t r = 1;
  for (auto d : dilations) r += (max_kernel - 1) * d;
  return r;
}

InceptionLayer InceptionLayer::init(std::size_t in_channels, std::size_t out_channels,
                                    std::size_t dilation, Rng& rng) {
  if (out_channels == 0 || out_channels % 4 != 0) {
    throw ConfigError("InceptionLayer: out channels must be a positive multiple of 4, got " +
                      std::to_string(out_channels));
  }
  InceptionLayer layer;
  layer.dilation = dilation;
  const std::size_t per = out_channels / 4;
  for (std::size_t b = 0; b < 4; ++b) {
    const std::size_t k = kInceptionKernels[b];
    layer.weights[b] = init_uniform({per, in_channels, k}, in_channels * k, rng);
    layer.biases[b] = init_zeros({per});
  }
  return layer;
}

ParamList InceptionLayer::parameters() const {
  ParamList out;
  for (std::size_t b = 0; b < 4; ++b) {
    const std::string k = std::to_string(kInceptionKernels[b]);
    out.push_back({"w" + k, weights[b]});
    out.push_back({"b" + k, biases[b]});
  }
  return out;
}

Tensor dilated_inception(const Tensor& x, const InceptionLayer& layer) {
  const std::size_t d = layer.dilation;
  const std::size_t needed = d * (kMaxKernel - 1) + 1;
  if (x.rank() != 4 || x.dim(3) < needed) {
    throw DimensionError("dilated_inception: input " + shape_str(x.shape()) +
                         " too short, time length must be >= " + std::to_string(needed));
  }
  const std::size_t out_len = x.dim(3) - d * (kMaxKernel - 1);
  std::vector<Tensor> branches;
  for (std::size_t b = 0; b < 4; ++b) {
    const Tensor y = ops::conv_time(x, layer.weights[b], layer.biases[b], d);
    branches.push_back(ops::slice(y, 3, y.dim(3) - out_len, out_len));
  }
  return ops::concat(branches, 1);
}

GatedTcnLayer GatedTcnLayer::init(std::size_t in_channels, std::size_t out_channels,
                                  std::size_t dilation, Rng& rng) {
  GatedTcnLayer layer;
  layer.filter = InceptionLayer::init(in_channels, out_channels, dilation, rng);
  layer.gate = InceptionLayer::init(in_channels, out_channels, dilation, rng);
  return layer;
}

ParamList GatedTcnLayer::parameters() const {
  ParamList out;
  append_params(out, "filter.", filter.parameters());
  append_params(out, "gate.", gate.parameters());
  return out;
}

Tensor gated_tcn(const Tensor& x, const GatedTcnLayer& layer) {
  return ops::mul(ops::tanh(dilated_inception(x, layer.filter)),
                  ops::sigmoid(dilated_inception(x, layer.gate)));
}

}  // namespace sdgl
