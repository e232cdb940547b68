#include "graph_conv.hpp"

#include "errors.hpp"
#include "init.hpp"
#include "ops.hpp"

namespace sdgl {

Tensor transition_matrix(const Tensor& adj) {
  const std::size_t r = adj.rank();
  if ((r != 2 && r != 3) || adj.dim(r - 1) != adj.dim(r - 2)) {
    throw DimensionError("transition_matrix: expected square [N,N] or [B,N,N], got " +
                         shape_str(adj.shape()));
  }
  const std::size_t n = adj.dim(r - 1);
  const auto values = adj.data();
  for (std::size_t row = 0; row * n < values.size(); ++row) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = values[row * n + j];
      if (v < 0.0) throw DegenerateGraphError("transition_matrix: negative adjacency entry");
      s += v;
    }
    if (!(s > 0.0)) {
      throw DegenerateGraphError("transition_matrix: row " + std::to_string(row % n) +
                                 " has zero sum");
    }
  }
  return ops::div(adj, ops::sum_axis(adj, r - 1, true));
}

MixHopLayer MixHopLayer::init(std::size_t channels, std::size_t depth, Rng& rng) {
  if (depth < 1) throw ConfigError("MixHopLayer: propagation depth must be >= 1");
  MixHopLayer layer;
  layer.depth = depth;
  const std::size_t in = channels * (depth + 1);
  layer.weight = init_uniform({channels, in, 1}, in, rng);
  layer.bias = init_zeros({channels});
  return layer;
}

ParamList MixHopLayer::parameters() const { return {{"weight", weight}, {"bias", bias}}; }

Tensor mix_hop_propagate(const Tensor& x, const Tensor& adj, const MixHopLayer& layer) {
  if (x.rank() != 4) {
    throw DimensionError("mix_hop_propagate: features must be [B,C,N,T], got " +
                         shape_str(x.shape()));
  }
  if (layer.weight.dim(1) != x.dim(1) * (layer.depth + 1)) {
    throw DimensionError("mix_hop_propagate: selection map " + shape_str(layer.weight.shape()) +
                         " does not fit " + std::to_string(x.dim(1)) + " channels at depth " +
                         std::to_string(layer.depth));
  }
  const Tensor p = transition_matrix(adj);
  std::vector<Tensor> hops;
  Tensor h = x;
  for (std::size_t k = 0; k < layer.depth; ++k) {
    h = ops::node_mix(p, h);
    hops.push_back(h);
  }
  hops.push_back(x);
  return ops::conv_time(ops::concat(hops, 1), layer.weight, layer.bias, 1);
}

Tensor fuse_branches(const Tensor& z_static, const Tensor& z_dynamic) {
  if (z_static.shape() != z_dynamic.shape()) {
    throw DimensionError("fuse_branches: " + shape_str(z_static.shape()) + " vs " +
                         shape_str(z_dynamic.shape()));
  }
  return ops::add(z_static, z_dynamic);
}

}  // namespace sdgl
