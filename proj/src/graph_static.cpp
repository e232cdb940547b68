#include "graph_static.hpp"

#include <cmath>

#include "errors.hpp"
#include "ops.hpp"

namespace sdgl {

NodeEmbeddings NodeEmbeddings::init(std::size_t nodes, std::size_t dim, double momentum,
                                    Rng& rng) {
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1), got " + std::to_string(momentum));
  }
  NodeEmbeddings emb;
  emb.momentum = momentum;
  emb.static_emb = Tensor::zeros({nodes, dim}, true);
  // Half-normal entries keep every initial logit inside the relu's active region.
  for (auto& v : emb.static_emb.mutable_data()) v = kEmbeddingInitScale * std::fabs(rng.normal());
  emb.dynamic_emb = emb.static_emb.detach();
  return emb;
}

void NodeEmbeddings::momentum_update() {
  const double p = momentum;
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1), got " + std::to_string(p));
  }
  if (dynamic_emb.shape() != static_emb.shape()) {
    throw DimensionError("momentum_update: embedding shapes differ " +
                         shape_str(dynamic_emb.shape()) + " vs " + shape_str(static_emb.shape()));
  }
  auto d = dynamic_emb.mutable_data();
  auto s = static_emb.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = p * d[i] + (1.0 - p) * s[i];
}

Tensor build_static_graph(const Tensor& static_emb) {
  if (static_emb.rank() != 2 || static_emb.dim(0) < 2 || static_emb.dim(1) < 1) {
    throw DimensionError("build_static_graph: embeddings must be [N>=2, d>=1], got " +
                         shape_str(static_emb.shape()));
  }
  for (double v : static_emb.data()) {
    if (!std::isfinite(v)) throw NumericError("build_static_graph: non-finite embeddings");
  }
  return ops::row_softmax(ops::relu(ops::matmul(static_emb, ops::transpose(static_emb))));
}

Tensor graph_regularization_loss(const Tensor& x, const Tensor& adj, double gamma) {
  if (x.rank() != 3) {
    throw DimensionError("graph_regularization_loss: windows must be [B,N,h], got " +
                         shape_str(x.shape()));
  }
  const std::size_t B = x.dim(0), N = x.dim(1), h = x.dim(2);
  if (adj.shape() != Shape{N, N}) {
    throw DimensionError("graph_regularization_loss: adjacency " + shape_str(adj.shape()) +
                         " does not match " + std::to_string(N) + " nodes");
  }
  if (gamma < 0.0) throw ConfigError("graph_regularization_loss: gamma must be >= 0");
  const Tensor diff = ops::sub(ops::reshape(x, {B, N, 1, h}), ops::reshape(x, {B, 1, N, h}));
  const Tensor dist = ops::sum_axis(ops::square(diff), 3);  // [B, N, N]
  const Tensor smooth = ops::scale(ops::sum(ops::mul(dist, adj)), 1.0 / static_cast<double>(B));
  return ops::add(smooth, ops::scale(ops::sum(ops::square(adj)), gamma));
}

}  // namespace sdgl
