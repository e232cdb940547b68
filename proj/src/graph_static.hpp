#pragma once

#include "rng.hpp"
#include "tensor.hpp"

namespace sdgl {

// Static embeddings are trained by backpropagation; dynamic embeddings are
// only ever written by momentum_update() and by initialisation from the
// static ones, and never take part in the optimizer.
inline constexpr double kEmbeddingInitScale = 0.3;

struct NodeEmbeddings {
  Tensor static_emb;   // [N, d], requires grad
  Tensor dynamic_emb;  // [N, d], no grad
  double momentum = 0.9;

  static NodeEmbeddings init(std::size_t nodes, std::size_t dim, double momentum, Rng& rng);

  // dynamic <- p * dynamic + (1 - p) * static, elementwise.
  void momentum_update();
};

// row_softmax(relu(M M^T)) for embeddings M [N, d].
Tensor build_static_graph(const Tensor& static_emb);

// Smoothness-plus-sparsity penalty of adjacency A [N, N] against a batch of
// node windows x [B, N, h]:
//   mean_b sum_{i,j} |x_bi - x_bj|^2 A_ij  +  gamma * |A|_F^2
Tensor graph_regularization_loss(const Tensor& x, const Tensor& adj, double gamma);

}  // namespace sdgl
