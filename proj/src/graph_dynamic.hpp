#pragma once

#include <cstddef>
#include <vector>

#include "graph_static.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace sdgl {

// How the input window and the static embeddings are combined before the
// adjacency heads. `gated` is the full model; the others are ablations.
enum class FusionMode {
  gated,   // GRU-style gate over static embeddings and projected input
  bypass,  // projected input only
  sum,     // static embeddings + projected input
};

// Gated fusion of the projected input window with the static embeddings.
// Matrices act on the right of row-feature tensors ([.., N, d] x [d, d]).
struct FusionGate {
  Tensor w_in, b_in;     // window length h -> d
  Tensor w_r, u_r, b_r;  // reset gate
  Tensor w_z, u_z, b_z;  // update gate
  Tensor w_h, u_h, b_h;  // candidate

  static FusionGate init(std::size_t window, std::size_t dim, Rng& rng);
  ParamList parameters() const;
};

struct AdjacencyHeads {
  std::size_t heads = 1;
  std::size_t head_dim = 1;
  double keep_prob = 1.0;

  Tensor norm_gamma, norm_beta;  // [d], layer norm of the fused features
  std::vector<Tensor> w_q, w_k;  // per head [d, d_k]
  Tensor head_weight;            // [heads], scalar mixing weight per head
  Tensor w_e;                    // [d, d_k], residual projection
  Tensor res_gamma, res_beta;    // [N], layer norm of the head sum
  Tensor skip_gamma, skip_beta;  // [N], layer norm of the residual Gram matrix
  Tensor w1, b1, w2, b2;         // row-wise MLP N -> hidden -> N
  Tensor bias_gamma, bias_beta;  // [N], layer norm of the inductive-bias logits

  static AdjacencyHeads init(std::size_t nodes, std::size_t dim, std::size_t heads,
                             std::size_t head_dim, std::size_t hidden, double keep_prob,
                             Rng& rng);
  ParamList parameters() const;
};

// x [B, N, h] or [N, h] -> X_T with trailing dimension d.
Tensor project_input(const FusionGate& gate, const Tensor& x);

// Fused node features h_T [.., N, d].
Tensor fuse_information(const FusionGate& gate, const Tensor& x, const Tensor& static_emb,
                        FusionMode mode = FusionMode::gated);

// Sum over heads of w_i * dropout(Q_i K_i^T / sqrt(d_k)), given already
// normalized features.
Tensor head_sum(const AdjacencyHeads& heads, const Tensor& normed, bool training, Rng& rng);

// R_T: layer norm of h_T followed by head_sum().
Tensor multi_head_adjacency(const AdjacencyHeads& heads, const Tensor& fused, bool training,
                            Rng& rng);

// S_T = LN(R_T) + LN(E E^T) with E = h_T W_e; returns relu(S W1 + b1) W2 + b2.
Tensor refine_adjacency(const AdjacencyHeads& heads, const Tensor& r, const Tensor& fused);

// row_softmax(relu(LN(M_d M_d^T) + S_hat)). M_d is read as a constant.
Tensor apply_inductive_bias(const AdjacencyHeads& heads, const Tensor& s_hat,
                            const Tensor& dynamic_emb);

struct DynamicGraphLayer {
  FusionGate gate;
  AdjacencyHeads heads;

  static DynamicGraphLayer init(std::size_t nodes, std::size_t window, std::size_t dim,
                                std::size_t heads, std::size_t head_dim, std::size_t hidden,
                                double keep_prob, Rng& rng);

  // One row-stochastic [N, N] matrix per window of x [B, N, h].
  Tensor forward(const Tensor& x, const NodeEmbeddings& emb, FusionMode mode, bool training,
                 Rng& rng) const;

  ParamList parameters() const;
};

}  // namespace sdgl
