#include "graph_dynamic.hpp"

#include <cmath>

#include "errors.hpp"
#include "init.hpp"
#include "ops.hpp"

namespace sdgl {

using namespace ops;

FusionGate FusionGate::init(std::size_t window, std::size_t dim, Rng& rng) {
  FusionGate g;
  g.w_in = init_uniform({window, dim}, window, rng);
  g.b_in = init_zeros({dim});
  g.w_r = init_uniform({dim, dim}, dim, rng);
  g.u_r = init_uniform({dim, dim}, dim, rng);
  g.b_r = init_zeros({dim});
  g.w_z = init_uniform({dim, dim}, dim, rng);
  g.u_z = init_uniform({dim, dim}, dim, rng);
  g.b_z = init_zeros({dim});
  g.w_h = init_uniform({dim, dim}, dim, rng);
  g.u_h = init_uniform({dim, dim}, dim, rng);
  g.b_h = init_zeros({dim});
  return g;
}

ParamList FusionGate::parameters() const {
  return {{"w_in", w_in}, {"b_in", b_in}, {"w_r", w_r}, {"u_r", u_r}, {"b_r", b_r},
          {"w_z", w_z},   {"u_z", u_z},   {"b_z", b_z}, {"w_h", w_h}, {"u_h", u_h},
          {"b_h", b_h}};
}

AdjacencyHeads AdjacencyHeads::init(std::size_t nodes, std::size_t dim, std::size_t heads,
                                    std::size_t head_dim, std::size_t hidden, double keep_prob,
                                    Rng& rng) {
  if (heads == 0 || head_dim == 0 || hidden == 0) {
    throw ConfigError("AdjacencyHeads: heads, head_dim and hidden must be >= 1");
  }
  AdjacencyHeads a;
  a.heads = heads;
  a.head_dim = head_dim;
  a.keep_prob = keep_prob;
  a.norm_gamma = init_ones({dim});
  a.norm_beta = init_zeros({dim});
  for (std::size_t i = 0; i < heads; ++i) {
    a.w_q.push_back(init_uniform({dim, head_dim}, dim, rng));
    a.w_k.push_back(init_uniform({dim, head_dim}, dim, rng));
  }
  a.head_weight = init_ones({heads});
  a.w_e = init_uniform({dim, head_dim}, dim, rng);
  a.res_gamma = init_ones({nodes});
  a.res_beta = init_zeros({nodes});
  a.skip_gamma = init_ones({nodes});
  a.skip_beta = init_zeros({nodes});
  a.w1 = init_uniform({nodes, hidden}, nodes, rng);
  a.b1 = init_zeros({hidden});
  a.w2 = init_uniform({hidden, nodes}, hidden, rng);
  a.b2 = init_zeros({nodes});
  a.bias_gamma = init_ones({nodes});
  a.bias_beta = init_zeros({nodes});
  return a;
}

ParamList AdjacencyHeads::parameters() const {
  ParamList out = {{"norm_gamma", norm_gamma}, {"norm_beta", norm_beta}};
  for (std::size_t i = 0; i < heads; ++i) {
    out.push_back({"w_q" + std::to_string(i), w_q[i]});
    out.push_back({"w_k" + std::to_string(i), w_k[i]});
  }
  ParamList rest = {{"head_weight", head_weight}, {"w_e", w_e},
                    {"res_gamma", res_gamma},     {"res_beta", res_beta},
                    {"skip_gamma", skip_gamma},   {"skip_beta", skip_beta},
                    {"w1", w1},                   {"b1", b1},
                    {"w2", w2},                   {"b2", b2},
                    {"bias_gamma", bias_gamma},   {"bias_beta", bias_beta}};
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

Tensor project_input(const FusionGate& gate, const Tensor& x) {
  if (x.rank() < 2 || x.dim(x.rank() - 1) != gate.w_in.dim(0)) {
    throw DimensionError("project_input: window " + shape_str(x.shape()) +
                         " does not match input projection " + shape_str(gate.w_in.shape()));
  }
  return add(matmul(x, gate.w_in), gate.b_in);
}

Tensor fuse_information(const FusionGate& gate, const Tensor& x, const Tensor& static_emb,
                        FusionMode mode) {
  const Tensor xt = project_input(gate, x);
  const std::size_t r = xt.rank();
  if (static_emb.rank() != 2 || static_emb.dim(0) != xt.dim(r - 2) ||
      static_emb.dim(1) != xt.dim(r - 1)) {
    throw DimensionError("fuse_information: embeddings " + shape_str(static_emb.shape()) +
                         " do not match projected input " + shape_str(xt.shape()));
  }
  switch (mode) {
    case FusionMode::bypass:
      return xt;
    case FusionMode::sum:
      return add(xt, static_emb);
    case FusionMode::gated:
      break;
  }
  const Tensor reset =
      sigmoid(add(add(matmul(static_emb, gate.w_r), matmul(xt, gate.u_r)), gate.b_r));
  const Tensor update =
      sigmoid(add(add(matmul(static_emb, gate.w_z), matmul(xt, gate.u_z)), gate.b_z));
  const Tensor candidate = tanh(
      add(add(matmul(xt, gate.w_h), mul(reset, matmul(static_emb, gate.u_h))), gate.b_h));
  const Tensor keep = add_scalar(scale(update, -1.0), 1.0);
  return add(mul(keep, static_emb), mul(update, candidate));
}

Tensor head_sum(const AdjacencyHeads& heads, const Tensor& normed, bool training, Rng& rng) {
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(heads.head_dim));
  Tensor total;
  for (std::size_t i = 0; i < heads.heads; ++i) {
    const Tensor q = matmul(normed, heads.w_q[i]);
    const Tensor k = matmul(normed, heads.w_k[i]);
    const Tensor adj = dropout(scale(matmul(q, transpose(k)), inv_sqrt), heads.keep_prob, rng,
                               training);
    const Tensor head = mul(adj, slice(heads.head_weight, 0, i, 1));
    total = total.defined() ? add(total, head) : head;
  }
  return total;
}

Tensor multi_head_adjacency(const AdjacencyHeads& heads, const Tensor& fused, bool training,
                            Rng& rng) {
  return head_sum(heads, layer_norm(fused, heads.norm_gamma, heads.norm_beta), training, rng);
}

Tensor refine_adjacency(const AdjacencyHeads& heads, const Tensor& r, const Tensor& fused) {
  const std::size_t n = r.dim(r.rank() - 1);
  if (r.dim(r.rank() - 2) != n || fused.dim(fused.rank() - 2) != n) {
    throw DimensionError("refine_adjacency: " + shape_str(r.shape()) + " vs features " +
                         shape_str(fused.shape()));
  }
  const Tensor e = matmul(fused, heads.w_e);
  const Tensor s = add(layer_norm(r, heads.res_gamma, heads.res_beta),
                       layer_norm(matmul(e, transpose(e)), heads.skip_gamma, heads.skip_beta));
  const Tensor hidden = relu(add(matmul(s, heads.w1), heads.b1));
  return add(matmul(hidden, heads.w2), heads.b2);
}

Tensor apply_inductive_bias(const AdjacencyHeads& heads, const Tensor& s_hat,
                            const Tensor& dynamic_emb) {
  const Tensor md = dynamic_emb.detach();
  const Tensor prior =
      layer_norm(matmul(md, transpose(md)), heads.bias_gamma, heads.bias_beta);
  return row_softmax(relu(add(prior, s_hat)));
}

DynamicGraphLayer DynamicGraphLayer::init(std::size_t nodes, std::size_t window, std::size_t dim,
                                          std::size_t heads, std::size_t head_dim,
                                          std::size_t hidden, double keep_prob, Rng& rng) {
  DynamicGraphLayer layer;
  layer.gate = FusionGate::init(window, dim, rng);
  layer.heads = AdjacencyHeads::init(nodes, dim, heads, head_dim, hidden, keep_prob, rng);
  return layer;
}

Tensor DynamicGraphLayer::forward(const Tensor& x, const NodeEmbeddings& emb, FusionMode mode,
                                  bool training, Rng& rng) const {
  const Tensor fused = fuse_information(gate, x, emb.static_emb, mode);
  const Tensor r = multi_head_adjacency(heads, fused, training, rng);
  const Tensor s_hat = refine_adjacency(heads, r, fused);
  return apply_inductive_bias(heads, s_hat, emb.dynamic_emb);
}

ParamList DynamicGraphLayer::parameters() const {
  ParamList out;
  append_params(out, "gate.", gate.parameters());
  append_params(out, "heads.", heads.parameters());
  return out;
}

}  // namespace sdgl
