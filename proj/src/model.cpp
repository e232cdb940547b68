#include "model.hpp"

#include <cmath>

#include "errors.hpp"
#include "init.hpp"
#include "ops.hpp"

namespace sdgl {

using namespace ops;

SdglModel SdglModel::build(const ModelConfig& config, Rng& rng) {
  config.validate();
  SdglModel m;
  m.config_ = config;
  const std::size_t n = config.nodes, c = config.channels;
  m.emb_ = NodeEmbeddings::init(n, config.embed_dim, config.momentum, rng);
  m.dynamic_ = DynamicGraphLayer::init(n, config.window, config.embed_dim, config.heads,
                                       config.resolved_head_dim(), config.resolved_mlp_hidden(),
                                       config.keep_prob, rng);
  m.start_w_ = init_uniform({c, 1, 1}, 1, rng);
  m.start_b_ = init_zeros({c});
  for (std::size_t d : config.dilations()) {
    m.tcn_.push_back(GatedTcnLayer::init(c, c, d, rng));
    m.gcn_static_.push_back(MixHopLayer::init(c, config.depth, rng));
    m.gcn_dynamic_.push_back(MixHopLayer::init(c, config.depth, rng));
    m.skip_w_.push_back(init_uniform({config.skip_channels, c, 1}, c, rng));
    m.skip_b_.push_back(init_zeros({config.skip_channels}));
  }
  m.skip_end_w_ = init_uniform({config.skip_channels, c, 1}, c, rng);
  m.skip_end_b_ = init_zeros({config.skip_channels});
  m.end1_w_ = init_uniform({config.end_channels, config.skip_channels, 1}, config.skip_channels, rng);
  m.end1_b_ = init_zeros({config.end_channels});
  m.end2_w_ = init_uniform({config.horizon, config.end_channels, 1}, config.end_channels, rng);
  m.end2_b_ = init_zeros({config.horizon});
  return m;
}

ForwardResult SdglModel::forward(const Tensor& x, bool training, Rng& rng) const {
  const ModelConfig& cfg = config_;
  if (x.rank() != 3 || x.dim(1) != cfg.nodes || x.dim(2) != cfg.window) {
    throw DimensionError("forward: input " + shape_str(x.shape()) + " does not match [B," +
                         std::to_string(cfg.nodes) + "," + std::to_string(cfg.window) + "]");
  }
  const std::size_t batch = x.dim(0);
  ForwardResult out;
  out.static_adj = build_static_graph(emb_.static_emb);
  out.graph_loss = graph_regularization_loss(x, out.static_adj, cfg.gamma);
  if (!cfg.ablate.no_dyadj) {
    const FusionMode mode = cfg.ablate.no_ifm     ? FusionMode::bypass
                            : cfg.ablate.ifm_plus ? FusionMode::sum
                                                  : FusionMode::gated;
    out.dynamic_adj = dynamic_.forward(x, emb_, mode, training, rng);
  }

  const std::size_t final_len = cfg.window - (cfg.receptive_field() - 1);
  Tensor h = conv_time(reshape(x, {batch, 1, cfg.nodes, cfg.window}), start_w_, start_b_, 1);
  Tensor skip;
  for (std::size_t j = 0; j < tcn_.size(); ++j) {
    const Tensor residual = h;
    const Tensor t = gated_tcn(h, tcn_[j]);
    const std::size_t len = t.dim(3);
    const Tensor s = conv_time(slice(t, 3, len - final_len, final_len), skip_w_[j], skip_b_[j], 1);
    skip = skip.defined() ? add(skip, s) : s;
    Tensor z = mix_hop_propagate(t, out.static_adj, gcn_static_[j]);
    if (!cfg.ablate.no_dyadj) {
      z = fuse_branches(z, mix_hop_propagate(t, out.dynamic_adj, gcn_dynamic_[j]));
    }
    h = add(z, slice(residual, 3, residual.dim(3) - len, len));
  }
  skip = add(skip, conv_time(h, skip_end_w_, skip_end_b_, 1));
  if (debug_checks()) {
    for (double v : skip.data()) {
      if (!std::isfinite(v)) throw NumericError("forward: non-finite activation in skip accumulator");
    }
  }
  const Tensor last = relu(slice(skip, 3, final_len - 1, 1));
  const Tensor hidden = relu(conv_time(last, end1_w_, end1_b_, 1));
  const Tensor y = conv_time(hidden, end2_w_, end2_b_, 1);  // [B, L, N, 1]
  out.prediction = permute(reshape(y, {batch, cfg.horizon, cfg.nodes}), {0, 2, 1});
  return out;
}

ParamList SdglModel::parameters() const {
  ParamList out = {{"emb.static", emb_.static_emb}};
  append_params(out, "dyn.", dynamic_.parameters());
  out.push_back({"start.w", start_w_});
  out.push_back({"start.b", start_b_});
  for (std::size_t j = 0; j < tcn_.size(); ++j) {
    const std::string l = "layer" + std::to_string(j) + ".";
    append_params(out, l + "tcn.", tcn_[j].parameters());
    append_params(out, l + "gcn_static.", gcn_static_[j].parameters());
    append_params(out, l + "gcn_dynamic.", gcn_dynamic_[j].parameters());
    out.push_back({l + "skip.w", skip_w_[j]});
    out.push_back({l + "skip.b", skip_b_[j]});
  }
  out.push_back({"skip_end.w", skip_end_w_});
  out.push_back({"skip_end.b", skip_end_b_});
  out.push_back({"end1.w", end1_w_});
  out.push_back({"end1.b", end1_b_});
  out.push_back({"end2.w", end2_w_});
  out.push_back({"end2.b", end2_b_});
  return out;
}

ParamList SdglModel::dynamic_parameters() const {
  ParamList out;
  append_params(out, "dyn.", dynamic_.parameters());
  for (std::size_t j = 0; j < gcn_dynamic_.size(); ++j) {
    append_params(out, "layer" + std::to_string(j) + ".gcn_dynamic.",
                  gcn_dynamic_[j].parameters());
  }
  return out;
}

ParamList SdglModel::state() const {
  ParamList out = parameters();
  out.push_back({"emb.dynamic", emb_.dynamic_emb});
  return out;
}

Tensor hybrid_loss(const Tensor& pred, const Tensor& target, const Tensor& graph_loss,
                   double lambda) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("hybrid_loss: prediction " + shape_str(pred.shape()) + " vs target " +
                         shape_str(target.shape()));
  }
  const Tensor mae = mean(abs(sub(pred, target)));
  if (!graph_loss.defined()) return mae;
  return add(mae, scale(graph_loss, lambda));
}

}  // namespace sdgl
