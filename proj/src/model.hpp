#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "dataset.hpp"
#include "graph_conv.hpp"
#include "graph_dynamic.hpp"
#include "graph_static.hpp"
#include "metrics.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "temporal_conv.hpp"

namespace sdgl {

struct ForwardResult {
  Tensor prediction;   // [B, N, L]
  Tensor static_adj;   // [N, N]
  Tensor dynamic_adj;  // [B, N, N]; undefined under no_dyadj
  Tensor graph_loss;   // scalar
};

// Static and dynamic graph learning, K rounds of gated TCN followed by
// static/dynamic mix-hop propagation with residual and skip connections, and
// a two-layer 1x1 output head.
class SdglModel {
 public:
  // Validates the config (nodes must be resolved) and initialises every
  // parameter from rng; dynamic embeddings start as a copy of the static ones.
  static SdglModel build(const ModelConfig& config, Rng& rng);

  // x is [B, N, h] in normalized units.
  ForwardResult forward(const Tensor& x, bool training, Rng& rng) const;

  // Trainable tensors. Dynamic embeddings are not included.
  ParamList parameters() const;
  // Dynamic-graph parameters only (gate, heads, dynamic mix-hop layers).
  ParamList dynamic_parameters() const;
  // parameters() plus the dynamic embeddings, as stored in checkpoints.
  ParamList state() const;

  const ModelConfig& config() const { return config_; }
  NodeEmbeddings& embeddings() { return emb_; }
  const NodeEmbeddings& embeddings() const { return emb_; }

 private:
  ModelConfig config_;
  NodeEmbeddings emb_;
  DynamicGraphLayer dynamic_;
  Tensor start_w_, start_b_;
  std::vector<GatedTcnLayer> tcn_;
  std::vector<MixHopLayer> gcn_static_, gcn_dynamic_;
  std::vector<Tensor> skip_w_, skip_b_;
  Tensor skip_end_w_, skip_end_b_;
  Tensor end1_w_, end1_b_, end2_w_, end2_b_;
};

// mean|pred - target| + lambda * graph_loss
Tensor hybrid_loss(const Tensor& pred, const Tensor& target, const Tensor& graph_loss,
                   double lambda);

// Trained model plus everything needed to reproduce or resume it.
struct Checkpoint {
  SdglModel model;
  Scaler scaler;
  std::uint64_t step = 0;
  Rng rng;

  const ModelConfig& config() const { return model.config(); }
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;   // mean hybrid loss over the epoch's batches
  double train_mae = 0.0;    // mean prediction term (normalized units)
  double graph_loss = 0.0;   // mean graph regularization value
  std::optional<MetricReport> validation;  // horizon-averaged, original units
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Trains on the chronological train split. Deterministic given config.seed.
// Throws TrainingError when the loss becomes non-finite.
Checkpoint train(const SeriesDataset& ds, ModelConfig config, const EpochCallback& on_epoch = {},
                 std::vector<EpochLog>* log = nullptr);

// One optimizer step: clip the global gradient norm, then plain SGD.
void sgd_step(const ParamList& params, double learning_rate, double clip_norm);

// Predictions [windows, N, L] in original units for windows starting at
// `starts` of the dataset, evaluated without dropout.
std::vector<double> predict_windows(const Checkpoint& ckpt, const SeriesDataset& ds,
                                    const std::vector<std::size_t>& starts);

// Per-horizon metrics in original units, plus their average.
struct HorizonMetrics {
  std::vector<MetricReport> per_horizon;
  MetricReport averaged;
  std::size_t windows = 0;
};
HorizonMetrics evaluate(const Checkpoint& ckpt, const SeriesDataset& ds,
                        const std::vector<std::size_t>& starts);
MetricReport average_metrics(const std::vector<MetricReport>& reports);

// Forecast [N, L] in original units from one window [N, h] in original units.
std::vector<double> predict(const Checkpoint& ckpt, std::span<const double> window);

// Learned matrices, [N, N] row-major.
std::vector<double> static_graph(const Checkpoint& ckpt);
std::vector<double> dynamic_graph(const Checkpoint& ckpt, const SeriesDataset& ds,
                                  std::size_t window_start);

// Windows of the dataset split per the checkpoint's config.
WindowSplits split_for(const ModelConfig& config, const SeriesDataset& ds);

// Binary checkpoint: "SDGL", u32 version, u32-length-prefixed UTF-8 text
// (config and run state), u32 tensor count, then per tensor a u32-prefixed
// name, u32 rank, u64 dims and little-endian f64 payload.
inline constexpr std::uint32_t kCheckpointVersion = 1;
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sdgl
