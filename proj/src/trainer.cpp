#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"
#include "model.hpp"
#include "ops.hpp"

namespace sdgl {

namespace {

constexpr std::size_t kEvalBatch = 64;

std::vector<double> ratios_for(const ModelConfig& cfg) {
  const double test = 1.0 - cfg.train_ratio - cfg.val_ratio;
  std::vector<double> r = {cfg.train_ratio};
  if (cfg.val_ratio > 0.0) r.push_back(cfg.val_ratio);
  if (test > 1e-12) r.push_back(test);
  // Renormalise the last entry so floating error never breaks the sum check.
  r.back() = 1.0 - std::accumulate(r.begin(), r.end() - 1, 0.0);
  return r;
}

}  // namespace

WindowSplits split_for(const ModelConfig& config, const SeriesDataset& ds) {
  return window_split(ds, config.window, config.horizon, ratios_for(config));
}

void sgd_step(const ParamList& params, double learning_rate, double clip_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (double g : p.tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  const double factor = norm > clip_norm ? clip_norm / norm : 1.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    Tensor t = p.tensor;
    auto values = t.mutable_data();
    const auto grad = t.grad();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= learning_rate * factor * grad[i];
  }
}

Checkpoint train(const SeriesDataset& ds, ModelConfig config, const EpochCallback& on_epoch,
                 std::vector<EpochLog>* log) {
  if (config.nodes == 0) config.nodes = ds.nodes;
  if (config.nodes != ds.nodes) {
    throw ConfigError("config field 'nodes': " + std::to_string(config.nodes) +
                      " does not match the dataset's " + std::to_string(ds.nodes));
  }
  config.validate();
  const WindowSplits splits = split_for(config, ds);

  Checkpoint ckpt;
  ckpt.scaler = Scaler::fit(ds, splits.ranges[0]);
  ckpt.rng = Rng(config.seed);
  ckpt.model = SdglModel::build(config, ckpt.rng);
  const std::vector<double> normalized = ckpt.scaler.transform_all(ds);
  const ParamList params = ckpt.model.parameters();
  const double lambda = config.ablate.no_gloss ? 0.0 : config.lambda;

  std::vector<std::size_t> order = splits.starts[0];
  double last_finite = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[ckpt.rng.below(i)]);
    }
    EpochLog entry;
    entry.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - b);
      const WindowBatch batch =
          make_batch(normalized, ds.nodes, std::span(order).subspan(b, count), config.window,
                     config.horizon);
      for (const auto& p : params) {
        Tensor t = p.tensor;
        t.zero_grad();
      }
      auto diverged = [&](const std::string& why) {
        return TrainingError("training diverged at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(ckpt.step) + ": " + why + " (last finite loss " +
                             std::to_string(last_finite) + ")");
      };
      double loss_value = 0.0;
      {
        Tape tape;
        ForwardResult fr;
        try {
          fr = ckpt.model.forward(batch.inputs, true, ckpt.rng);
        } catch (const NumericError& e) {
          throw diverged(e.what());
        } catch (const DegenerateGraphError& e) {
          // Non-finite parameters surface as empty softmax rows.
          throw diverged(e.what());
        }
        const Tensor mae = ops::mean(ops::abs(ops::sub(fr.prediction, batch.targets)));
        const Tensor loss = config.ablate.no_gloss
                                ? hybrid_loss(fr.prediction, batch.targets, Tensor{}, 0.0)
                                : hybrid_loss(fr.prediction, batch.targets, fr.graph_loss, lambda);
        loss_value = loss.item();
        if (!std::isfinite(loss_value)) throw diverged("loss is not finite");
        last_finite = loss_value;
        entry.train_mae += mae.item();
        entry.graph_loss += fr.graph_loss.item();
        tape.backward(loss);
      }
      sgd_step(params, config.learning_rate, config.clip_norm);
      ckpt.model.embeddings().momentum_update();
      ++ckpt.step;
      entry.train_loss += loss_value;
      ++batches;
    }
    if (batches > 0) {
      entry.train_loss /= static_cast<double>(batches);
      entry.train_mae /= static_cast<double>(batches);
      entry.graph_loss /= static_cast<double>(batches);
    }
    if (splits.starts.size() > 1 && config.val_ratio > 0.0) {
      entry.validation = evaluate(ckpt, ds, splits.starts[1]).averaged;
    }
    if (on_epoch) on_epoch(entry);
    if (log) log->push_back(entry);
  }
  return ckpt;
}

std::vector<double> predict_windows(const Checkpoint& ckpt, const SeriesDataset& ds,
                                    const std::vector<std::size_t>& starts) {
  const ModelConfig& cfg = ckpt.config();
  if (ds.nodes != cfg.nodes) {
    throw DimensionError("dataset has " + std::to_string(ds.nodes) + " nodes, checkpoint expects " +
                         std::to_string(cfg.nodes));
  }
  const std::vector<double> normalized = ckpt.scaler.transform_all(ds);
  std::vector<double> out;
  out.reserve(starts.size() * cfg.nodes * cfg.horizon);
  Rng eval_rng(0);
  for (std::size_t b = 0; b < starts.size(); b += kEvalBatch) {
    const std::size_t count = std::min(kEvalBatch, starts.size() - b);
    const WindowBatch batch = make_batch(normalized, ds.nodes, std::span(starts).subspan(b, count),
                                         cfg.window, cfg.horizon);
    const ForwardResult fr = ckpt.model.forward(batch.inputs, false, eval_rng);
    const auto pred = fr.prediction.data();
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t n = 0; n < cfg.nodes; ++n) {
        for (std::size_t l = 0; l < cfg.horizon; ++l) {
          out.push_back(ckpt.scaler.inverse(pred[(i * cfg.nodes + n) * cfg.horizon + l], n));
        }
      }
    }
  }
  return out;
}

MetricReport average_metrics(const std::vector<MetricReport>& reports) {
  MetricReport avg;
  if (reports.empty()) return avg;
  const double k = static_cast<double>(reports.size());
  auto mean_opt = [&](std::optional<double> MetricReport::*field) -> std::optional<double> {
    double s = 0.0;
    for (const auto& r : reports) {
      if (!(r.*field)) return std::nullopt;
      s += *(r.*field);
    }
    return s / k;
  };
  for (const auto& r : reports) {
    avg.mae += r.mae;
    avg.rmse += r.rmse;
  }
  avg.mae /= k;
  avg.rmse /= k;
  avg.mape = mean_opt(&MetricReport::mape);
  avg.rse = mean_opt(&MetricReport::rse);
  avg.corr = mean_opt(&MetricReport::corr);
  return avg;
}

HorizonMetrics evaluate(const Checkpoint& ckpt, const SeriesDataset& ds,
                        const std::vector<std::size_t>& starts) {
  const ModelConfig& cfg = ckpt.config();
  const std::vector<double> pred = predict_windows(ckpt, ds, starts);
  HorizonMetrics out;
  out.windows = starts.size();
  const std::size_t n = cfg.nodes, L = cfg.horizon;
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<double> p(starts.size() * n), y(starts.size() * n);
    for (std::size_t w = 0; w < starts.size(); ++w) {
      for (std::size_t j = 0; j < n; ++j) {
        p[w * n + j] = pred[(w * n + j) * L + l];
        y[w * n + j] = ds.at(starts[w] + cfg.window + l, j);
      }
    }
    out.per_horizon.push_back(compute_metrics(p, y, n));
  }
  out.averaged = average_metrics(out.per_horizon);
  return out;
}

std::vector<double> predict(const Checkpoint& ckpt, std::span<const double> window) {
  const ModelConfig& cfg = ckpt.config();
  if (window.size() != cfg.nodes * cfg.window) {
    throw DimensionError("predict: expected a " + std::to_string(cfg.nodes) + "x" +
                         std::to_string(cfg.window) + " window, got " +
                         std::to_string(window.size()) + " values");
  }
  std::vector<double> x(window.size());
  for (std::size_t n = 0; n < cfg.nodes; ++n) {
    for (std::size_t t = 0; t < cfg.window; ++t) {
      x[n * cfg.window + t] = ckpt.scaler.transform(window[n * cfg.window + t], n);
    }
  }
  Rng eval_rng(0);
  const ForwardResult fr =
      ckpt.model.forward(Tensor({1, cfg.nodes, cfg.window}, std::move(x)), false, eval_rng);
  std::vector<double> out(cfg.nodes * cfg.horizon);
  for (std::size_t n = 0; n < cfg.nodes; ++n) {
    for (std::size_t l = 0; l < cfg.horizon; ++l) {
      out[n * cfg.horizon + l] = ckpt.scaler.inverse(fr.prediction[n * cfg.horizon + l], n);
    }
  }
  return out;
}

std::vector<double> static_graph(const Checkpoint& ckpt) {
  const Tensor a = build_static_graph(ckpt.model.embeddings().static_emb.detach());
  return {a.data().begin(), a.data().end()};
}

std::vector<double> dynamic_graph(const Checkpoint& ckpt, const SeriesDataset& ds,
                                  std::size_t window_start) {
  const ModelConfig& cfg = ckpt.config();
  if (cfg.ablate.no_dyadj) throw StateError("dynamic_graph: model was trained without dynamic graphs");
  if (ds.nodes != cfg.nodes) {
    throw DimensionError("dataset has " + std::to_string(ds.nodes) + " nodes, checkpoint expects " +
                         std::to_string(cfg.nodes));
  }
  if (window_start + cfg.window > ds.steps) {
    throw DimensionError("dynamic_graph: window " + std::to_string(window_start) +
                         " out of range for " + std::to_string(ds.steps) + " steps");
  }
  std::vector<double> x(cfg.nodes * cfg.window);
  for (std::size_t n = 0; n < cfg.nodes; ++n) {
    for (std::size_t t = 0; t < cfg.window; ++t) {
      x[n * cfg.window + t] = ckpt.scaler.transform(ds.at(window_start + t, n), n);
    }
  }
  Rng eval_rng(0);
  const ForwardResult fr =
      ckpt.model.forward(Tensor({1, cfg.nodes, cfg.window}, std::move(x)), false, eval_rng);
  return {fr.dynamic_adj.data().begin(), fr.dynamic_adj.data().end()};
}

}  // namespace sdgl
