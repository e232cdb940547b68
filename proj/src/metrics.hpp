#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace sdgl {

// Forecast quality over a row-major [samples, nodes] pair. Optional fields
// are empty where the metric is undefined (MAPE with all-zero targets, RSE
// with constant targets, CORR when no node has variance on both sides).
struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> mape;
  std::optional<double> rse;
  std::optional<double> corr;
};

MetricReport compute_metrics(std::span<const double> pred, std::span<const double> truth,
                             std::size_t nodes);

// Area under the ROC curve of the learned off-diagonal weights scored
// against a binary truth adjacency, both [N, N] row-major. Ties count one
// half. Empty when the truth has no edges or no non-edges.
std::optional<double> graph_recovery_auc(std::span<const double> learned,
                                         std::span<const double> truth, std::size_t nodes);

}  // namespace sdgl
