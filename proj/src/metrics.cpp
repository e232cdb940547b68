#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "errors.hpp"

namespace sdgl {

MetricReport compute_metrics(std::span<const double> pred, std::span<const double> truth,
                             std::size_t nodes) {
  if (pred.size() != truth.size() || pred.empty() || nodes == 0 || pred.size() % nodes != 0) {
    throw DimensionError("compute_metrics: prediction/target sizes " +
                         std::to_string(pred.size()) + " vs " + std::to_string(truth.size()) +
                         " for " + std::to_string(nodes) + " nodes");
  }
  const std::size_t n = pred.size();
  const std::size_t samples = n / nodes;
  MetricReport r;
  double abs_sum = 0.0, sq_sum = 0.0, ape_sum = 0.0, truth_sum = 0.0;
  std::size_t ape_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = pred[i] - truth[i];
    abs_sum += std::fabs(e);
    sq_sum += e * e;
    truth_sum += truth[i];
    if (truth[i] != 0.0) {
      ape_sum += std::fabs(e) / std::fabs(truth[i]);
      ++ape_count;
    }
  }
  r.mae = abs_sum / static_cast<double>(n);
  r.rmse = std::sqrt(sq_sum / static_cast<double>(n));
  if (ape_count > 0) r.mape = ape_sum / static_cast<double>(ape_count);
  const double truth_mean = truth_sum / static_cast<double>(n);
  double dev = 0.0;
  for (double y : truth) dev += (y - truth_mean) * (y - truth_mean);
  if (dev > 0.0) r.rse = std::sqrt(sq_sum) / std::sqrt(dev);

  double corr_sum = 0.0;
  std::size_t corr_nodes = 0;
  for (std::size_t j = 0; j < nodes; ++j) {
    double mp = 0.0, mt = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      mp += pred[s * nodes + j];
      mt += truth[s * nodes + j];
    }
    mp /= static_cast<double>(samples);
    mt /= static_cast<double>(samples);
    double cov = 0.0, vp = 0.0, vt = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      const double a = pred[s * nodes + j] - mp;
      const double b = truth[s * nodes + j] - mt;
      cov += a * b;
      vp += a * a;
      vt += b * b;
    }
    if (vp > 0.0 && vt > 0.0) {
      corr_sum += cov / std::sqrt(vp * vt);
      ++corr_nodes;
    }
  }
  if (corr_nodes > 0) r.corr = corr_sum / static_cast<double>(corr_nodes);
  return r;
}

std::optional<double> graph_recovery_auc(std::span<const double> learned,
                                         std::span<const double> truth, std::size_t nodes) {
  if (learned.size() != nodes * nodes || truth.size() != nodes * nodes) {
    throw DimensionError("graph_recovery_auc: matrices must be " + std::to_string(nodes) + "x" +
                         std::to_string(nodes));
  }
  struct Entry {
    double score;
    bool edge;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = 0; j < nodes; ++j) {
      if (i != j) entries.push_back({learned[i * nodes + j], truth[i * nodes + j] != 0.0});
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.score < b.score; });
  // Mann-Whitney U with average ranks over ties.
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    while (j < entries.size() && entries[j].score == entries[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (entries[k].edge) {
        rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = entries.size() - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double p = static_cast<double>(positives);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

}  // namespace sdgl
