#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace sdgl {

// T x N matrix of observations, one row per time step, one column per node.
struct SeriesDataset {
  std::string name;
  std::vector<std::string> node_names;
  std::vector<std::int64_t> timestamps;  // empty when the file has none
  std::vector<double> values;            // row-major [steps, nodes]
  std::size_t steps = 0;
  std::size_t nodes = 0;

  double at(std::size_t t, std::size_t node) const { return values[t * nodes + node]; }
};

// Header row of node names; an optional leading "timestamp" or "time" column
// holds strictly increasing integers. Rejects ragged rows (by line number),
// non-numeric cells (by 1-based data row and column) and NaN rows.
SeriesDataset load_csv(const std::string& path);
SeriesDataset parse_csv(const std::string& text, const std::string& name = "inline");

// Values printed with 17 significant digits so they parse back exactly.
void save_csv(const SeriesDataset& ds, const std::string& path);
std::string format_double(double v);

// Half-open row range [begin, end) of the dataset.
struct SplitRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - begin; }
};

struct WindowSplits {
  std::vector<SplitRange> ranges;               // chronological, one per ratio
  std::vector<std::vector<std::size_t>> starts;  // absolute window start rows per split
};

// Number of stride-1 windows of input length h and horizon L in T steps.
std::size_t window_count(std::size_t steps, std::size_t window, std::size_t horizon);

// Chronological split by ratios (summing to 1), then stride-1 windows inside
// each split. Throws naming the first split too short for one window.
WindowSplits window_split(const SeriesDataset& ds, std::size_t window, std::size_t horizon,
                          const std::vector<double>& ratios);

// Per-node z-score. The standard deviation is floored at 1e-8.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;

  static Scaler fit(const SeriesDataset& ds, SplitRange rows);
  double transform(double v, std::size_t node) const { return (v - mean[node]) / std[node]; }
  double inverse(double v, std::size_t node) const { return v * std[node] + mean[node]; }
  std::vector<double> transform_all(const SeriesDataset& ds) const;
};

struct WindowBatch {
  Tensor inputs;   // [B, N, h]
  Tensor targets;  // [B, N, L]
  std::vector<std::size_t> starts;
};

// Gathers windows from row-major [T, N] values.
WindowBatch make_batch(std::span<const double> values, std::size_t nodes,
                       std::span<const std::size_t> starts, std::size_t window,
                       std::size_t horizon);

}  // namespace sdgl
