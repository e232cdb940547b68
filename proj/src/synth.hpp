#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dataset.hpp"

namespace sdgl {

// Generator for series driven by a planted graph:
//   x^0 = s(0) + e_0,   x^t = alpha P(t) x^(t-1) + s(t) + e_t
// where P(t) is the row-normalized primary graph (plus identity when
// self_loops is set), or the secondary graph on switched steps,
// s_j(t) = amplitude sin(2 pi t / period + phase_j) and e_t is i.i.d.
// Gaussian noise. The phase is shared by all nodes unless random_phase is set.
//
// Truth graphs are undirected Erdos-Renyi with an empty diagonal; a node left
// isolated is joined to one random partner so every row of P has positive
// sum. Self-loops in P make neighbours move together within a step. The
// secondary graph rewires round(rewire_fraction * |E|) primary edges to pairs
// that are not primary edges.
//
// Switching: with switch_every = E > 0 and switch_length = S, step t uses the
// secondary graph when t mod E >= E - S.
struct PlantedGraphSpec {
  std::size_t nodes = 8;
  double edge_prob = 0.2;
  double alpha = 0.7;
  double period = 24.0;
  double amplitude = 1.0;
  double noise_std = 0.3;
  std::size_t switch_every = 0;
  std::size_t switch_length = 0;
  double rewire_fraction = 0.5;
  bool self_loops = true;     // P(t) row-normalizes A + I rather than A
  bool random_phase = false;  // per-node seasonal phase instead of a shared one
  std::optional<std::vector<double>> initial_state;  // overrides x^0
};

struct SynthResult {
  SeriesDataset dataset;
  std::vector<double> primary;    // binary [N, N]
  std::vector<double> secondary;  // binary [N, N]; equals primary when no switching
  std::vector<SplitRange> switched_intervals;
  std::vector<bool> switched;     // per step
};

// Row-normalized copy of a nonnegative [N, N] matrix; zero rows stay zero.
std::vector<double> row_normalize(const std::vector<double>& adj, std::size_t nodes);

// Throws ConfigError for invalid specs and NumericError when alpha * P is not
// a contraction (max row sum >= 1).
SynthResult synth_generate(const PlantedGraphSpec& spec, std::size_t steps, std::uint64_t seed);

}  // namespace sdgl
