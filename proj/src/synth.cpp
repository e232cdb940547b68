#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "rng.hpp"

namespace sdgl {

namespace {

std::vector<double> random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<double> adj(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) adj[i * n + j] = adj[j * n + i] = 1.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    bool isolated = true;
    for (std::size_t j = 0; j < n; ++j) isolated = isolated && adj[i * n + j] == 0.0;
    if (isolated) {
      std::size_t j = rng.below(n - 1);
      if (j >= i) ++j;
      adj[i * n + j] = adj[j * n + i] = 1.0;
    }
  }
  return adj;
}

std::vector<double> rewire(const std::vector<double>& primary, std::size_t n, double fraction,
                           Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> edges, non_edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      (primary[i * n + j] != 0.0 ? edges : non_edges).emplace_back(i, j);
    }
  }
  const auto count = std::min<std::size_t>(
      static_cast<std::size_t>(std::lround(fraction * static_cast<double>(edges.size()))),
      non_edges.size());
  std::vector<double> out = primary;
  for (std::size_t k = 0; k < count; ++k) {
    std::swap(edges[k], edges[k + rng.below(edges.size() - k)]);
    std::swap(non_edges[k], non_edges[k + rng.below(non_edges.size() - k)]);
    auto [a, b] = edges[k];
    out[a * n + b] = out[b * n + a] = 0.0;
    auto [c, d] = non_edges[k];
    out[c * n + d] = out[d * n + c] = 1.0;
  }
  return out;
}

double max_row_sum(const std::vector<double>& m, std::size_t n) {
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::fabs(m[i * n + j]);
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

std::vector<double> row_normalize(const std::vector<double>& adj, std::size_t nodes) {
  std::vector<double> out(adj);
  for (std::size_t i = 0; i < nodes; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < nodes; ++j) s += adj[i * nodes + j];
    if (s > 0.0) {
      for (std::size_t j = 0; j < nodes; ++j) out[i * nodes + j] /= s;
    }
  }
  return out;
}

SynthResult synth_generate(const PlantedGraphSpec& spec, std::size_t steps, std::uint64_t seed) {
  const std::size_t n = spec.nodes;
  if (n < 2) throw ConfigError("synth: need at least 2 nodes");
  if (steps < 1) throw ConfigError("synth: need at least 1 step");
  if (!(spec.edge_prob >= 0.0 && spec.edge_prob <= 1.0)) {
    throw ConfigError("synth: edge probability must lie in [0, 1]");
  }
  if (!(spec.period > 0.0)) throw ConfigError("synth: seasonal period must be > 0");
  if (!(spec.noise_std >= 0.0)) throw ConfigError("synth: noise std must be >= 0");
  if (!(spec.rewire_fraction >= 0.0 && spec.rewire_fraction <= 1.0)) {
    throw ConfigError("synth: rewire fraction must lie in [0, 1]");
  }
  if (spec.switch_every > 0 && spec.switch_length > spec.switch_every) {
    throw ConfigError("synth: switch length exceeds switch period");
  }
  if (spec.initial_state && spec.initial_state->size() != n) {
    throw ConfigError("synth: initial state must have one value per node");
  }

  Rng rng(seed);
  SynthResult out;
  out.primary = random_graph(n, spec.edge_prob, rng);
  const bool switching = spec.switch_every > 0 && spec.switch_length > 0;
  out.secondary = switching ? rewire(out.primary, n, spec.rewire_fraction, rng) : out.primary;
  auto transition = [&](std::vector<double> adj) {
    if (spec.self_loops) {
      for (std::size_t i = 0; i < n; ++i) adj[i * n + i] = 1.0;
    }
    return row_normalize(adj, n);
  };
  const auto p1 = transition(out.primary);
  const auto p2 = transition(out.secondary);
  for (const auto* p : {&p1, &p2}) {
    const double radius_bound = std::fabs(spec.alpha) * max_row_sum(*p, n);
    if (radius_bound >= 1.0) {
      throw NumericError("synth: coupling alpha * P has spectral radius bound " +
                         std::to_string(radius_bound) + " >= 1; choose |alpha| < 1");
    }
  }

  std::vector<double> phase(n);
  if (spec.random_phase) {
    for (auto& ph : phase) ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  auto seasonal = [&](std::size_t t, std::size_t j) {
    return spec.amplitude *
           std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / spec.period + phase[j]);
  };

  out.switched.assign(steps, false);
  if (switching) {
    for (std::size_t t = 0; t < steps; ++t) {
      out.switched[t] = t % spec.switch_every >= spec.switch_every - spec.switch_length;
    }
    for (std::size_t t = 0; t < steps;) {
      if (!out.switched[t]) {
        ++t;
        continue;
      }
      std::size_t e = t;
      while (e < steps && out.switched[e]) ++e;
      out.switched_intervals.push_back({t, e});
      t = e;
    }
  }

  SeriesDataset& ds = out.dataset;
  ds.name = "synthetic";
  ds.nodes = n;
  ds.steps = steps;
  for (std::size_t j = 0; j < n; ++j) ds.node_names.push_back("n" + std::to_string(j));
  ds.values.assign(steps * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    ds.values[j] = spec.initial_state ? (*spec.initial_state)[j]
                                      : seasonal(0, j) + spec.noise_std * rng.normal();
  }
  for (std::size_t t = 1; t < steps; ++t) {
    const auto& p = out.switched[t] ? p2 : p1;
    const double* prev = ds.values.data() + (t - 1) * n;
    double* cur = ds.values.data() + t * n;
    for (std::size_t i = 0; i < n; ++i) {
      double coupled = 0.0;
      for (std::size_t j = 0; j < n; ++j) coupled += p[i * n + j] * prev[j];
      const double noise = spec.noise_std > 0.0 ? spec.noise_std * rng.normal() : 0.0;
      cur[i] = spec.alpha * coupled + seasonal(t, i) + noise;
    }
  }
  for (double v : ds.values) {
    if (!std::isfinite(v)) throw NumericError("synth: trajectory diverged");
  }
  return out;
}

}  // namespace sdgl
