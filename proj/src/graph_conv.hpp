#pragma once

#include <cstddef>

#include "params.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace sdgl {

// P = A / rowsum(A) for A [N, N] or [B, N, N]. Throws DegenerateGraphError
// on a row with non-positive sum.
Tensor transition_matrix(const Tensor& adj);

// Propagation depth s plus the 1x1 selection map c(s+1) -> c.
struct MixHopLayer {
  std::size_t depth = 1;
  Tensor weight;  // [c, c(s+1), 1]
  Tensor bias;    // [c]

  static MixHopLayer init(std::size_t channels, std::size_t depth, Rng& rng);
  ParamList parameters() const;
};

// W_s concat(P^1 x, ..., P^s x, x) over channels, with x [B, C, N, T] and
// P = transition_matrix(adj).
Tensor mix_hop_propagate(const Tensor& x, const Tensor& adj, const MixHopLayer& layer);

// Elementwise sum of the static- and dynamic-branch outputs.
Tensor fuse_branches(const Tensor& z_static, const Tensor& z_dynamic);

}  // namespace sdgl
