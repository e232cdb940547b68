#pragma once

#include <cmath>

#include "rng.hpp"
#include "tensor.hpp"

namespace sdgl {

// Weight matrix initialised uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
inline Tensor init_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (auto& v : t.mutable_data()) v = rng.uniform(-bound, bound);
  return t;
}

inline Tensor init_zeros(Shape shape) { return Tensor::zeros(std::move(shape), true); }

inline Tensor init_ones(Shape shape) { return Tensor::full(std::move(shape), 1.0, true); }

}  // namespace sdgl
