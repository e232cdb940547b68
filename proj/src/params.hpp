#pragma once

#include <string>
#include <vector>

#include "tensor.hpp"

namespace sdgl {

// Named handle to a trainable tensor. Handles alias the owning module's
// storage, so writing through one updates the module.
struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedTensor>;

inline void append_params(ParamList& out, const std::string& prefix, const ParamList& more) {
  for (const auto& p : more) out.push_back({prefix + p.name, p.tensor});
}

}  // namespace sdgl
