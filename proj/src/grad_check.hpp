#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "tensor.hpp"

namespace sdgl {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error max(|a|, |b|, floor).
  double floor = 1e-8;
  // Coordinates sampled per tensor; 0 checks every coordinate.
  std::size_t samples_per_tensor = 0;
  std::uint64_t sample_seed = 0;
  // Skip coordinates where forward and backward one-sided differences
  // disagree, i.e. the step straddles a relu/abs kink.
  bool skip_kinks = true;
  // Fourth-order stencil (f(x-2h) - 8f(x-h) + 8f(x+h) - f(x+2h)) / 12h. Its
  // truncation error is small enough to allow a larger step, which keeps
  // rounding noise below tiny gradients of deep compositions. Kinks are then
  // detected by comparing second differences at h/2, h and 2h.
  bool five_point = false;
  // Differences up to rounding_allowance * eps * max(1, |f|) / step are
  // attributed to finite-difference rounding: the relative error floor is
  // raised to that level divided by the tolerance. 0 disables it.
  double rounding_allowance = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  bool pass = true;
};

// Compares the tape gradient of the scalar f() with respect to every tensor
// in `inputs` against central finite differences. f must read the inputs'
// current values each time it is called; it is invoked once under a tape and
// then repeatedly without one.
GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                           const GradCheckOptions& options = {});

inline GradCheckReport grad_check(const std::function<Tensor()>& f, Tensor x,
                                  const GradCheckOptions& options = {}) {
  return grad_check(f, std::vector<Tensor>{std::move(x)}, options);
}

double relative_error(double a, double b, double floor = 1e-8);

}  // namespace sdgl
