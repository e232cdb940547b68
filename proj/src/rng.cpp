#include "rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "errors.hpp"

namespace sdgl {

double Rng::normal() {
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw ContractError("Rng::below: empty range");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << seed_ << ' ' << engine_;
  return os.str();
}

Rng Rng::deserialize(const std::string& text) {
  std::istringstream is(text);
  Rng rng;
  is >> rng.seed_ >> rng.engine_;
  if (!is) throw ParseError("malformed RNG state");
  return rng;
}

}  // namespace sdgl
