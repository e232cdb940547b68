#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace sdgl {

// Reproducible random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; uniform and normal variates are
// derived here rather than through <random> distributions, whose algorithms
// differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; consumes exactly two engine outputs per call.
  double normal();

  // Index in [0, n).
  std::size_t below(std::size_t n);

  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  bool operator==(const Rng& other) const {
    return seed_ == other.seed_ && engine_ == other.engine_;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace sdgl
