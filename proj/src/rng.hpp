#pragma once

#include <cstdint>
#include <random>

namespace whe {

// Platform-independent uniform doubles from mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : e_(seed) {}
  double uniform() { return static_cast<double>(e_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::mt19937_64 e_;
};

}  // namespace whe
