#pragma once

#include <cstdint>

namespace adco {

// Counter-based deterministic RNG. The stream is a pure function of
// (seed, draw index), so child streams spawned by index are independent of
// how many draws the parent has made. Not cryptographic.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  double next_double();                        // uniform [0, 1)
  double next_uniform(double lo, double hi);   // uniform [lo, hi)
  double next_gaussian();                      // standard normal, Box-Muller

  // Derived stream for sub-task `index`; disjoint from this stream and from
  // children at other indices.
  SeededRng child(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace adco
