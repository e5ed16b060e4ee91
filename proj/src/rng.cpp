#include "adco/rng.hpp"

#include <cmath>
#include <numbers>

namespace adco {
namespace {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t SeededRng::next_u64() {
  // Two finalizer rounds over (seed, counter); counter-based so the stream
  // is reproducible and trivially parallelizable.
  return mix64(mix64(seed_) ^ mix64(counter_++ * 0xD1342543DE82EF95ull + 0x63652362ED4AB4CBull));
}

double SeededRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

double SeededRng::next_gaussian() {
  // Box-Muller without caching the second value: two uniforms per draw keeps
  // the stream position a pure function of the draw count.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SeededRng SeededRng::child(std::uint64_t index) const {
  return SeededRng(mix64(mix64(seed_ ^ 0xA24BAED4963EE407ull) + index));
}

}  // namespace adco
