#pragma once

// Counter-based pseudo-random generator used by every simulator in this
// library. Outputs depend only on (seed, stream, counter), so identical
// configurations reproduce identical draws on any platform and independent
// streams can be handed to parallel workers without coordination.
//
// Algorithm: the SplitMix64 output function applied to an affine counter
// sequence,
//   key     = mix(seed) + stream * 0xD2B74407B1CE6E93
//   word_i  = mix(key + (i + 1) * 0x9E3779B97F4A7C15)
// where mix is the 64-bit finalizer
//   z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//   z ^= z >> 27; z *= 0x94D049BB133111EB;
//   z ^= z >> 31;
// Test vectors are pinned in the unit tests.

#include <cmath>
#include <cstdint>

namespace evtail {

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed) + stream * 0xD2B74407B1CE6E93ULL) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

  // Uniform on the open interval (0, 1); 53-bit resolution, never 0 or 1.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_exponential() { return -std::log(next_uniform()); }

  // Standard normal via the inverse CDF (see numeric.hpp for the method);
  // one uniform per deviate keeps the stream layout simple.
  double next_normal();

  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace evtail
