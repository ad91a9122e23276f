#pragma once

#include <cstdint>

namespace firank {

// Counter-based pseudo-random generator.
//
// Every output is a pure function of (seed, stream, counter), so any value in
// any stream can be produced independently, in parallel, on any platform, in
// any language, with nothing but 64-bit unsigned arithmetic:
//
//   state(seed, stream, n) = seed
//                          ^ (stream * 0xD2B74407B1CE6E93)
//                          + (n + 1) * 0x9E3779B97F4A7C15        (mod 2^64)
//   output = mix(state) where
//     mix(z): z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
//             z ^= z >> 27;  z *= 0x94D049BB133111EB;
//             z ^= z >> 31;  return z;
//
// uniform() keeps the top 53 bits: (output >> 11) * 2^-53, giving a double in
// [0, 1).  below(n) is floor(output * n / 2^64) via a 128-bit product.  The
// same recipe is restated in the README so other implementations can match
// dataset bytes exactly.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

  static uint64_t at(uint64_t seed, uint64_t stream, uint64_t counter) {
    uint64_t z = (seed ^ (stream * 0xD2B74407B1CE6E93ULL)) +
                 (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  uint64_t next() { return at(seed_, stream_, counter_++); }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).  floor(x * n / 2^64).
  uint64_t below(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  uint64_t counter() const { return counter_; }
  void seek(uint64_t counter) { counter_ = counter; }

 private:
  uint64_t seed_ = 0;
  uint64_t stream_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace firank
