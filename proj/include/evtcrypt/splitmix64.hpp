#pragma once

#include <cstdint>

namespace evtcrypt {

// splitmix64, Vigna's fixed-increment SplittableRandom variant. Every
// randomized path in this library draws from it so that results are
// bit-exact across platforms and reproducible from a single 64-bit seed.
class Splitmix64 {
 public:
  explicit Splitmix64(uint64_t seed) : state_(seed) {}

  uint64_t operator()() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n). Plain modulo; the bias is immaterial at the
  // ranges used here and keeps the draw trivial to reproduce elsewhere.
  uint64_t below(uint64_t n) { return (*this)() % n; }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform polarity: low output bit set -> +1, clear -> -1.
  int8_t polarity() { return ((*this)() & 1u) ? int8_t{1} : int8_t{-1}; }

 private:
  uint64_t state_;
};

}  // namespace evtcrypt
