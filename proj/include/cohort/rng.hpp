#pragma once

#include <cstdint>
#include <string_view>

namespace cohort {

// splitmix64: small, fully specified, identical output on every platform.
// Splittable via derive(), so independent streams can be carved off a seed.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // unbiased draw in [0, n) by rejection
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    uint64_t limit = (~uint64_t(0) / n) * n;
    uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  // Bernoulli with an integer threshold; the only float involved is the
  // one-time conversion of the configured rate.
  bool chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    auto threshold = uint64_t(p * 9007199254740992.0);  // p * 2^53
    return (next() >> 11) < threshold;
  }

  // independent child stream keyed by a label hash
  Rng derive(std::string_view label) const {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : label) {
      h ^= uint8_t(c);
      h *= 0x100000001B3ULL;
    }
    Rng child(state_ ^ h);
    child.next();
    return child;
  }

 private:
  uint64_t state_;
};

}  // namespace cohort
