#pragma once

#include <cstdint>
#include <random>

namespace dcrdt {

/// Seedable generator with platform-stable output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++ standard.
/// The standard distributions are not, so every derived draw is computed here:
///   - uniform01: top 53 bits of one engine word, scaled by 2^-53 (range [0, 1)).
///   - below(n): rejection sampling on one word per attempt; n <= 1 consumes nothing.
///   - bernoulli(p): exactly one uniform01 draw, true iff draw < p.
///   - coin: lowest bit of one engine word.
class rng {
 public:
  explicit rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  bool coin() { return (engine_() & 1U) != 0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dcrdt
