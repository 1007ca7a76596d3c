#pragma once

#include <cmath>
#include <cstdint>

namespace chainmatch {

// Self-contained splitmix64 generator. std::shuffle / std::*_distribution are
// implementation-defined, so every draw the artifact makes goes through this
// generator to keep instances and reports byte-identical across toolchains.
struct Rng {
  std::uint64_t state = 0x9e3779b97f4a7c15ULL;

  constexpr Rng() = default;
  constexpr explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [0, bound) without modulo bias.
  std::uint64_t next_below(std::uint64_t bound) {
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via Box-Muller (no spare caching: keeps the stream layout
  // a pure function of the call sequence).
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double next_normal(double mu, double sigma) { return mu + sigma * next_normal(); }
};

// Deterministic substream derivation: hash the parent seed with a stream tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  Rng r(seed ^ (tag * 0xda942042e4dd58b5ULL));
  r.next();
  return r.next();
}

// Fisher-Yates with the artifact's own bounded draw, so the permutation is a
// pure function of the seed on every platform.
template <typename T>
void fisher_yates(T& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace chainmatch
