#pragma once

#include <cstdint>
#include <random>

namespace fgrf {

using Rng = std::mt19937_64;

/// splitmix64 finalizer
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic per-stream seed from a master seed and up to three stream
/// indices (step, patch, draw). Concurrency never changes results because
/// every worker derives its own stream.
inline uint64_t derive_seed(uint64_t master, uint64_t a = 0, uint64_t b = 0, uint64_t c = 0) {
  uint64_t h = mix64(master);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

inline Rng make_stream(uint64_t master, uint64_t a = 0, uint64_t b = 0, uint64_t c = 0) {
  return Rng(derive_seed(master, a, b, c));
}

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace fgrf
