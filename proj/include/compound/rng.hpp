#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include "compound/multiindex.hpp"

namespace compound {

// splitmix64 finalizer (Steele/Lea/Flood).  Used both as a stream generator
// and as the mixer for the counter-based observation noise below.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform double in (0,1]; never returns 0 so log() below is safe.
inline double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Stable derivation of substream seeds (replicates, atoms, chain starts).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 0x517cc1b727220a95ULL));
}

// Hash of a multi-index, entry order significant.
inline std::uint64_t index_hash(const MultiIndex& j) {
  std::uint64_t h = 0x2545f4914f6cdd1dULL ^ static_cast<std::uint64_t>(j.dim());
  for (int e : j.entries) h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(e)));
  return h;
}

// Counter-based standard normal keyed by (seed, index).  The draw depends
// only on the key, so observations of the same index agree across calls no
// matter which index box produced them, and reruns are bit-identical.
inline double gaussian_for_index(std::uint64_t seed, const MultiIndex& j) {
  std::uint64_t k = mix64(seed ^ index_hash(j));
  double u1 = to_unit(mix64(k));
  double u2 = to_unit(mix64(k + 0x632be59bd9b4e019ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Sequential generator for sampling tasks (atom coefficients, MCMC moves,
// replicate bookkeeping).  Normals are hand-rolled Box-Muller so that a
// fixed seed yields the same stream on any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return to_unit(eng_()); }  // (0,1]

  double normal() {
    double u1 = to_unit(eng_());
    double u2 = to_unit(eng_());
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps the draw exactly uniform.
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / n * n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace compound
