#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ltrajdiff {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Stateless sub-seed derivation: the same (base, stream, indices...) always
// yields the same seed, independent of evaluation order or thread count.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base);
  for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632BE59BD9B4E019ull));
  return s;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(base, path));
}

// Sub-seed streams fanned out from a single run seed.
struct SeedPlan {
  std::uint64_t data;
  std::uint64_t masks;
  std::uint64_t init;
  std::uint64_t sampling;

  static SeedPlan from(std::uint64_t seed) { return {seed, seed + 1, seed + 2, seed + 3}; }
};

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

inline double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng);
}

}  // namespace ltrajdiff
