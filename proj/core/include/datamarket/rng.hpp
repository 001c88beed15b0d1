#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

// Deterministic random-number plumbing.
//
// Every stochastic quantity in the simulator is drawn from a named stream: a
// std::mt19937_64 engine whose seed is derived by folding a path of integer
// identifiers (cell, table, purpose, block, ...) into the user's master seed
// with splitmix64 steps. Streams are therefore independent of thread count
// and of evaluation order, which is what makes multi-worker runs
// byte-identical to single-worker runs.
//
// All variate samplers are implemented here rather than via
// std::*_distribution: the standard distributions' output sequences are
// implementation-defined, and the reproducibility contract requires identical
// bytes across toolchains. mt19937_64 itself is fully specified, so the raw
// engine plus these samplers is portable.

namespace datamarket::rng {

// One splitmix64 output step. Good avalanche behaviour; used both as a seed
// scrambler and as the fold function for stream-key derivation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds a path of identifiers into a single stream key. The state enters the
// fold through shifts and an add as well as the xor, so the combination is
// not symmetric in (state, id) — a plain xor-fold would make e.g.
// (seed=0, path={0, x}) and (seed=1, path={1, x}) collide.
inline std::uint64_t derive_key(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = mix64(seed);
  for (std::uint64_t id : path) {
    key ^= mix64(id) + 0x9e3779b97f4a7c15ULL + (key << 12) + (key >> 4);
    key = mix64(key);
  }
  return key;
}

inline std::mt19937_64 make_stream(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> path) {
  return std::mt19937_64(derive_key(seed, path));
}

// Uniform on [0, 1) with 53 random bits (exactly representable grid).
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Standard normal via the Marsaglia polar method. The second variate of each
// accepted pair is discarded so the sampler is stateless.
double standard_normal(std::mt19937_64& gen);

// Gamma(shape, scale) via Marsaglia–Tsang squeeze; shape < 1 is boosted to
// shape + 1 and corrected with U^(1/shape).
double gamma(std::mt19937_64& gen, double shape, double scale);

// Chi-squared with `dof` degrees of freedom (= Gamma(dof/2, 2)).
double chi_squared(std::mt19937_64& gen, double dof);

inline bool bernoulli(std::mt19937_64& gen, double p) {
  return uniform01(gen) < p;
}

}  // namespace datamarket::rng
