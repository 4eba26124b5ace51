#pragma once

#include <cstdint>
#include <random>

namespace slicevol {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent substream seeds.
std::uint64_t mix64(std::uint64_t x);

// Seed for substream `index` of a generator seeded with `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

// Uniform double in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

// Uniform integer in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

// Standard normal via Box-Muller; independent of the standard library's
// distribution implementation so streams are portable.
double standard_normal(Rng& rng);

}  // namespace slicevol
