#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sarlc {

// std::mt19937_64 is fully specified by the standard, but the std
// distributions are not; these draws are, so seeded runs reproduce bit for
// bit across standard libraries.
using Rng = std::mt19937_64;

// Uniform integer in [0, bound). bound must be > 0.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);
// Uniform double in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

std::uint64_t fnv1a64(std::string_view text);
// splitmix64 finaliser.
std::uint64_t mix64(std::uint64_t x);
// Order-sensitive combination of several values into one seed.
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);
// [0, 1) from a hash.
inline double hash_to_unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

}  // namespace sarlc
