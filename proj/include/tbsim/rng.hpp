#pragma once

#include <cstdint>

namespace tbsim::rng {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used as a stateless hash so
// that every random number is a pure function of its coordinates.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Order-sensitive combination of a key with one more coordinate.
constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t coordinate) noexcept {
    return mix64(key ^ mix64(coordinate + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t a) noexcept {
    return combine(mix64(seed), a);
}

constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
    return combine(key(seed, a), b);
}

// Top 53 bits mapped onto [0, 1).
constexpr double unit_double(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Counter-based uniform draw on [lo, hi) keyed by (seed, stream, counter).
constexpr double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                         double lo, double hi) noexcept {
    return lo + (hi - lo) * unit_double(key(seed, stream, counter));
}

}  // namespace tbsim::rng
