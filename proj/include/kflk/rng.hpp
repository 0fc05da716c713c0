#pragma once

#include <cmath>
#include <cstdint>

#include "kflk/math_util.hpp"

namespace kflk {

// Counter-based noise streams. Every draw is a pure hash of
// (seed, id0, id1, id2), so the value is independent of evaluation order,
// thread count and how many other draws happened. Particle simulations key
// the ids as (particle index, step index, draw index).
namespace rng {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return h;
}

// Map 64 bits to the open interval (0, 1); never returns 0 or 1.
inline double to_unit(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 0.5) * 0x1p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                      std::uint64_t c) {
    return to_unit(key(seed, a, b, c));
}

// Standard normal via Box-Muller (cosine branch).
inline double normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                     std::uint64_t draw) {
    const double u1 = uniform(seed, a, b, 2 * draw);
    const double u2 = uniform(seed, a, b, 2 * draw + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Derive an independent sub-stream seed (e.g. one per experiment repetition).
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    return key(seed, tag, 0x5eedull, 0);
}

}  // namespace rng
}  // namespace kflk
