#pragma once

#include <cmath>
#include <cstdint>

namespace pdereg::rng {

// Counter-based random numbers. Every draw is a pure function of
// (seed, counter), so streams can be evaluated in any order by any number
// of workers and still produce identical values. splitmix64 is used as the
// bijective mixer; normals come from Box-Muller on two mixed counters.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) {
    return splitmix64(splitmix64(seed) ^ splitmix64(counter * 0xD6E8FEB86659FD93ULL + 1));
}

// Derived stream seed for replicate `index` of a parent seed; used so that
// parallel replicates are reproducible irrespective of scheduling.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return mix(seed, 0x5851F42D4C957F2DULL + index);
}

// Uniform on (0,1]: 53-bit mantissa, never returns 0 so log() is safe.
inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>((mix(seed, counter) >> 11) + 1) * 0x1.0p-53;
}

// Standard normal draw with index i from stream `seed`.
inline double normal(std::uint64_t seed, std::uint64_t i) {
    const double u1 = uniform01(seed, 2 * i);
    const double u2 = uniform01(seed, 2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace pdereg::rng
