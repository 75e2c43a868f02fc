#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace zakident {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

// Independent substream for (seed, a, b). Trials draw from substream(seed, delta_index, trial)
// so results do not depend on execution order across a worker pool.
inline Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return Rng(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b));
}

inline double uniform01(Rng& rng) {
    // 53-bit mantissa, in [0,1)
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller on raw engine words. std::normal_distribution is implementation-defined,
// which would break the bit-reproducibility contract across standard libraries.
inline double standard_normal(Rng& rng) {
    const double u1 = 1.0 - uniform01(rng); // (0,1]
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Circularly symmetric CN(0,1): E|z|^2 = 1.
inline std::complex<double> complex_gaussian(Rng& rng) {
    const double u1 = 1.0 - uniform01(rng); // (0,1]
    const double u2 = uniform01(rng);
    const double r = std::sqrt(-std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
}

} // namespace zakident
