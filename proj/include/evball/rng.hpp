// Deterministic random sampling helpers.
//
// All stochastic code in the library draws through these functions on a
// std::mt19937_64 engine. The engine's output sequence is fixed by the
// standard and the transforms below are hand-rolled, so a given seed
// produces the same samples on every platform (std::*_distribution would
// not guarantee that).
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace evball {

// Derive an independent substream seed, e.g. one per camera.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform double in [0, 1).
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Integer in [lo, hi] by rejection-free scaling; spans are small here.
inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    const double u = uniform01(rng);
    const auto span = static_cast<double>(hi - lo + 1);
    auto k = static_cast<std::int64_t>(u * span);
    if (k > hi - lo) k = hi - lo;
    return lo + k;
}

// Standard normal via Box-Muller. One draw per call; the paired sample is
// discarded so the stream position is input-independent.
inline double normal01(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline double normal(std::mt19937_64& rng, double mean, double sigma) {
    return mean + sigma * normal01(rng);
}

inline double exponential(std::mt19937_64& rng, double rate) {
    double u = uniform01(rng);
    if (u <= 0.0) u = 0x1.0p-53;
    return -std::log(u) / rate;
}

// Knuth's product method, chunked so exp(-lambda) never underflows.
inline std::uint64_t poisson(std::mt19937_64& rng, double lambda) {
    std::uint64_t total = 0;
    while (lambda > 0.0) {
        const double chunk = lambda > 30.0 ? 30.0 : lambda;
        lambda -= chunk;
        const double limit = std::exp(-chunk);
        double prod = uniform01(rng);
        std::uint64_t k = 0;
        while (prod > limit) {
            ++k;
            prod *= uniform01(rng);
        }
        total += k;
    }
    return total;
}

}  // namespace evball
