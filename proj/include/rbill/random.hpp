#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rbill {

/// Generator used everywhere: 64-bit Mersenne twister. Its output sequence is
/// fixed by the C++ standard, so streams are reproducible across toolchains.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective mix of one 64-bit word.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for stream `stream_id` under `master_seed`. Distinct ids give
/// decorrelated seeds; the mapping is part of the reproducibility contract.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_id) {
    return splitmix64(splitmix64(master_seed) ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
}

/// Independent stream keyed on (master_seed, stream_id).
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    const std::uint64_t s = derive_seed(master_seed, stream_id);
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
    return Rng(seq);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal by Box-Muller on our own uniforms (libstdc++'s
/// normal_distribution caches draws, which complicates stream accounting).
inline double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace rbill
