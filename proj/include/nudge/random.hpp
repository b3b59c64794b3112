#pragma once

#include <cstdint>
#include <random>

namespace nudge {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent sub-stream seeds from a
// base seed so that streams do not overlap when indices change.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
    return mix_seed(mix_seed(mix_seed(base) ^ stream) ^ index);
}

// Stream ids, one per consumer.
namespace streams {
inline constexpr std::uint64_t kSeries = 0x5e41;
inline constexpr std::uint64_t kForecast = 0xf0ca;
inline constexpr std::uint64_t kAgent = 0xa9e7;
inline constexpr std::uint64_t kExplore = 0xe8b1;
inline constexpr std::uint64_t kCohort = 0xc047;
inline constexpr std::uint64_t kPolicy = 0x9011;
} // namespace streams

// Uniform double in [0, 1). Spelled out rather than std::uniform_real_distribution
// so the bit pattern is identical across standard libraries.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

double standard_normal(Rng& rng);

} // namespace nudge
