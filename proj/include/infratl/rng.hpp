#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace infratl {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent substream seeds so that a
// work item's randomness depends only on (master seed, item identity) and never
// on scheduling order.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Seed of a named substream: substream_seed(master, "dropout", layer, epoch).
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view tag,
                                    std::initializer_list<std::uint64_t> ids = {}) {
    std::uint64_t s = mix64(master ^ hash_tag(tag));
    for (std::uint64_t id : ids) s = mix64(s ^ mix64(id + 0x632BE59BD9B4E019ULL));
    return s;
}

inline Rng substream(std::uint64_t master, std::string_view tag,
                     std::initializer_list<std::uint64_t> ids = {}) {
    return Rng(substream_seed(master, tag, ids));
}

// Uniform double in [0, 1) with 53 random bits. Avoids the implementation-defined
// std::uniform_real_distribution so streams are reproducible across toolchains.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal via Box-Muller (one value per call; the pair mate is discarded).
double standard_normal(Rng& rng);

/// Unbiased integer in [0, n).
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Fisher-Yates shuffle driven by uniform_index.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        auto j = uniform_index(rng, i);
        std::swap(first[i - 1], first[j]);
    }
}

}  // namespace infratl
