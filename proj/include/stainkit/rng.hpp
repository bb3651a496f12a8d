#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace stainkit {

/// All randomness in the toolkit flows from one user seed through named
/// sub-streams, so e.g. changing the shuffle stream never perturbs init.
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view name) {
    // FNV-1a over the name, then splitmix64 mixing with the base seed.
    std::uint64_t h = 1469598103934665603ull;
    for (char c : name) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ull;
    }
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull + h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::string_view stream) {
    return std::mt19937_64(substream_seed(seed, stream));
}

}  // namespace stainkit
