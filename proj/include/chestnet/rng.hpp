#pragma once

#include <cstdint>
#include <random>

namespace chestnet {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed and up to two stream
/// coordinates (SplitMix64 finalizer applied per coordinate).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
    auto step = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return step(step(step(seed) ^ a) ^ b);
}

}  // namespace chestnet
