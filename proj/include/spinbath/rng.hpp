// rng.hpp: counter-derived random substreams
#pragma once

#include <cstdint>
#include <random>

namespace spinbath {

// SplitMix64 finaliser; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed of the substream identified by (seed, stream, index). Depends only on the
// triple, never on which thread draws it or in what order.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return mix64(mix64(mix64(seed) ^ stream) ^ (index * 0xd1b54a32d192ed03ULL));
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return std::mt19937_64{substream_seed(seed, stream, index)};
}

} // namespace spinbath
