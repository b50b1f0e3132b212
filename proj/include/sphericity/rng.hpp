#pragma once

#include <cstdint>
#include <random>

namespace sphericity {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mix.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for substream `stream` of master seed `seed`: hash(seed, stream).
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Engine for substream `stream`, seeded through std::seed_seq so the full
/// Mersenne state is populated from the 64-bit substream seed.
inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
    const std::uint64_t s = substream_seed(seed, stream);
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Engine(seq);
}

}  // namespace sphericity
