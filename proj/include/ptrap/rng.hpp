#pragma once

#include <cstdint>
#include <random>

namespace ptrap {

// splitmix64; used to derive independent substreams from (seed, index)
// so that parallel grid cells / scan points stay reproducible.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t s = splitmix64(seed ^ splitmix64(stream + 0x51ED2701));
    return std::mt19937_64(s);
}

}  // namespace ptrap
