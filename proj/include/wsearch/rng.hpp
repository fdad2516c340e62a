#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace wsearch {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_name(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name,
                                 std::uint64_t index = 0) {
    std::uint64_t h = splitmix64(seed ^ hash_name(name));
    return splitmix64(h ^ splitmix64(index + 0x51ed2701));
}

// Named, indexed substream of a master seed. Every random decision in a run
// draws from a stream like make_stream(seed, "widen", individual_id), so
// replays are exact no matter how work is scheduled.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name,
                                   std::uint64_t index = 0) {
    return std::mt19937_64(derive_seed(seed, name, index));
}

}  // namespace wsearch
