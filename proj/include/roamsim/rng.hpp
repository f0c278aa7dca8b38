#pragma once

#include <cstdint>
#include <string_view>

namespace roamsim::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

// Uniform double in [0, 1) from the top 53 bits.
inline double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

// Stream of reproducible uniforms keyed by (seed, stream label).
class Stream {
public:
    Stream(std::uint64_t seed, std::string_view label) : state_(mix(seed, fnv1a(label))) {}
    double uniform() {
        state_ = splitmix64(state_);
        return to_unit(state_);
    }

private:
    std::uint64_t state_;
};

}  // namespace roamsim::rng
