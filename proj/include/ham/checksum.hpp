#pragma once

#include <cstdint>
#include <span>

namespace ham::integrity {

inline constexpr std::uint64_t k_fnv_offset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t k_fnv_prime = 0x100000001b3ull;

// FNV-1a over a byte range; pass the previous digest to chain ranges.
inline std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                             std::uint64_t h = k_fnv_offset) {
    for (unsigned char b : bytes) {
        h ^= b;
        h *= k_fnv_prime;
    }
    return h;
}

} // namespace ham::integrity
