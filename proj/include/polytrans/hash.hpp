#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace polytrans {

// 64-bit FNV-1a. Stable across platforms and releases; used for cache keys,
// scenario lookups, and workspace names, never for security.
constexpr std::uint64_t fnv1a64(std::string_view data) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value);

inline std::string content_hash(std::string_view data) { return hex64(fnv1a64(data)); }

}  // namespace polytrans
