#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace aml {

/// 64-bit FNV-1a. Portable and stable across platforms; used for partition
/// routing and schema digests (not for integrity).
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t hash = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

/// CRC-32 (IEEE, zlib polynomial) over the concatenation of two buffers.
std::uint32_t crc32_of(std::string_view first, std::string_view second = {}) noexcept;

/// Lower-case, zero-padded 16-digit hex rendering of a 64-bit digest.
std::string hex64(std::uint64_t value);

/// Inverse of hex64; throws Error(data) on malformed input.
std::uint64_t parse_hex64(std::string_view text);

}  // namespace aml
