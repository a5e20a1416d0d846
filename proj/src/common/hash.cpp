#include "aml/common/hash.hpp"

#include <charconv>

#include <fmt/format.h>
#include <zlib.h>

#include "aml/common/error.hpp"

namespace aml {

std::uint32_t crc32_of(std::string_view first, std::string_view second) noexcept {
    // zlib treats a null buffer as "return the initial value", so empty
    // views (whose data() may be null) are skipped.
    uLong crc = crc32(0L, Z_NULL, 0);
    for (auto part : {first, second}) {
        if (part.empty()) continue;
        crc = crc32(crc, reinterpret_cast<const Bytef*>(part.data()), static_cast<uInt>(part.size()));
    }
    return static_cast<std::uint32_t>(crc);
}

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

std::uint64_t parse_hex64(std::string_view text) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, 16);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw Error(Errc::data, fmt::format("malformed 64-bit hex digest '{}'", text));
    }
    return value;
}

}  // namespace aml
