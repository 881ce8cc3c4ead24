#pragma once

// Fletcher mod-255 header checksum. The two checksum octets sit at header
// offsets 7 and 8 (positions 8 and 9 counting from one).

#include "esis/octets.hpp"

#include <stdexcept>

namespace esis {

enum class ChecksumVerdict { Valid, NotUsed, Invalid };

inline const char* to_string(ChecksumVerdict v) noexcept {
    switch (v) {
        case ChecksumVerdict::Valid: return "Valid";
        case ChecksumVerdict::NotUsed: return "NotUsed";
        case ChecksumVerdict::Invalid: return "Invalid";
    }
    return "?";
}

class HeaderTooShort : public std::invalid_argument {
public:
    HeaderTooShort() : std::invalid_argument("header shorter than the 9-octet fixed part") {}
};

inline constexpr std::size_t checksum_offset = 7;
inline constexpr std::size_t fixed_part_length = 9;

namespace detail {
struct FletcherSums {
    unsigned c0 = 0;
    unsigned c1 = 0;
};

inline FletcherSums fletcher_sums(ByteView header) noexcept {
    FletcherSums s;
    for (auto octet : header) {
        s.c0 = (s.c0 + octet) % 255;
        s.c1 = (s.c1 + s.c0) % 255;
    }
    return s;
}
}  // namespace detail

/// Writes checksum octets into `header` in place so that the running sums
/// over all octets come out to zero. A computed zero is stored as 255.
inline void fill_checksum(std::span<std::uint8_t> header) {
    if (header.size() < fixed_part_length) throw HeaderTooShort();
    header[checksum_offset] = 0;
    header[checksum_offset + 1] = 0;

    const auto sums = detail::fletcher_sums(header);
    // Octets after the X position, counting X itself as position n = 8.
    const long after_x = static_cast<long>(header.size()) - static_cast<long>(checksum_offset + 1);
    const long c0 = sums.c0;
    const long c1 = sums.c1;

    auto mod255 = [](long v) {
        long r = v % 255;
        return r < 0 ? r + 255 : r;
    };
    long x = mod255(after_x * c0 - c1);
    long y = mod255(c1 - (after_x + 1) * c0);
    header[checksum_offset] = static_cast<std::uint8_t>(x == 0 ? 255 : x);
    header[checksum_offset + 1] = static_cast<std::uint8_t>(y == 0 ? 255 : y);
}

inline Octets generate_checksum(ByteView header) {
    Octets out(header.begin(), header.end());
    fill_checksum(out);
    return out;
}

inline ChecksumVerdict verify_checksum(ByteView header) {
    if (header.size() < fixed_part_length) throw HeaderTooShort();
    const auto x = header[checksum_offset];
    const auto y = header[checksum_offset + 1];
    if (x == 0 && y == 0) return ChecksumVerdict::NotUsed;
    if (x == 0 || y == 0) return ChecksumVerdict::Invalid;
    const auto sums = detail::fletcher_sums(header);
    return (sums.c0 == 0 && sums.c1 == 0) ? ChecksumVerdict::Valid : ChecksumVerdict::Invalid;
}

}  // namespace esis
