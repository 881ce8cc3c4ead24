#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace esis {

using Octets = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Virtual time in whole seconds. There is no wall clock anywhere in the library.
using Seconds = std::int64_t;

class HexError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline std::string to_hex(ByteView bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

namespace detail {
inline int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
}  // namespace detail

/// Parses hex pairs with optional whitespace between them. No "0x" prefixes.
inline Octets from_hex(std::string_view text) {
    Octets out;
    int high = -1;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            if (high >= 0) throw HexError("whitespace inside a hex pair");
            continue;
        }
        int v = detail::hex_value(c);
        if (v < 0) throw HexError(std::string("invalid hex character '") + c + "'");
        if (high < 0) {
            high = v;
        } else {
            out.push_back(static_cast<std::uint8_t>((high << 4) | v));
            high = -1;
        }
    }
    if (high >= 0) throw HexError("odd number of hex digits");
    return out;
}

/// An NSAP address, 1..20 octets. A NET is an NSAP-format address naming a
/// network entity, so it shares the representation.
struct NsapAddress {
    Octets octets;

    static constexpr std::size_t max_length = 20;

    NsapAddress() = default;
    explicit NsapAddress(Octets o) : octets(std::move(o)) {}
    explicit NsapAddress(ByteView v) : octets(v.begin(), v.end()) {}

    static NsapAddress from_hex(std::string_view text) { return NsapAddress(esis::from_hex(text)); }

    [[nodiscard]] std::size_t size() const noexcept { return octets.size(); }
    [[nodiscard]] bool empty() const noexcept { return octets.empty(); }
    [[nodiscard]] bool well_formed() const noexcept {
        return !octets.empty() && octets.size() <= max_length;
    }
    [[nodiscard]] ByteView view() const noexcept { return octets; }
    [[nodiscard]] std::string hex() const { return to_hex(octets); }

    auto operator<=>(const NsapAddress&) const = default;
};

using NetAddress = NsapAddress;

/// Six-octet subnetwork point of attachment (station address).
struct SnpaAddress {
    std::array<std::uint8_t, 6> octets{};

    static constexpr std::size_t length = 6;

    static std::optional<SnpaAddress> from_bytes(ByteView v) {
        if (v.size() != length) return std::nullopt;
        SnpaAddress s;
        std::copy(v.begin(), v.end(), s.octets.begin());
        return s;
    }
    static SnpaAddress from_hex(std::string_view text) {
        auto parsed = from_bytes(esis::from_hex(text));
        if (!parsed) throw HexError("an SNPA is exactly 6 octets");
        return *parsed;
    }

    [[nodiscard]] ByteView view() const noexcept { return octets; }
    [[nodiscard]] std::string hex() const { return to_hex(octets); }
    [[nodiscard]] bool is_group() const noexcept { return (octets[0] & 0x01) != 0; }

    auto operator<=>(const SnpaAddress&) const = default;
};

namespace snpa {
inline constexpr SnpaAddress all_es{{0x09, 0x00, 0x2b, 0x00, 0x00, 0x04}};
inline constexpr SnpaAddress all_is{{0x09, 0x00, 0x2b, 0x00, 0x00, 0x05}};
inline constexpr SnpaAddress broadcast{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};
}  // namespace snpa

}  // namespace esis
