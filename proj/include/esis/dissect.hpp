#pragma once

#include "esis/pdu.hpp"

#include <string>
#include <vector>

namespace esis {

struct FieldRow {
    std::string name;
    std::size_t offset = 0;
    std::string raw;  // lowercase hex of the field's octets
    std::string value;
};

/// Best-effort field-by-field walk of a header for display. It never rejects
/// anything; it stops at the first field that runs past the available octets.
/// Validity is decided by decode(), not here.
inline std::vector<FieldRow> dissect(ByteView raw) {
    std::vector<FieldRow> rows;
    std::size_t pos = 0;
    const std::size_t limit = raw.size() >= 2 ? std::min<std::size_t>(raw.size(), std::max<std::size_t>(raw[1], 9))
                                              : raw.size();

    auto field = [&](const std::string& name, std::size_t len, std::string value) -> bool {
        if (pos + len > limit) return false;
        rows.push_back({name, pos, to_hex(raw.subspan(pos, len)), std::move(value)});
        pos += len;
        return true;
    };
    auto u8 = [&](std::size_t at) { return at < raw.size() ? raw[at] : 0; };

    if (!field("nlpid", 1, std::to_string(u8(0)))) return rows;
    if (!field("length_indicator", 1, std::to_string(u8(1)))) return rows;
    if (!field("version", 1, std::to_string(u8(2)))) return rows;
    if (!field("reserved", 1, std::to_string(u8(3)))) return rows;
    const auto type = pdu_type_from_code(u8(4) & 0x1f);
    std::string type_text = type ? to_string(*type) : "unknown(" + std::to_string(u8(4) & 0x1f) + ")";
    if (u8(4) & 0xe0) type_text += " reserved-bits=" + std::to_string(u8(4) >> 5);
    if (!field("type", 1, type_text)) return rows;
    if (!field("holding_time", 2, std::to_string((u8(5) << 8) | u8(6)))) return rows;
    {
        std::string verdict;
        if (raw.size() >= fixed_part_length && raw[1] >= fixed_part_length && raw[1] <= raw.size())
            verdict = to_string(verify_checksum(raw.first(raw[1])));
        else
            verdict = "unverifiable";
        if (!field("checksum", 2, verdict)) return rows;
    }
    if (!type) return rows;

    auto address = [&](const std::string& name) -> bool {
        if (pos >= limit) return false;
        const std::size_t len = raw[pos];
        if (!field(name + ".length", 1, std::to_string(len))) return false;
        return len == 0 || field(name, len, "");
    };

    switch (*type) {
        case PduType::Esh: {
            if (pos >= limit) return rows;
            const unsigned count = raw[pos];
            if (!field("address_count", 1, std::to_string(count))) return rows;
            for (unsigned i = 0; i < count; ++i)
                if (!address("source_address[" + std::to_string(i) + "]")) return rows;
            break;
        }
        case PduType::Ish:
        case PduType::Aa:
            if (!address("net")) return rows;
            break;
        case PduType::Rd:
            if (!address("destination")) return rows;
            if (!address("better_snpa")) return rows;
            if (!address("redirect_net")) return rows;
            break;
        case PduType::Ra: break;
    }

    while (pos + 2 <= limit) {
        const std::uint8_t code = raw[pos];
        const std::size_t len = raw[pos + 1];
        const char* name = option::name(code);
        std::string label = std::string("option ") + (name ? name : "unknown");
        std::string value;
        if (code == option::esct && len == 2 && pos + 4 <= limit)
            value = std::to_string((raw[pos + 2] << 8) | raw[pos + 3]) + "s";
        else if (code == option::priority && len == 1 && pos + 3 <= limit)
            value = std::to_string(raw[pos + 2]);
        if (!field(label, 2 + len, value)) break;
    }
    return rows;
}

}  // namespace esis
