#pragma once

#include "esis/checksum.hpp"
#include "esis/octets.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace esis {

inline constexpr std::uint8_t esis_nlpid = 130;
inline constexpr std::uint8_t esis_version = 1;
inline constexpr std::size_t max_header_length = 255;

/// Five-bit PDU type codes. RA and AA have no codes in the base protocol
/// listing and use 8 and 10 here.
enum class PduType : std::uint8_t { Esh = 2, Ish = 4, Rd = 6, Ra = 8, Aa = 10 };

inline const char* to_string(PduType t) noexcept {
    switch (t) {
        case PduType::Esh: return "ESH";
        case PduType::Ish: return "ISH";
        case PduType::Rd: return "RD";
        case PduType::Ra: return "RA";
        case PduType::Aa: return "AA";
    }
    return "?";
}

inline std::optional<PduType> pdu_type_from_code(std::uint8_t code) noexcept {
    switch (code) {
        case 2: return PduType::Esh;
        case 4: return PduType::Ish;
        case 6: return PduType::Rd;
        case 8: return PduType::Ra;
        case 10: return PduType::Aa;
        default: return std::nullopt;
    }
}

namespace option {
inline constexpr std::uint8_t security = 197;
inline constexpr std::uint8_t esct = 198;
inline constexpr std::uint8_t priority = 205;
inline constexpr std::uint8_t address_mask = 225;
inline constexpr std::uint8_t snpa_mask = 226;

inline const char* name(std::uint8_t code) noexcept {
    switch (code) {
        case security: return "Security";
        case esct: return "ESCT";
        case priority: return "Priority";
        case address_mask: return "AddressMask";
        case snpa_mask: return "SnpaMask";
        default: return nullptr;
    }
}
}  // namespace option

struct OptionParam {
    std::uint8_t code = 0;
    Octets value;

    bool operator==(const OptionParam&) const = default;
};

struct FixedPart {
    std::uint8_t nlpid = esis_nlpid;
    std::uint8_t length_indicator = 0;
    std::uint8_t version = esis_version;
    std::uint8_t reserved = 0;
    PduType pdu_type = PduType::Esh;
    std::uint16_t holding_time = 0;
    std::array<std::uint8_t, 2> checksum{};

    bool operator==(const FixedPart&) const = default;
};

struct EshBody {
    std::vector<NsapAddress> source_addresses;
    bool operator==(const EshBody&) const = default;
};
struct IshBody {
    NetAddress net;
    bool operator==(const IshBody&) const = default;
};
struct RdBody {
    NsapAddress destination;
    SnpaAddress better_snpa;
    std::optional<NetAddress> redirect_net;
    bool operator==(const RdBody&) const = default;
};
struct RaBody {
    bool operator==(const RaBody&) const = default;
};
struct AaBody {
    NetAddress net;
    bool operator==(const AaBody&) const = default;
};

using PduBody = std::variant<EshBody, IshBody, RdBody, RaBody, AaBody>;

inline PduType body_type(const PduBody& body) noexcept {
    static constexpr PduType order[] = {PduType::Esh, PduType::Ish, PduType::Rd, PduType::Ra,
                                        PduType::Aa};
    return order[body.index()];
}

struct Pdu {
    FixedPart fixed;
    PduBody body;
    std::vector<OptionParam> options;

    [[nodiscard]] PduType type() const noexcept { return fixed.pdu_type; }

    [[nodiscard]] const OptionParam* find_option(std::uint8_t code) const noexcept {
        for (const auto& o : options)
            if (o.code == code) return &o;
        return nullptr;
    }

    bool operator==(const Pdu&) const = default;
};

// ---------------------------------------------------------------------------
// Discard reasons

enum class DiscardKind { NotEsIs, WrongVersion, ChecksumError, ProtocolError };

enum class ProtocolErrorDetail {
    None,
    BadHeaderLength,
    NonzeroReserved,
    UnknownType,
    ZeroAddressCount,
    BadAddressLength,
    BadAddressValue,
    BadOptionCode,
    BadOptionLength,
    BadOptionValue,
    DuplicateOption,
    OptionIllegalForType,
    TruncatedPdu,
    RoleMismatch,
};

inline const char* to_string(ProtocolErrorDetail d) noexcept {
    switch (d) {
        case ProtocolErrorDetail::None: return "None";
        case ProtocolErrorDetail::BadHeaderLength: return "BadHeaderLength";
        case ProtocolErrorDetail::NonzeroReserved: return "NonzeroReserved";
        case ProtocolErrorDetail::UnknownType: return "UnknownType";
        case ProtocolErrorDetail::ZeroAddressCount: return "ZeroAddressCount";
        case ProtocolErrorDetail::BadAddressLength: return "BadAddressLength";
        case ProtocolErrorDetail::BadAddressValue: return "BadAddressValue";
        case ProtocolErrorDetail::BadOptionCode: return "BadOptionCode";
        case ProtocolErrorDetail::BadOptionLength: return "BadOptionLength";
        case ProtocolErrorDetail::BadOptionValue: return "BadOptionValue";
        case ProtocolErrorDetail::DuplicateOption: return "DuplicateOption";
        case ProtocolErrorDetail::OptionIllegalForType: return "OptionIllegalForType";
        case ProtocolErrorDetail::TruncatedPdu: return "TruncatedPdu";
        case ProtocolErrorDetail::RoleMismatch: return "RoleMismatch";
    }
    return "?";
}

struct DiscardReason {
    DiscardKind kind = DiscardKind::ProtocolError;
    ProtocolErrorDetail detail = ProtocolErrorDetail::None;

    static constexpr DiscardReason protocol(ProtocolErrorDetail d) noexcept {
        return {DiscardKind::ProtocolError, d};
    }

    bool operator==(const DiscardReason&) const = default;
};

inline std::string to_string(const DiscardReason& r) {
    switch (r.kind) {
        case DiscardKind::NotEsIs: return "NotEsIs";
        case DiscardKind::WrongVersion: return "WrongVersion";
        case DiscardKind::ChecksumError: return "ChecksumError";
        case DiscardKind::ProtocolError:
            return std::string("ProtocolError(") + to_string(r.detail) + ")";
    }
    return "?";
}

/// Outcome of decoding one frame payload: either a PDU or the reason it was
/// discarded. Discarding is an ordinary result, never an exception.
class DecodeResult {
public:
    DecodeResult(Pdu pdu) : value_(std::move(pdu)) {}            // NOLINT(google-explicit-constructor)
    DecodeResult(DiscardReason reason) : value_(reason) {}        // NOLINT(google-explicit-constructor)

    [[nodiscard]] bool ok() const noexcept { return std::holds_alternative<Pdu>(value_); }
    explicit operator bool() const noexcept { return ok(); }

    [[nodiscard]] const Pdu& pdu() const { return std::get<Pdu>(value_); }
    [[nodiscard]] Pdu& pdu() { return std::get<Pdu>(value_); }
    [[nodiscard]] const DiscardReason& reason() const { return std::get<DiscardReason>(value_); }

private:
    std::variant<Pdu, DiscardReason> value_;
};

// ---------------------------------------------------------------------------
// Address validation

struct ValidationProfile {
    enum class Kind { Lenient, Atn };
    Kind kind = Kind::Lenient;
    std::uint8_t afi = 0x47;

    static constexpr ValidationProfile lenient() noexcept { return {Kind::Lenient, 0x47}; }
    static constexpr ValidationProfile atn(std::uint8_t afi = 0x47) noexcept { return {Kind::Atn, afi}; }

    bool operator==(const ValidationProfile&) const = default;
};

/// Returns the failure detail, or nothing when the address conforms.
inline std::optional<ProtocolErrorDetail> validate_nsap(ByteView addr,
                                                        const ValidationProfile& profile) noexcept {
    if (profile.kind == ValidationProfile::Kind::Atn) {
        if (addr.size() != NsapAddress::max_length) return ProtocolErrorDetail::BadAddressLength;
        if (addr[0] != profile.afi) return ProtocolErrorDetail::BadAddressValue;
        return std::nullopt;
    }
    if (addr.empty() || addr.size() > NsapAddress::max_length)
        return ProtocolErrorDetail::BadAddressLength;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Options

/// Security and Priority go on every type; the masks only on RD; ESCT only on ISH.
inline bool option_legal_for(PduType type, std::uint8_t code) noexcept {
    switch (code) {
        case option::security:
        case option::priority: return true;
        case option::address_mask:
        case option::snpa_mask: return type == PduType::Rd;
        case option::esct: return type == PduType::Ish;
        default: return false;
    }
}

/// Per-code length and value rules for a known option code.
inline std::optional<ProtocolErrorDetail> check_option_value(std::uint8_t code, ByteView value) noexcept {
    switch (code) {
        case option::security:
            if (value.empty() || value.size() > 254) return ProtocolErrorDetail::BadOptionLength;
            return std::nullopt;
        case option::priority:
            if (value.size() != 1) return ProtocolErrorDetail::BadOptionLength;
            if (value[0] > 14) return ProtocolErrorDetail::BadOptionValue;
            return std::nullopt;
        case option::esct:
            if (value.size() != 2) return ProtocolErrorDetail::BadOptionLength;
            if (value[0] == 0 && value[1] == 0) return ProtocolErrorDetail::BadOptionValue;
            return std::nullopt;
        case option::address_mask:
        case option::snpa_mask:
            if (value.empty()) return ProtocolErrorDetail::BadOptionLength;
            return std::nullopt;
        default: return ProtocolErrorDetail::BadOptionCode;
    }
}

inline OptionParam make_esct_option(std::uint16_t seconds) {
    return {option::esct, {static_cast<std::uint8_t>(seconds >> 8), static_cast<std::uint8_t>(seconds & 0xff)}};
}

inline std::uint16_t esct_seconds(const OptionParam& o) noexcept {
    return static_cast<std::uint16_t>((o.value[0] << 8) | o.value[1]);
}

// ---------------------------------------------------------------------------
// Encoding

/// A Pdu handed to encode() broke one of its own invariants. This is a bug in
/// the caller, not a wire condition.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

namespace detail {

inline std::size_t body_length(const PduBody& body) {
    struct Visitor {
        std::size_t operator()(const EshBody& b) const {
            std::size_t n = 1;
            for (const auto& a : b.source_addresses) n += 1 + a.size();
            return n;
        }
        std::size_t operator()(const IshBody& b) const { return 1 + b.net.size(); }
        std::size_t operator()(const RdBody& b) const {
            return 1 + b.destination.size() + 1 + SnpaAddress::length + 1 +
                   (b.redirect_net ? b.redirect_net->size() : 0);
        }
        std::size_t operator()(const RaBody&) const { return 0; }
        std::size_t operator()(const AaBody& b) const { return 1 + b.net.size(); }
    };
    return std::visit(Visitor{}, body);
}

inline void require(bool condition, const char* message) {
    if (!condition) throw InvariantViolation(message);
}

inline void require_address(const NsapAddress& a, const char* what) {
    if (!a.well_formed())
        throw InvariantViolation(std::string(what) + " length must be 1..20 octets");
}

inline void check_invariants(const Pdu& pdu) {
    require(pdu.fixed.nlpid == esis_nlpid, "nlpid must be 130");
    require(pdu.fixed.version == esis_version, "version must be 1");
    require(pdu.fixed.reserved == 0, "reserved octet must be 0");
    require(body_type(pdu.body) == pdu.fixed.pdu_type, "pdu_type must match the body variant");

    if (const auto* esh = std::get_if<EshBody>(&pdu.body)) {
        require(!esh->source_addresses.empty(), "address count must be ≥ 1");
        require(esh->source_addresses.size() <= 255, "address count must fit in one octet");
        for (const auto& a : esh->source_addresses) require_address(a, "source address");
    } else if (const auto* ish = std::get_if<IshBody>(&pdu.body)) {
        require_address(ish->net, "NET");
    } else if (const auto* rd = std::get_if<RdBody>(&pdu.body)) {
        require_address(rd->destination, "destination address");
        if (rd->redirect_net) require_address(*rd->redirect_net, "redirect NET");
    } else if (std::holds_alternative<RaBody>(pdu.body)) {
        require(pdu.fixed.holding_time == 0, "RA holding time must be 0");
    } else if (const auto* aa = std::get_if<AaBody>(&pdu.body)) {
        require_address(aa->net, "NET");
    }

    for (std::size_t i = 0; i < pdu.options.size(); ++i) {
        const auto& o = pdu.options[i];
        if (!option::name(o.code))
            throw InvariantViolation("unknown option code " + std::to_string(o.code));
        if (!option_legal_for(pdu.fixed.pdu_type, o.code))
            throw InvariantViolation(std::string(option::name(o.code)) + " option is not legal on " +
                                     to_string(pdu.fixed.pdu_type));
        for (std::size_t j = 0; j < i; ++j)
            if (pdu.options[j].code == o.code)
                throw InvariantViolation(std::string("duplicate ") + option::name(o.code) + " option");
        if (auto err = check_option_value(o.code, o.value))
            throw InvariantViolation(std::string(option::name(o.code)) + " option: " + to_string(*err));
    }
}

}  // namespace detail

/// Total encoded header length of `pdu`, independent of its length_indicator field.
inline std::size_t encoded_length(const Pdu& pdu) {
    std::size_t n = fixed_part_length + detail::body_length(pdu.body);
    for (const auto& o : pdu.options) n += 2 + o.value.size();
    return n;
}

/// Serializes the header. length_indicator is written from the actual size;
/// the checksum octets are copied from pdu.fixed.checksum unchanged.
inline Octets encode(const Pdu& pdu) {
    detail::check_invariants(pdu);
    const std::size_t total = encoded_length(pdu);
    if (total > max_header_length)
        throw InvariantViolation("encoded header exceeds 255 octets (" + std::to_string(total) + ")");

    Octets out;
    out.reserve(total);
    out.push_back(pdu.fixed.nlpid);
    out.push_back(static_cast<std::uint8_t>(total));
    out.push_back(pdu.fixed.version);
    out.push_back(pdu.fixed.reserved);
    out.push_back(static_cast<std::uint8_t>(pdu.fixed.pdu_type));
    out.push_back(static_cast<std::uint8_t>(pdu.fixed.holding_time >> 8));
    out.push_back(static_cast<std::uint8_t>(pdu.fixed.holding_time & 0xff));
    out.push_back(pdu.fixed.checksum[0]);
    out.push_back(pdu.fixed.checksum[1]);

    auto put_address = [&out](ByteView a) {
        out.push_back(static_cast<std::uint8_t>(a.size()));
        out.insert(out.end(), a.begin(), a.end());
    };

    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, EshBody>) {
                out.push_back(static_cast<std::uint8_t>(body.source_addresses.size()));
                for (const auto& a : body.source_addresses) put_address(a.view());
            } else if constexpr (std::is_same_v<T, IshBody> || std::is_same_v<T, AaBody>) {
                put_address(body.net.view());
            } else if constexpr (std::is_same_v<T, RdBody>) {
                put_address(body.destination.view());
                put_address(body.better_snpa.view());
                if (body.redirect_net)
                    put_address(body.redirect_net->view());
                else
                    out.push_back(0);
            }
        },
        pdu.body);

    for (const auto& o : pdu.options) {
        out.push_back(o.code);
        out.push_back(static_cast<std::uint8_t>(o.value.size()));
        out.insert(out.end(), o.value.begin(), o.value.end());
    }
    return out;
}

/// encode() followed by checksum generation: the form that goes on the wire.
inline Octets encode_with_checksum(const Pdu& pdu) {
    Octets out = encode(pdu);
    fill_checksum(out);
    return out;
}

namespace detail {
inline Pdu make_pdu(PduType type, std::uint16_t holding, PduBody body, std::vector<OptionParam> options) {
    Pdu p;
    p.fixed.pdu_type = type;
    p.fixed.holding_time = holding;
    p.body = std::move(body);
    p.options = std::move(options);
    p.fixed.length_indicator = static_cast<std::uint8_t>(std::min(encoded_length(p), max_header_length));
    return p;
}
}  // namespace detail

inline Pdu make_esh(std::vector<NsapAddress> sources, std::uint16_t holding,
                    std::vector<OptionParam> options = {}) {
    return detail::make_pdu(PduType::Esh, holding, EshBody{std::move(sources)}, std::move(options));
}

inline Pdu make_ish(NetAddress net, std::uint16_t holding, std::vector<OptionParam> options = {}) {
    return detail::make_pdu(PduType::Ish, holding, IshBody{std::move(net)}, std::move(options));
}

inline Pdu make_rd(NsapAddress destination, SnpaAddress better_snpa, std::optional<NetAddress> net,
                   std::uint16_t holding, std::vector<OptionParam> options = {}) {
    return detail::make_pdu(PduType::Rd, holding, RdBody{std::move(destination), better_snpa, std::move(net)},
                            std::move(options));
}

inline Pdu make_ra(std::vector<OptionParam> options = {}) {
    return detail::make_pdu(PduType::Ra, 0, RaBody{}, std::move(options));
}

inline Pdu make_aa(NetAddress net, std::uint16_t holding, std::vector<OptionParam> options = {}) {
    return detail::make_pdu(PduType::Aa, holding, AaBody{std::move(net)}, std::move(options));
}

// ---------------------------------------------------------------------------
// Decoding

namespace detail {

class HeaderReader {
public:
    HeaderReader(ByteView header, std::size_t start) : header_(header), pos_(start) {}

    [[nodiscard]] std::size_t remaining() const noexcept { return header_.size() - pos_; }
    [[nodiscard]] bool at_end() const noexcept { return pos_ == header_.size(); }

    std::optional<std::uint8_t> octet() noexcept {
        if (at_end()) return std::nullopt;
        return header_[pos_++];
    }
    std::optional<ByteView> take(std::size_t n) noexcept {
        if (remaining() < n) return std::nullopt;
        auto v = header_.subspan(pos_, n);
        pos_ += n;
        return v;
    }

private:
    ByteView header_;
    std::size_t pos_;
};

using AddressOrError = std::variant<NsapAddress, ProtocolErrorDetail>;

inline AddressOrError read_address(HeaderReader& in, const ValidationProfile& profile) {
    auto len = in.octet();
    if (!len) return ProtocolErrorDetail::TruncatedPdu;
    if (*len == 0 || *len > NsapAddress::max_length) return ProtocolErrorDetail::BadAddressLength;
    if (profile.kind == ValidationProfile::Kind::Atn && *len != NsapAddress::max_length)
        return ProtocolErrorDetail::BadAddressLength;
    auto bytes = in.take(*len);
    if (!bytes) return ProtocolErrorDetail::TruncatedPdu;
    if (auto err = validate_nsap(*bytes, profile)) return *err;
    return NsapAddress(*bytes);
}

}  // namespace detail

/// Decodes one frame payload. Checks run in order: NLPID, version, checksum,
/// fixed-part fields, address part, options. Octets beyond the length
/// indicator are ignored.
inline DecodeResult decode(ByteView raw, const ValidationProfile& profile = ValidationProfile::lenient()) {
    using PE = ProtocolErrorDetail;
    const auto truncated = DiscardReason::protocol(PE::TruncatedPdu);

    if (raw.empty()) return truncated;
    if (raw[0] != esis_nlpid) return DiscardReason{DiscardKind::NotEsIs};
    if (raw.size() < 3) return truncated;
    if (raw[2] != esis_version) return DiscardReason{DiscardKind::WrongVersion};
    if (raw.size() < fixed_part_length) return truncated;

    // The checksum covers exactly length_indicator octets, so it can only be
    // checked once that length is known to be usable.
    const std::size_t li = raw[1];
    if (li < fixed_part_length) return DiscardReason::protocol(PE::BadHeaderLength);
    if (li > raw.size()) return truncated;
    const ByteView header = raw.first(li);

    if (verify_checksum(header) == ChecksumVerdict::Invalid) return DiscardReason{DiscardKind::ChecksumError};

    if (header[3] != 0 || (header[4] & 0xe0) != 0) return DiscardReason::protocol(PE::NonzeroReserved);
    auto type = pdu_type_from_code(header[4] & 0x1f);
    if (!type) return DiscardReason::protocol(PE::UnknownType);

    Pdu pdu;
    pdu.fixed.nlpid = header[0];
    pdu.fixed.length_indicator = header[1];
    pdu.fixed.version = header[2];
    pdu.fixed.reserved = header[3];
    pdu.fixed.pdu_type = *type;
    pdu.fixed.holding_time = static_cast<std::uint16_t>((header[5] << 8) | header[6]);
    pdu.fixed.checksum = {header[7], header[8]};

    detail::HeaderReader in(header, fixed_part_length);
    auto fail = [](PE d) { return DiscardReason::protocol(d); };

    switch (*type) {
        case PduType::Esh: {
            auto count = in.octet();
            if (!count) return truncated;
            if (*count == 0) return fail(PE::ZeroAddressCount);
            EshBody body;
            for (unsigned i = 0; i < *count; ++i) {
                auto a = detail::read_address(in, profile);
                if (auto* err = std::get_if<PE>(&a)) return fail(*err);
                body.source_addresses.push_back(std::move(std::get<NsapAddress>(a)));
            }
            pdu.body = std::move(body);
            break;
        }
        case PduType::Ish:
        case PduType::Aa: {
            auto a = detail::read_address(in, profile);
            if (auto* err = std::get_if<PE>(&a)) return fail(*err);
            if (*type == PduType::Ish)
                pdu.body = IshBody{std::move(std::get<NsapAddress>(a))};
            else
                pdu.body = AaBody{std::move(std::get<NsapAddress>(a))};
            break;
        }
        case PduType::Rd: {
            RdBody body;
            auto dest = detail::read_address(in, profile);
            if (auto* err = std::get_if<PE>(&dest)) return fail(*err);
            body.destination = std::move(std::get<NsapAddress>(dest));

            auto snpa_len = in.octet();
            if (!snpa_len) return truncated;
            if (*snpa_len != SnpaAddress::length) return fail(PE::BadAddressLength);
            auto snpa_bytes = in.take(*snpa_len);
            if (!snpa_bytes) return truncated;
            body.better_snpa = *SnpaAddress::from_bytes(*snpa_bytes);

            // A zero-length NET means a redirect to an end system.
            auto net_len = in.octet();
            if (!net_len) return truncated;
            if (*net_len != 0) {
                if (*net_len > NsapAddress::max_length) return fail(PE::BadAddressLength);
                auto net_bytes = in.take(*net_len);
                if (!net_bytes) return truncated;
                if (auto err = validate_nsap(*net_bytes, profile)) return fail(*err);
                body.redirect_net = NsapAddress(*net_bytes);
            }
            pdu.body = std::move(body);
            break;
        }
        case PduType::Ra: pdu.body = RaBody{}; break;
    }

    while (!in.at_end()) {
        const std::uint8_t code = *in.octet();
        auto len = in.octet();
        if (!len) return fail(PE::BadOptionLength);
        if (!option::name(code)) return fail(PE::BadOptionCode);
        if (!option_legal_for(*type, code)) return fail(PE::OptionIllegalForType);
        if (pdu.find_option(code)) return fail(PE::DuplicateOption);
        auto value = in.take(*len);
        if (!value) return fail(PE::BadOptionLength);
        if (auto err = check_option_value(code, *value)) return fail(*err);
        pdu.options.push_back({code, Octets(value->begin(), value->end())});
    }

    return pdu;
}

}  // namespace esis
