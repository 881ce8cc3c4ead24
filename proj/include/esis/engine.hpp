#pragma once

#include "esis/octets.hpp"
#include "esis/pdu.hpp"
#include "esis/rib.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace esis {

enum class Role { EndSystem, IntermediateSystem };

inline const char* to_string(Role r) noexcept { return r == Role::EndSystem ? "es" : "is"; }

struct ForwardingRoute {
    Octets prefix;
    NetAddress next_is_net;
    SnpaAddress next_is_snpa;
};

struct NodeConfig {
    Role role = Role::EndSystem;
    SnpaAddress snpa;
    std::vector<NsapAddress> local_nsaps;  // ES; empty means "ask for an address"
    std::optional<NetAddress> local_net;   // mandatory for an IS
    Seconds configuration_timer = 30;
    unsigned holding_multiplier = 2;
    ValidationProfile validation_profile;
    std::vector<ForwardingRoute> forwarding_table;  // IS only
    std::optional<std::uint16_t> esct;              // IS only: suggested ES configuration timer
    std::vector<OptionParam> hello_options;         // Security / Priority carried on every hello
    std::optional<Seconds> first_hello;             // default: ES at start, IS one timer period later

    /// Throws std::invalid_argument describing the first broken constraint.
    void validate() const {
        auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
        if (configuration_timer <= 0) fail("configuration timer must be > 0");
        if (holding_multiplier < 2) fail("holding multiplier must be >= 2");
        if (static_cast<long long>(holding_multiplier) * configuration_timer > 0xffff)
            fail("holding time (multiplier x timer) must fit in 16 bits");
        if (snpa.is_group()) fail("node SNPA must be an individual address");
        if (role == Role::IntermediateSystem) {
            if (!local_net) fail("an intermediate system needs a NET");
            if (!local_nsaps.empty()) fail("an intermediate system has a NET, not NSAPs");
        } else {
            if (!forwarding_table.empty()) fail("only an intermediate system has a forwarding table");
            if (esct) fail("only an intermediate system suggests an ESCT");
        }
        if (local_net && validate_nsap(local_net->view(), validation_profile))
            fail("NET " + local_net->hex() + " does not pass the validation profile");
        for (const auto& a : local_nsaps)
            if (validate_nsap(a.view(), validation_profile))
                fail("NSAP " + a.hex() + " does not pass the validation profile");
        if (esct && *esct == 0) fail("ESCT must be > 0");
        for (const auto& o : hello_options) {
            if (o.code != option::security && o.code != option::priority)
                fail("hello options are limited to Security and Priority");
            if (check_option_value(o.code, o.value)) fail("malformed hello option");
        }
        if (first_hello && *first_hello < 0) fail("first_hello must be >= 0");
    }
};

struct Frame {
    SnpaAddress destination;
    SnpaAddress source;
    Octets payload;

    bool operator==(const Frame&) const = default;
};

// ---------------------------------------------------------------------------
// CLNP stub: just enough of a data PDU to drive redirects.
// Layout: 0x81, version 1, source length, source, destination length, destination.

inline constexpr std::uint8_t clnp_nlpid = 129;

struct MinimalClnpPdu {
    NsapAddress source;
    NsapAddress destination;

    bool operator==(const MinimalClnpPdu&) const = default;
};

inline Octets encode_clnp(const MinimalClnpPdu& pdu) {
    Octets out{clnp_nlpid, 1};
    for (const auto* a : {&pdu.source, &pdu.destination}) {
        out.push_back(static_cast<std::uint8_t>(a->size()));
        out.insert(out.end(), a->octets.begin(), a->octets.end());
    }
    return out;
}

inline std::variant<MinimalClnpPdu, ProtocolErrorDetail> decode_clnp(ByteView raw,
                                                                     const ValidationProfile& profile) {
    using PE = ProtocolErrorDetail;
    if (raw.size() < 2 || raw[0] != clnp_nlpid) return PE::TruncatedPdu;
    std::size_t pos = 2;
    NsapAddress parts[2];
    for (auto& part : parts) {
        if (pos >= raw.size()) return PE::TruncatedPdu;
        const std::size_t len = raw[pos++];
        if (raw.size() - pos < len) return PE::TruncatedPdu;
        auto bytes = raw.subspan(pos, len);
        if (auto err = validate_nsap(bytes, profile)) return *err;
        part = NsapAddress(bytes);
        pos += len;
    }
    return MinimalClnpPdu{std::move(parts[0]), std::move(parts[1])};
}

// ---------------------------------------------------------------------------
// Engine events

enum class TimerKind { Configuration, Holding };
enum class RibChange { Inserted, Replaced, Refreshed, Flushed };

inline const char* to_string(TimerKind k) noexcept { return k == TimerKind::Configuration ? "config" : "holding"; }

inline const char* to_string(RibChange c) noexcept {
    switch (c) {
        case RibChange::Inserted: return "inserted";
        case RibChange::Replaced: return "replaced";
        case RibChange::Refreshed: return "refreshed";
        case RibChange::Flushed: return "flushed";
    }
    return "?";
}

namespace event {
struct SendFrame {
    Frame frame;
    bool operator==(const SendFrame&) const = default;
};
struct RibChanged {
    RibChange change;
    std::string line;
    bool operator==(const RibChanged&) const = default;
};
struct Discarded {
    DiscardReason reason;
    bool operator==(const Discarded&) const = default;
};
struct AddressAssigned {
    NetAddress net;
    bool operator==(const AddressAssigned&) const = default;
};
struct RedirectIssued {
    NsapAddress destination;
    SnpaAddress snpa;
    bool operator==(const RedirectIssued&) const = default;
};
struct TimerSet {
    Seconds at;
    TimerKind kind;
    bool operator==(const TimerSet&) const = default;
};
}  // namespace event

using EngineEvent = std::variant<event::SendFrame, event::RibChanged, event::Discarded, event::AddressAssigned,
                                 event::RedirectIssued, event::TimerSet>;
using Events = std::vector<EngineEvent>;

/// Log detail for one event. The simulator writes its own SEND lines so it
/// can number frames.
inline std::string describe(const EngineEvent& ev) {
    struct Visitor {
        std::string operator()(const event::SendFrame& e) const {
            return "SEND dst=" + e.frame.destination.hex() + " src=" + e.frame.source.hex() + " " +
                   to_hex(e.frame.payload);
        }
        std::string operator()(const event::RibChanged& e) const {
            return std::string("RIB ") + to_string(e.change) + " " + e.line;
        }
        std::string operator()(const event::Discarded& e) const { return "DISCARD " + to_string(e.reason); }
        std::string operator()(const event::AddressAssigned& e) const { return "ASSIGN net=" + e.net.hex(); }
        std::string operator()(const event::RedirectIssued& e) const {
            return "REDIRECT dest=" + e.destination.hex() + " snpa=" + e.snpa.hex();
        }
        std::string operator()(const event::TimerSet& e) const {
            return std::string("TIMER set ") + to_string(e.kind) + " at=" + std::to_string(e.at);
        }
    };
    return std::visit(Visitor{}, ev);
}

// ---------------------------------------------------------------------------

/// One ES or IS protocol instance. Every input (timer, frame, script stimulus)
/// returns the events it produced; the node never performs I/O itself.
class Node {
public:
    explicit Node(NodeConfig config) : config_(std::move(config)), ct_(config_.configuration_timer) {
        config_.validate();
    }

    [[nodiscard]] const NodeConfig& config() const noexcept { return config_; }
    [[nodiscard]] Role role() const noexcept { return config_.role; }
    [[nodiscard]] const Rib& rib() const noexcept { return rib_; }
    [[nodiscard]] Seconds configuration_timer() const noexcept { return ct_; }
    [[nodiscard]] const std::optional<NetAddress>& acquired_net() const noexcept { return acquired_net_; }
    [[nodiscard]] std::optional<Seconds> config_due() const noexcept { return config_due_; }
    [[nodiscard]] std::optional<Seconds> holding_due() const noexcept { return holding_due_; }
    [[nodiscard]] bool is_down() const noexcept { return down_; }

    [[nodiscard]] std::uint16_t holding_time() const noexcept {
        return static_cast<std::uint16_t>(std::min<Seconds>(0xffff, ct_ * config_.holding_multiplier));
    }

    [[nodiscard]] bool listens_to(const SnpaAddress& dst) const noexcept {
        if (dst == config_.snpa || dst == snpa::broadcast) return true;
        return dst == (is_es() ? snpa::all_es : snpa::all_is);
    }

    Events start(Seconds now) {
        const Seconds first = config_.first_hello.value_or(is_es() ? 0 : ct_);
        anchor_ = now + first;
        config_due_ = anchor_;
        return {event::TimerSet{*config_due_, TimerKind::Configuration}};
    }

    /// Report configuration: periodic ESH/ISH, or RA while an ES has no address.
    Events on_config_timer(Seconds now) {
        Events out;
        if (down_) return out;
        flush(now, out);
        if (is_es()) {
            auto sources = own_addresses();
            if (sources.empty()) {
                send_pdu(make_ra(config_.hello_options), snpa::all_is, out);
            } else {
                const bool is_known = rib_.has_live(NeighborKind::IsNeighbor, now);
                send_pdu(make_esh(sources, holding_time(), config_.hello_options), snpa::all_is, out);
                if (!is_known)
                    send_pdu(make_esh(std::move(sources), holding_time(), config_.hello_options), snpa::all_es,
                             out);
            }
        } else {
            send_pdu(make_ish_pdu(), snpa::all_es, out);
        }
        anchor_ = now;
        config_due_ = now + ct_;
        out.push_back(event::TimerSet{*config_due_, TimerKind::Configuration});
        arm_holding(now, out);
        return out;
    }

    Events on_holding_timer(Seconds now) {
        Events out;
        if (down_ || holding_due_ != now) return out;
        holding_due_.reset();
        flush(now, out);
        arm_holding(now, out);
        return out;
    }

    /// Input pipeline entry point for a frame delivered to this node.
    Events handle_frame(const Frame& frame, Seconds now) {
        Events out;
        if (down_ || frame.source == config_.snpa || frame.payload.empty()) return out;

        if (frame.payload[0] == esis_nlpid) {
            auto result = decode(frame.payload, config_.validation_profile);
            if (!result) {
                out.push_back(event::Discarded{result.reason()});
                return out;
            }
            const Pdu& pdu = result.pdu();
            switch (pdu.type()) {
                case PduType::Esh: return handle_esh(pdu, frame.source, now);
                case PduType::Ish: return handle_ish(pdu, frame.source, now);
                case PduType::Rd: return handle_rd(pdu, now);
                case PduType::Ra: return handle_ra(pdu, frame.source, now);
                case PduType::Aa: return handle_aa(pdu, now);
            }
            return out;
        }
        if (frame.payload[0] == clnp_nlpid) {
            auto clnp = decode_clnp(frame.payload, config_.validation_profile);
            if (auto* err = std::get_if<ProtocolErrorDetail>(&clnp)) {
                out.push_back(event::Discarded{DiscardReason::protocol(*err)});
                return out;
            }
            const auto& stub = std::get<MinimalClnpPdu>(clnp);
            return is_es() ? handle_clnp_at_es(stub, frame.source, now)
                           : handle_clnp_at_is(stub, frame.source, now);
        }
        return out;
    }

    /// Record configuration at an IS; an ES seen for the first time gets an
    /// ISH straight back (configuration notification).
    Events handle_esh(const Pdu& esh, SnpaAddress source_snpa, Seconds now) {
        Events out;
        // ESHs from peer ESs arrive on the all-ES group; an ES does not record them.
        if (is_es()) return out;
        const auto& body = std::get<EshBody>(esh.body);
        if (esh.fixed.holding_time == 0) return out;  // already expired on arrival

        bool newly_available = false;
        for (const auto& nsap : body.source_addresses) {
            auto r = rib_.insert_entry(NeighborKind::EsNeighbor, nsap, source_snpa, esh.fixed.holding_time, now);
            newly_available |= r == UpsertResult::Inserted;
            note_entry(r, NeighborKind::EsNeighbor, nsap, out);
        }
        arm_holding(now, out);
        if (newly_available) send_pdu(make_ish_pdu(), source_snpa, out);
        return out;
    }

    Events handle_ish(const Pdu& ish, SnpaAddress source_snpa, Seconds now) {
        Events out;
        if (!is_es()) return role_mismatch();
        const auto& net = std::get<IshBody>(ish.body).net;

        UpsertResult r = UpsertResult::Replaced;
        if (ish.fixed.holding_time != 0) {
            r = rib_.insert_entry(NeighborKind::IsNeighbor, net, source_snpa, ish.fixed.holding_time, now);
            note_entry(r, NeighborKind::IsNeighbor, net, out);
            arm_holding(now, out);
        }

        bool timer_changed = false;
        if (const auto* esct = ish.find_option(option::esct)) {
            const Seconds suggested = esct_seconds(*esct);
            if (suggested != ct_) {
                ct_ = suggested;
                timer_changed = true;
            }
        }

        if (r == UpsertResult::Inserted && ish.fixed.holding_time != 0) {
            auto sources = own_addresses();
            if (!sources.empty())
                send_pdu(make_esh(std::move(sources), holding_time(), config_.hello_options), source_snpa, out);
        }
        if (timer_changed && !down_) {
            anchor_ = now;
            config_due_ = now + ct_;
            out.push_back(event::TimerSet{*config_due_, TimerKind::Configuration});
        }
        return out;
    }

    /// Assign address: answer an RA with a temporary NET.
    Events handle_ra(const Pdu& /*ra*/, SnpaAddress source_snpa, Seconds /*now*/) {
        Events out;
        if (is_es()) return role_mismatch();
        send_pdu(make_aa(assign_temporary_net(source_snpa), holding_time()), source_snpa, out);
        return out;
    }

    /// Record address: the latest AA wins.
    Events handle_aa(const Pdu& aa, Seconds /*now*/) {
        if (!is_es()) return role_mismatch();
        acquired_net_ = std::get<AaBody>(aa.body).net;
        return {event::AddressAssigned{*acquired_net_}};
    }

    Events handle_rd(const Pdu& rd, Seconds now) {
        Events out;
        if (!is_es()) return role_mismatch();
        if (rd.fixed.holding_time == 0) return out;
        const auto& body = std::get<RdBody>(rd.body);
        auto r = rib_.record_redirect(body.destination, body.better_snpa, body.redirect_net, rd.fixed.holding_time,
                                      now);
        out.push_back(event::RibChanged{r == UpsertResult::Inserted ? RibChange::Inserted : RibChange::Replaced,
                                        dump_line(*rib_.find_redirect(body.destination))});
        arm_holding(now, out);
        return out;
    }

    /// Request redirect. A destination ES on this subnetwork gets an ES-RD
    /// (and the destination ES learns the reverse path the same way); a
    /// forwarding-table hit on another IS gets an IS-RD carrying its NET.
    Events handle_clnp_at_is(const MinimalClnpPdu& clnp, SnpaAddress source_snpa, Seconds now) {
        Events out;
        if (is_es()) return role_mismatch();

        if (auto dest_es = rib_.lookup(NeighborKind::EsNeighbor, clnp.destination, now)) {
            const SnpaAddress better = dest_es->snpa;
            if (better != source_snpa) {
                issue_redirect(clnp.destination, better, std::nullopt, source_snpa, out);
                auto src_es = rib_.lookup(NeighborKind::EsNeighbor, clnp.source, now);
                if (src_es && src_es->snpa == source_snpa)
                    issue_redirect(clnp.source, source_snpa, std::nullopt, better, out);
            }
            forward(clnp, better, out);
            return out;
        }

        if (const auto* route = longest_prefix_match(clnp.destination)) {
            if (route->next_is_snpa != source_snpa)
                issue_redirect(clnp.destination, route->next_is_snpa, route->next_is_net, source_snpa, out);
            forward(clnp, route->next_is_snpa, out);
        }
        return out;
    }

    /// Refresh redirect: traffic from a redirected destination over the
    /// redirect's own SNPA keeps the entry alive.
    Events handle_clnp_at_es(const MinimalClnpPdu& clnp, SnpaAddress source_snpa, Seconds now) {
        Events out;
        if (!is_es()) return role_mismatch();
        const auto* entry = rib_.find_redirect(clnp.source);
        if (!entry || entry->expiry <= now) return out;
        if (rib_.refresh_redirect(clnp.source, source_snpa, now, entry->holding_time))
            out.push_back(event::RibChanged{RibChange::Refreshed, dump_line(*rib_.find_redirect(clnp.source))});
        return out;
    }

    /// Originates a CLNP stub PDU from this ES toward `destination`.
    Events send_clnp(const MinimalClnpPdu& clnp, Seconds now) {
        Events out;
        if (down_ || !is_es()) return out;
        const auto hop = rib_.next_hop(clnp.destination, now);
        if (hop.kind == NextHop::Kind::Unknown) return out;
        out.push_back(event::SendFrame{Frame{hop.snpa, config_.snpa, encode_clnp(clnp)}});
        return out;
    }

    /// The first 13 octets of this IS's NET, the requester's SNPA, selector 0.
    [[nodiscard]] NetAddress assign_temporary_net(SnpaAddress requester) const {
        Octets net(13, 0);
        if (config_.local_net) {
            const auto& own = config_.local_net->octets;
            std::copy_n(own.begin(), std::min<std::size_t>(13, own.size()), net.begin());
        }
        net.insert(net.end(), requester.octets.begin(), requester.octets.end());
        net.push_back(0);
        return NetAddress(std::move(net));
    }

    Events go_down(Seconds /*now*/) {
        down_ = true;
        config_due_.reset();
        holding_due_.reset();
        return {};
    }

    /// Hellos resume on the next boundary of the original timer grid.
    Events come_up(Seconds now) {
        Events out;
        if (!down_) return out;
        down_ = false;
        Seconds next = anchor_;
        if (next < now) next += ((now - next + ct_ - 1) / ct_) * ct_;
        config_due_ = next;
        out.push_back(event::TimerSet{next, TimerKind::Configuration});
        flush(now, out);
        arm_holding(now, out);
        return out;
    }

private:
    [[nodiscard]] bool is_es() const noexcept { return config_.role == Role::EndSystem; }

    static Events role_mismatch() {
        return {event::Discarded{DiscardReason::protocol(ProtocolErrorDetail::RoleMismatch)}};
    }

    [[nodiscard]] std::vector<NsapAddress> own_addresses() const {
        if (!config_.local_nsaps.empty()) return config_.local_nsaps;
        if (acquired_net_) return {*acquired_net_};
        return {};
    }

    [[nodiscard]] Pdu make_ish_pdu() const {
        auto options = config_.hello_options;
        if (config_.esct) options.push_back(make_esct_option(*config_.esct));
        return make_ish(*config_.local_net, holding_time(), std::move(options));
    }

    void send_pdu(const Pdu& pdu, SnpaAddress destination, Events& out) const {
        out.push_back(event::SendFrame{Frame{destination, config_.snpa, encode_with_checksum(pdu)}});
    }

    void forward(const MinimalClnpPdu& clnp, SnpaAddress hop, Events& out) const {
        out.push_back(event::SendFrame{Frame{hop, config_.snpa, encode_clnp(clnp)}});
    }

    void issue_redirect(const NsapAddress& destination, SnpaAddress better, std::optional<NetAddress> net,
                        SnpaAddress to, Events& out) const {
        out.push_back(event::RedirectIssued{destination, better});
        send_pdu(make_rd(destination, better, std::move(net), holding_time()), to, out);
    }

    /// Ties go to the earlier table entry.
    [[nodiscard]] const ForwardingRoute* longest_prefix_match(const NsapAddress& destination) const {
        const ForwardingRoute* best = nullptr;
        for (const auto& route : config_.forwarding_table) {
            const auto& p = route.prefix;
            if (p.size() > destination.size()) continue;
            if (!std::equal(p.begin(), p.end(), destination.octets.begin())) continue;
            if (!best || p.size() > best->prefix.size()) best = &route;
        }
        return best;
    }

    void note_entry(UpsertResult r, NeighborKind kind, const NsapAddress& address, Events& out) const {
        for (const auto& e : rib_.entries())
            if (e.kind == kind && e.address == address)
                out.push_back(event::RibChanged{
                    r == UpsertResult::Inserted ? RibChange::Inserted : RibChange::Replaced, dump_line(e)});
    }

    void flush(Seconds now, Events& out) {
        std::vector<RibEntry> entries;
        std::vector<RedirectEntry> redirects;
        rib_.flush_expired(now, entries, redirects);
        for (const auto& e : entries) out.push_back(event::RibChanged{RibChange::Flushed, dump_line(e)});
        for (const auto& r : redirects) out.push_back(event::RibChanged{RibChange::Flushed, dump_line(r)});
    }

    /// Keeps exactly one pending holding timer, at or before the earliest expiry.
    void arm_holding(Seconds now, Events& out) {
        if (down_) return;
        auto earliest = rib_.earliest_expiry();
        if (!earliest) return;
        const Seconds at = std::max(*earliest, now);
        if (holding_due_ && *holding_due_ <= at) return;
        holding_due_ = at;
        out.push_back(event::TimerSet{at, TimerKind::Holding});
    }

    NodeConfig config_;
    Rib rib_;
    Seconds ct_;
    Seconds anchor_ = 0;
    std::optional<Seconds> config_due_;
    std::optional<Seconds> holding_due_;
    std::optional<NetAddress> acquired_net_;
    bool down_ = false;
};

}  // namespace esis
