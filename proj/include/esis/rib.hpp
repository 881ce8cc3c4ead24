#pragma once

#include "esis/octets.hpp"

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

namespace esis {

enum class NeighborKind { EsNeighbor, IsNeighbor };

enum class UpsertResult { Inserted, Replaced };

inline const char* to_string(UpsertResult r) noexcept {
    return r == UpsertResult::Inserted ? "inserted" : "replaced";
}

struct RibEntry {
    NeighborKind kind = NeighborKind::EsNeighbor;
    NsapAddress address;  // NSAP for an ES neighbor, NET for an IS neighbor
    SnpaAddress snpa;
    Seconds expiry = 0;
    std::uint64_t recorded = 0;  // recency stamp, bumped on insert and replace

    // The recency stamp is bookkeeping and does not take part in equality.
    bool operator==(const RibEntry& o) const {
        return kind == o.kind && address == o.address && snpa == o.snpa && expiry == o.expiry;
    }
};

struct RedirectEntry {
    NsapAddress destination;
    SnpaAddress better_snpa;
    std::optional<NetAddress> redirect_net;
    Seconds expiry = 0;
    Seconds holding_time = 0;  // what the RD granted; reused by refresh

    bool operator==(const RedirectEntry&) const = default;
};

struct NextHop {
    enum class Kind { Direct, ViaIs, Unknown };
    Kind kind = Kind::Unknown;
    SnpaAddress snpa;

    static NextHop direct(SnpaAddress s) { return {Kind::Direct, s}; }
    static NextHop via_is(SnpaAddress s) { return {Kind::ViaIs, s}; }
    static NextHop unknown() { return {}; }

    bool operator==(const NextHop&) const = default;
};

inline std::string dump_line(const RibEntry& e) {
    return std::string(e.kind == NeighborKind::EsNeighbor ? "ES " : "IS ") + e.address.hex() + " via " +
           e.snpa.hex() + " expires " + std::to_string(e.expiry);
}

inline std::string dump_line(const RedirectEntry& r) {
    std::string line = "RD " + r.destination.hex() + " -> " + r.better_snpa.hex();
    if (r.redirect_net) line += " net " + r.redirect_net->hex();
    return line + " expires " + std::to_string(r.expiry);
}

/// Neighbor configuration table plus redirect cache. Entries keep insertion
/// order; a replaced entry keeps its position. An entry whose expiry is at or
/// before `now` is dead: lookups skip it and flush_expired removes it.
class Rib {
public:
    UpsertResult insert_entry(NeighborKind kind, const NsapAddress& address, SnpaAddress snpa,
                              Seconds holding_time, Seconds now) {
        const Seconds expiry = now + holding_time;
        for (auto& e : entries_) {
            if (e.kind == kind && e.address == address) {
                e.snpa = snpa;
                e.expiry = expiry;
                e.recorded = ++clock_;
                return UpsertResult::Replaced;
            }
        }
        entries_.push_back({kind, address, snpa, expiry, ++clock_});
        return UpsertResult::Inserted;
    }

    /// First live entry (of any kind) carrying `address`.
    [[nodiscard]] std::optional<RibEntry> lookup(const NsapAddress& address, Seconds now) const {
        for (const auto& e : entries_)
            if (e.address == address && e.expiry > now) return e;
        return std::nullopt;
    }

    [[nodiscard]] std::optional<RibEntry> lookup(NeighborKind kind, const NsapAddress& address,
                                                 Seconds now) const {
        for (const auto& e : entries_)
            if (e.kind == kind && e.address == address && e.expiry > now) return e;
        return std::nullopt;
    }

    /// Removes every neighbor and redirect entry with expiry <= now.
    std::size_t flush_expired(Seconds now) {
        std::vector<RibEntry> dropped_entries;
        std::vector<RedirectEntry> dropped_redirects;
        return flush_expired(now, dropped_entries, dropped_redirects);
    }

    std::size_t flush_expired(Seconds now, std::vector<RibEntry>& dropped_entries,
                              std::vector<RedirectEntry>& dropped_redirects) {
        auto dead = [now](const auto& e) { return e.expiry <= now; };
        std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(dropped_entries), dead);
        std::copy_if(redirects_.begin(), redirects_.end(), std::back_inserter(dropped_redirects), dead);
        const std::size_t removed = std::erase_if(entries_, dead) + std::erase_if(redirects_, dead);
        return removed;
    }

    UpsertResult record_redirect(const NsapAddress& destination, SnpaAddress better_snpa,
                                 std::optional<NetAddress> redirect_net, Seconds holding_time, Seconds now) {
        const Seconds expiry = now + holding_time;
        for (auto& r : redirects_) {
            if (r.destination == destination) {
                r.better_snpa = better_snpa;
                r.redirect_net = std::move(redirect_net);
                r.expiry = expiry;
                r.holding_time = holding_time;
                return UpsertResult::Replaced;
            }
        }
        redirects_.push_back({destination, better_snpa, std::move(redirect_net), expiry, holding_time});
        return UpsertResult::Inserted;
    }

    /// Extends a redirect when traffic from `destination` arrives over the
    /// same SNPA the redirect points at. Anything else leaves the cache alone.
    bool refresh_redirect(const NsapAddress& destination, SnpaAddress observed_snpa, Seconds now,
                          Seconds holding_time) {
        for (auto& r : redirects_) {
            if (r.destination == destination && r.better_snpa == observed_snpa) {
                r.expiry = now + holding_time;
                return true;
            }
        }
        return false;
    }

    [[nodiscard]] NextHop next_hop(const NsapAddress& destination, Seconds now) const {
        for (const auto& r : redirects_)
            if (r.destination == destination && r.expiry > now) return NextHop::direct(r.better_snpa);
        if (auto es = lookup(NeighborKind::EsNeighbor, destination, now)) return NextHop::direct(es->snpa);

        const RibEntry* freshest = nullptr;
        for (const auto& e : entries_)
            if (e.kind == NeighborKind::IsNeighbor && e.expiry > now &&
                (!freshest || e.recorded > freshest->recorded))
                freshest = &e;
        if (freshest) return NextHop::via_is(freshest->snpa);
        return NextHop::unknown();
    }

    [[nodiscard]] bool has_live(NeighborKind kind, Seconds now) const {
        return std::any_of(entries_.begin(), entries_.end(),
                           [&](const RibEntry& e) { return e.kind == kind && e.expiry > now; });
    }

    [[nodiscard]] std::optional<Seconds> earliest_expiry() const {
        std::optional<Seconds> best;
        for (const auto& e : entries_)
            if (!best || e.expiry < *best) best = e.expiry;
        for (const auto& r : redirects_)
            if (!best || r.expiry < *best) best = r.expiry;
        return best;
    }

    [[nodiscard]] const RedirectEntry* find_redirect(const NsapAddress& destination) const {
        for (const auto& r : redirects_)
            if (r.destination == destination) return &r;
        return nullptr;
    }

    [[nodiscard]] std::size_t num_of_entry() const noexcept { return entries_.size(); }
    [[nodiscard]] std::size_t num_of_redirects() const noexcept { return redirects_.size(); }
    [[nodiscard]] const std::vector<RibEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] const std::vector<RedirectEntry>& redirects() const noexcept { return redirects_; }

    /// Text dump: ES lines, then IS lines, then RD lines, each in insertion order.
    [[nodiscard]] std::vector<std::string> dump() const {
        std::vector<std::string> lines;
        for (auto kind : {NeighborKind::EsNeighbor, NeighborKind::IsNeighbor})
            for (const auto& e : entries_)
                if (e.kind == kind) lines.push_back(dump_line(e));
        for (const auto& r : redirects_) lines.push_back(dump_line(r));
        return lines;
    }

    [[nodiscard]] std::string dump_text() const {
        std::string out;
        for (const auto& l : dump()) out += l + "\n";
        return out;
    }

    bool operator==(const Rib& other) const {
        return entries_ == other.entries_ && redirects_ == other.redirects_;
    }

private:
    std::vector<RibEntry> entries_;
    std::vector<RedirectEntry> redirects_;
    std::uint64_t clock_ = 0;
};

}  // namespace esis
