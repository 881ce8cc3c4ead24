#pragma once

// Deterministic discrete-event broadcast subnetwork. Events run in
// (time, insertion sequence) order; the only randomness is the seeded choice
// of octet and value for "random" corruption rules.

#include "esis/engine.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace esis {

/// Selects the nth frame (1-based) overall, or the nth ES-IS PDU of one type.
struct FrameMatch {
    std::size_t nth = 1;
    std::optional<PduType> type;
};

struct DropRule {
    FrameMatch match;
};

struct CorruptRule {
    FrameMatch match;
    std::optional<std::size_t> octet_index;  // nothing = seeded random octet
    std::optional<std::uint8_t> new_value;   // nothing = seeded random different value
    bool fix_checksum = false;                // regenerate the checksum after mutating
};

struct FaultPlan {
    std::vector<DropRule> drops;
    std::vector<CorruptRule> corruptions;
};

namespace action {
struct SendClnp {
    std::string node;
    NsapAddress source;
    NsapAddress destination;
};
struct NodeDown {
    std::string node;
};
struct NodeUp {
    std::string node;
};
}  // namespace action

using ScriptAction = std::variant<action::SendClnp, action::NodeDown, action::NodeUp>;

class UnknownNode : public std::invalid_argument {
public:
    explicit UnknownNode(const std::string& name) : std::invalid_argument("unknown node '" + name + "'") {}
};

class SubnetSim {
public:
    explicit SubnetSim(std::uint64_t seed = 0, Seconds latency = 1) : rng_(seed), latency_(latency) {
        if (latency < 0) throw std::invalid_argument("latency must be >= 0");
    }

    /// Adds a node in declaration order and starts its timers at the current time.
    std::size_t add_node(std::string name, NodeConfig config) {
        for (const auto& n : nodes_) {
            if (n.name == name) throw std::invalid_argument("duplicate node name '" + name + "'");
            if (n.node.config().snpa == config.snpa)
                throw std::invalid_argument("duplicate SNPA " + config.snpa.hex());
        }
        nodes_.push_back({std::move(name), Node(std::move(config))});
        const std::size_t index = nodes_.size() - 1;
        apply(index, nodes_[index].node.start(now_));
        return index;
    }

    void set_fault_plan(FaultPlan plan) { faults_ = std::move(plan); }

    void inject(ScriptAction a, Seconds at) {
        std::visit([this](const auto& act) { (void)index_of(act.node); }, a);
        if (at < now_) throw std::invalid_argument("cannot schedule an action in the past");
        push(at, std::move(a));
    }

    /// Hands a frame to the medium: applies the fault plan, then schedules one
    /// delivery per listening node other than the sender.
    void transmit(std::size_t from, Frame frame) {
        const std::size_t ordinal = ++transmit_count_;
        std::string fault;
        const bool drop = apply_faults(ordinal, frame, fault);

        record(from, "SEND #" + std::to_string(ordinal) + " dst=" + frame.destination.hex() +
                         " src=" + frame.source.hex() + " " + to_hex(frame.payload) + fault);
        if (drop) return;

        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (i == from || !nodes_[i].node.listens_to(frame.destination)) continue;
            push(now_ + latency_, Delivery{i, ordinal, frame});
        }
    }

    /// Runs every event scheduled at or before `t_end`; returns the whole log so far.
    const std::vector<std::string>& run_until(Seconds t_end) {
        if (t_end < now_) throw std::invalid_argument("run_until target is in the past");
        while (!queue_.empty() && queue_.top().at <= t_end) {
            Scheduled ev = queue_.top();
            queue_.pop();
            now_ = ev.at;
            std::visit([this](auto& payload) { dispatch(payload); }, ev.payload);
        }
        now_ = t_end;
        return log_;
    }

    [[nodiscard]] Seconds now() const noexcept { return now_; }
    [[nodiscard]] const std::vector<std::string>& log() const noexcept { return log_; }
    [[nodiscard]] std::size_t transmit_count() const noexcept { return transmit_count_; }
    [[nodiscard]] std::size_t delivery_count() const noexcept { return delivery_count_; }
    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] const std::string& node_name(std::size_t i) const { return nodes_.at(i).name; }

    [[nodiscard]] const Node& node(std::string_view name) const { return nodes_[index_of(name)].node; }
    [[nodiscard]] const Node& node(std::size_t i) const { return nodes_.at(i).node; }

    /// Per-node RIB dumps in declaration order, each headed by "[rib <name>]".
    [[nodiscard]] std::string dump_ribs() const {
        std::string out;
        for (const auto& n : nodes_) out += "[rib " + n.name + "]\n" + n.node.rib().dump_text();
        return out;
    }

private:
    struct NamedNode {
        std::string name;
        Node node;
    };
    struct Delivery {
        std::size_t to;
        std::size_t ordinal;
        Frame frame;
    };
    struct TimerFire {
        std::size_t node;
        TimerKind kind;
    };
    struct Scheduled {
        Seconds at;
        std::uint64_t seq;
        std::variant<Delivery, TimerFire, ScriptAction> payload;
    };
    struct Later {
        bool operator()(const Scheduled& a, const Scheduled& b) const noexcept {
            return a.at != b.at ? a.at > b.at : a.seq > b.seq;
        }
    };

    template <typename T>
    void push(Seconds at, T payload) {
        queue_.push(Scheduled{at, next_seq_++, std::move(payload)});
    }

    [[nodiscard]] std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].name == name) return i;
        throw UnknownNode(std::string(name));
    }

    void record(std::size_t node, const std::string& detail) {
        log_.push_back("t=" + std::to_string(now_) + " node=" + nodes_[node].name + " " + detail);
    }

    void apply(std::size_t node, const Events& events) {
        for (const auto& ev : events) {
            if (const auto* send = std::get_if<event::SendFrame>(&ev)) {
                transmit(node, send->frame);
                continue;
            }
            record(node, describe(ev));
            if (const auto* timer = std::get_if<event::TimerSet>(&ev)) push(timer->at, TimerFire{node, timer->kind});
        }
    }

    void dispatch(Delivery& d) {
        auto& target = nodes_[d.to].node;
        if (target.is_down()) return;
        ++delivery_count_;
        record(d.to, "RECV #" + std::to_string(d.ordinal) + " dst=" + d.frame.destination.hex() +
                         " src=" + d.frame.source.hex() + " " + to_hex(d.frame.payload));
        apply(d.to, target.handle_frame(d.frame, now_));
    }

    void dispatch(TimerFire& t) {
        auto& target = nodes_[t.node].node;
        if (target.is_down()) return;
        // Superseded timers (rescheduled or cancelled) are dropped silently.
        const auto due = t.kind == TimerKind::Configuration ? target.config_due() : target.holding_due();
        if (due != now_) return;
        record(t.node, std::string("TIMER ") + to_string(t.kind));
        apply(t.node, t.kind == TimerKind::Configuration ? target.on_config_timer(now_)
                                                         : target.on_holding_timer(now_));
    }

    void dispatch(ScriptAction& a) {
        struct Visitor {
            SubnetSim& sim;
            void operator()(const action::SendClnp& s) const {
                auto i = sim.index_of(s.node);
                sim.record(i, "TIMER script send_clnp src=" + s.source.hex() + " dst=" + s.destination.hex());
                sim.apply(i, sim.nodes_[i].node.send_clnp({s.source, s.destination}, sim.now_));
            }
            void operator()(const action::NodeDown& d) const {
                auto i = sim.index_of(d.node);
                sim.record(i, "TIMER script down");
                sim.apply(i, sim.nodes_[i].node.go_down(sim.now_));
            }
            void operator()(const action::NodeUp& u) const {
                auto i = sim.index_of(u.node);
                sim.record(i, "TIMER script up");
                sim.apply(i, sim.nodes_[i].node.come_up(sim.now_));
            }
        };
        std::visit(Visitor{*this}, a);
    }

    static std::optional<PduType> esis_type_of(const Octets& payload) {
        if (payload.size() < 5 || payload[0] != esis_nlpid) return std::nullopt;
        return pdu_type_from_code(payload[4] & 0x1f);
    }

    bool matches(const FrameMatch& m, std::size_t ordinal, std::optional<PduType> type) const {
        if (!m.type) return m.nth == ordinal;
        if (type != m.type) return false;
        auto it = typed_counts_.find(*m.type);
        return it != typed_counts_.end() && it->second == m.nth;
    }

    /// Returns true when the frame is dropped. Mutates `frame` for corruptions
    /// and appends a note for the SEND record.
    bool apply_faults(std::size_t ordinal, Frame& frame, std::string& note) {
        const auto type = esis_type_of(frame.payload);
        if (type) ++typed_counts_[*type];

        for (const auto& rule : faults_.drops) {
            if (matches(rule.match, ordinal, type)) {
                note = " fault=drop";
                return true;
            }
        }
        for (const auto& rule : faults_.corruptions) {
            if (!matches(rule.match, ordinal, type)) continue;
            auto& payload = frame.payload;
            if (payload.empty()) continue;
            std::size_t index = rule.octet_index ? *rule.octet_index
                                                 : static_cast<std::size_t>(rng_() % payload.size());
            if (index >= payload.size()) {
                note += " fault=corrupt-skipped";
                continue;
            }
            const std::uint8_t original = payload[index];
            payload[index] = rule.new_value ? *rule.new_value
                                            : static_cast<std::uint8_t>(original + 1 + rng_() % 255);
            if (rule.fix_checksum && payload.size() >= fixed_part_length && payload[0] == esis_nlpid) {
                const std::size_t li = std::min<std::size_t>(payload[1], payload.size());
                if (li >= fixed_part_length) fill_checksum(std::span(payload).first(li));
            }
            note += " fault=corrupt@" + std::to_string(index) + ":" + to_hex(ByteView(&original, 1)) + "->" +
                    to_hex(ByteView(&payload[index], 1));
            if (rule.fix_checksum) note += "+checksum";
        }
        return false;
    }

    std::vector<NamedNode> nodes_;
    std::priority_queue<Scheduled, std::vector<Scheduled>, Later> queue_;
    std::vector<std::string> log_;
    FaultPlan faults_;
    std::map<PduType, std::size_t> typed_counts_;
    std::mt19937_64 rng_;
    Seconds latency_;
    Seconds now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::size_t transmit_count_ = 0;
    std::size_t delivery_count_ = 0;
};

}  // namespace esis
