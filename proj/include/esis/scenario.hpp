#pragma once

// Scenario files: a strict INI-like format.
//
//   # comment
//   [sim]
//   seed = 7
//   latency = 1
//   until = 60
//
//   [node ES1]
//   role = es
//   snpa = 020000000001
//   nsap = 47...           (repeatable; none at all makes the ES send RA)
//   ct = 10
//   multiplier = 2
//   profile = lenient | atn
//   afi = 47
//   first_hello = 0
//   security = <hex>       (hello option)
//   priority = <0..14>     (hello option)
//
//   [node IS1]
//   role = is
//   net = 47...
//   esct = 30
//   route = <prefix-hex> <net-hex> <snpa-hex>   (repeatable)
//
//   [faults]
//   drop = nth=<n> [type=esh|ish|rd|ra|aa]
//   corrupt = nth=<n> [type=...] [octet=<i>|random] [value=<hex>|random] [fix_checksum]
//
//   [script]
//   send_clnp = <t> <node> <source-nsap> <destination-nsap>
//   down = <t> <node>
//   up = <t> <node>

#include "esis/engine.hpp"
#include "esis/subnet_sim.hpp"

#include <charconv>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace esis {

class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct ScenarioNode {
    std::string name;
    NodeConfig config;
    std::size_t line = 0;
};

struct ScheduledAction {
    Seconds at = 0;
    ScriptAction action;
};

struct Scenario {
    std::uint64_t seed = 0;
    Seconds latency = 1;
    std::optional<Seconds> until;
    std::vector<ScenarioNode> nodes;
    FaultPlan faults;
    std::vector<ScheduledAction> script;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

class ScenarioParser {
public:
    Scenario parse(std::istream& in) {
        std::string raw;
        while (std::getline(in, raw)) {
            ++line_;
            auto text = raw;
            if (auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
            auto line = trim(text);
            if (line.empty()) continue;
            if (line.front() == '[') {
                open_section(line);
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string_view::npos) fail("expected 'key = value'");
            auto key = std::string(trim(line.substr(0, eq)));
            auto value = std::string(trim(line.substr(eq + 1)));
            if (key.empty()) fail("empty key");
            handle(key, value);
        }
        finish();
        return std::move(scenario_);
    }

private:
    enum class Section { None, Sim, Node, Faults, Script };

    [[noreturn]] void fail(const std::string& message) const { throw ScenarioError(line_, message); }

    void open_section(std::string_view line) {
        if (line.back() != ']') fail("unterminated section header");
        auto words = split_words(line.substr(1, line.size() - 2));
        if (words.empty()) fail("empty section header");
        if (words[0] == "sim" && words.size() == 1) {
            section_ = Section::Sim;
        } else if (words[0] == "faults" && words.size() == 1) {
            section_ = Section::Faults;
        } else if (words[0] == "script" && words.size() == 1) {
            section_ = Section::Script;
        } else if (words[0] == "node" && words.size() == 2) {
            for (const auto& n : scenario_.nodes)
                if (n.name == words[1]) fail("duplicate node name '" + words[1] + "'");
            section_ = Section::Node;
            scenario_.nodes.push_back({words[1], NodeConfig{}, line_});
            required_.push_back({});
        } else {
            fail("unknown section '" + std::string(line) + "'");
        }
    }

    template <typename T>
    T number(const std::string& value, const char* what) const {
        T out{};
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
        if (ec != std::errc() || ptr != value.data() + value.size())
            fail(std::string("bad ") + what + " '" + value + "'");
        return out;
    }

    Octets hex(const std::string& value, const char* what) const {
        try {
            return from_hex(value);
        } catch (const HexError& e) {
            fail(std::string("bad ") + what + ": " + e.what());
        }
    }

    NsapAddress address(const std::string& value, const char* what) const {
        NsapAddress a(hex(value, what));
        if (!a.well_formed()) fail(std::string(what) + " must be 1..20 octets");
        return a;
    }

    SnpaAddress snpa_value(const std::string& value) const {
        auto s = SnpaAddress::from_bytes(hex(value, "snpa"));
        if (!s) fail("an SNPA is exactly 6 octets");
        return *s;
    }

    void handle(const std::string& key, const std::string& value) {
        switch (section_) {
            case Section::None: fail("key outside of any section");
            case Section::Sim: return sim_key(key, value);
            case Section::Node: return node_key(key, value);
            case Section::Faults: return fault_key(key, value);
            case Section::Script: return script_key(key, value);
        }
    }

    void sim_key(const std::string& key, const std::string& value) {
        if (key == "seed")
            scenario_.seed = number<std::uint64_t>(value, "seed");
        else if (key == "latency") {
            scenario_.latency = number<Seconds>(value, "latency");
            if (scenario_.latency < 0) fail("latency must be >= 0");
        }
        else if (key == "until")
            scenario_.until = number<Seconds>(value, "until");
        else
            fail("unknown key '" + key + "' in [sim]");
    }

    void node_key(const std::string& key, const std::string& value) {
        auto& cfg = scenario_.nodes.back().config;
        if (key == "role") {
            if (value == "es")
                cfg.role = Role::EndSystem;
            else if (value == "is")
                cfg.role = Role::IntermediateSystem;
            else
                fail("role must be 'es' or 'is'");
            required_.back().role = true;
        } else if (key == "snpa") {
            cfg.snpa = snpa_value(value);
            required_.back().snpa = true;
        } else if (key == "nsap") {
            cfg.local_nsaps.push_back(address(value, "nsap"));
        } else if (key == "net") {
            cfg.local_net = address(value, "net");
        } else if (key == "ct") {
            cfg.configuration_timer = number<Seconds>(value, "ct");
        } else if (key == "multiplier") {
            cfg.holding_multiplier = number<unsigned>(value, "multiplier");
        } else if (key == "profile") {
            if (value == "lenient")
                cfg.validation_profile.kind = ValidationProfile::Kind::Lenient;
            else if (value == "atn")
                cfg.validation_profile.kind = ValidationProfile::Kind::Atn;
            else
                fail("profile must be 'lenient' or 'atn'");
        } else if (key == "afi") {
            auto bytes = hex(value, "afi");
            if (bytes.size() != 1) fail("afi is one octet");
            cfg.validation_profile.afi = bytes[0];
        } else if (key == "first_hello") {
            cfg.first_hello = number<Seconds>(value, "first_hello");
        } else if (key == "esct") {
            cfg.esct = number<std::uint16_t>(value, "esct");
        } else if (key == "security") {
            cfg.hello_options.push_back({option::security, hex(value, "security")});
        } else if (key == "priority") {
            cfg.hello_options.push_back({option::priority, {number<std::uint8_t>(value, "priority")}});
        } else if (key == "route") {
            auto words = split_words(value);
            if (words.size() != 3) fail("route = <prefix-hex> <net-hex> <snpa-hex>");
            cfg.forwarding_table.push_back(
                {hex(words[0], "route prefix"), address(words[1], "route net"), snpa_value(words[2])});
        } else {
            fail("unknown key '" + key + "' in [node]");
        }
    }

    std::optional<PduType> type_name(const std::string& v) const {
        if (v == "esh") return PduType::Esh;
        if (v == "ish") return PduType::Ish;
        if (v == "rd") return PduType::Rd;
        if (v == "ra") return PduType::Ra;
        if (v == "aa") return PduType::Aa;
        fail("unknown PDU type '" + v + "'");
    }

    void fault_key(const std::string& key, const std::string& value) {
        if (key != "drop" && key != "corrupt") fail("unknown key '" + key + "' in [faults]");
        FrameMatch match;
        bool seen_nth = false;
        CorruptRule corrupt;
        for (const auto& word : split_words(value)) {
            auto eq = word.find('=');
            auto name = word.substr(0, eq);
            auto arg = eq == std::string::npos ? std::string() : word.substr(eq + 1);
            if (name == "nth") {
                match.nth = number<std::size_t>(arg, "nth");
                if (match.nth == 0) fail("nth counts from 1");
                seen_nth = true;
            } else if (name == "type") {
                match.type = type_name(arg);
            } else if (key == "corrupt" && name == "octet") {
                if (arg != "random") corrupt.octet_index = number<std::size_t>(arg, "octet");
            } else if (key == "corrupt" && name == "value") {
                if (arg != "random") {
                    auto bytes = hex(arg, "value");
                    if (bytes.size() != 1) fail("value is one octet");
                    corrupt.new_value = bytes[0];
                }
            } else if (key == "corrupt" && word == "fix_checksum") {
                corrupt.fix_checksum = true;
            } else {
                fail("unknown fault argument '" + word + "'");
            }
        }
        if (!seen_nth) fail("fault rule needs nth=<n>");
        if (key == "drop") {
            scenario_.faults.drops.push_back({match});
        } else {
            corrupt.match = match;
            scenario_.faults.corruptions.push_back(corrupt);
        }
    }

    void script_key(const std::string& key, const std::string& value) {
        auto words = split_words(value);
        if (words.size() < 2) fail("script entries start with '<time> <node>'");
        const Seconds at = number<Seconds>(words[0], "time");
        const std::string& node = words[1];
        ScriptAction a;
        if (key == "send_clnp") {
            if (words.size() != 4) fail("send_clnp = <t> <node> <source-nsap> <destination-nsap>");
            a = action::SendClnp{node, address(words[2], "source nsap"), address(words[3], "destination nsap")};
        } else if (key == "down" || key == "up") {
            if (words.size() != 2) fail(key + " = <t> <node>");
            if (key == "down")
                a = action::NodeDown{node};
            else
                a = action::NodeUp{node};
        } else {
            fail("unknown key '" + key + "' in [script]");
        }
        script_lines_.push_back(line_);
        scenario_.script.push_back({at, std::move(a)});
    }

    void finish() {
        for (std::size_t i = 0; i < scenario_.nodes.size(); ++i) {
            const auto& n = scenario_.nodes[i];
            line_ = n.line;
            if (!required_[i].role) fail("node " + n.name + " has no role");
            if (!required_[i].snpa) fail("node " + n.name + " has no snpa");
            try {
                n.config.validate();
            } catch (const std::invalid_argument& e) {
                fail("node " + n.name + ": " + e.what());
            }
            for (std::size_t j = 0; j < i; ++j)
                if (scenario_.nodes[j].config.snpa == n.config.snpa)
                    fail("node " + n.name + " shares its SNPA with " + scenario_.nodes[j].name);
        }
        for (std::size_t i = 0; i < scenario_.script.size(); ++i) {
            line_ = script_lines_[i];
            const auto& entry = scenario_.script[i];
            const std::string& name = std::visit([](const auto& a) -> const std::string& { return a.node; },
                                                 entry.action);
            const ScenarioNode* target = nullptr;
            for (const auto& n : scenario_.nodes)
                if (n.name == name) target = &n;
            if (!target) fail("unknown node '" + name + "'");
            if (entry.at < 0) fail("script time must be >= 0");
            if (std::holds_alternative<action::SendClnp>(entry.action) &&
                target->config.role != Role::EndSystem)
                fail("send_clnp originates at an end system");
        }
    }

    struct RequiredKeys {
        bool role = false;
        bool snpa = false;
    };

    Scenario scenario_;
    Section section_ = Section::None;
    std::size_t line_ = 0;
    std::vector<RequiredKeys> required_;
    std::vector<std::size_t> script_lines_;
};

}  // namespace detail

inline Scenario parse_scenario(std::istream& in) { return detail::ScenarioParser{}.parse(in); }

inline Scenario parse_scenario(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

/// Builds a simulator with every node, the fault plan and the script loaded.
inline SubnetSim build_sim(const Scenario& s) {
    SubnetSim sim(s.seed, s.latency);
    for (const auto& n : s.nodes) sim.add_node(n.name, n.config);
    sim.set_fault_plan(s.faults);
    for (const auto& a : s.script) sim.inject(a.action, a.at);
    return sim;
}

}  // namespace esis
