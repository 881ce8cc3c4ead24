// esis: craft and decode ES-IS PDUs as hex, and run scenario files against
// the simulated subnetwork.
//
// Exit codes: 0 success / PDU accepted, 1 PDU discarded, 2 usage or input error.

#include "esis/esis.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_discard = 1;
constexpr int exit_error = 2;

int usage_error(const std::string& message) {
    std::cerr << "esis: " << message << "\n";
    return exit_error;
}

std::uint8_t option_code(const std::string& name) {
    if (name == "security") return esis::option::security;
    if (name == "priority") return esis::option::priority;
    if (name == "esct") return esis::option::esct;
    if (name == "address_mask" || name == "addrmask") return esis::option::address_mask;
    if (name == "snpa_mask" || name == "snpamask") return esis::option::snpa_mask;
    std::size_t used = 0;
    unsigned long code = 0;
    try {
        code = std::stoul(name, &used, 10);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != name.size() || code > 255) throw std::invalid_argument("unknown option name '" + name + "'");
    return static_cast<std::uint8_t>(code);
}

struct CraftArgs {
    std::string type;
    std::vector<std::string> addrs;
    std::string snpa;
    std::optional<unsigned> holding;
    std::vector<std::string> opts;
    bool no_checksum = false;
};

int cmd_craft(const CraftArgs& args) {
    using namespace esis;
    try {
        std::vector<OptionParam> options;
        for (const auto& o : args.opts) {
            auto eq = o.find('=');
            if (eq == std::string::npos) return usage_error("--opt takes <code>=<hexvalue>");
            options.push_back({option_code(o.substr(0, eq)), from_hex(o.substr(eq + 1))});
        }
        std::vector<NsapAddress> addrs;
        for (const auto& a : args.addrs) addrs.push_back(NsapAddress::from_hex(a));

        const bool is_ra = args.type == "ra";
        const unsigned holding = args.holding.value_or(is_ra ? 0 : 60);
        if (holding > 0xffff) return usage_error("holding time must fit in 16 bits");
        const auto ht = static_cast<std::uint16_t>(holding);

        Pdu pdu;
        if (args.type == "esh") {
            pdu = make_esh(addrs, ht, options);
        } else if (args.type == "ish" || args.type == "aa") {
            if (addrs.size() != 1) return usage_error(args.type + " carries exactly one --addr (the NET)");
            pdu = args.type == "ish" ? make_ish(addrs[0], ht, options) : make_aa(addrs[0], ht, options);
        } else if (args.type == "rd") {
            if (addrs.empty() || addrs.size() > 2)
                return usage_error("rd takes --addr <destination> and optionally --addr <redirect NET>");
            if (args.snpa.empty()) return usage_error("rd needs --snpa <better SNPA>");
            std::optional<NetAddress> net;
            if (addrs.size() == 2) net = addrs[1];
            pdu = make_rd(addrs[0], SnpaAddress::from_hex(args.snpa), net, ht, options);
        } else {
            if (!addrs.empty()) return usage_error("ra carries no address");
            pdu = make_ra(options);
            pdu.fixed.holding_time = ht;
        }

        Octets bytes = args.no_checksum ? encode(pdu) : encode_with_checksum(pdu);
        std::cout << to_hex(bytes) << "\n";
        return exit_ok;
    } catch (const std::exception& e) {
        return usage_error(e.what());
    }
}

struct DecodeArgs {
    std::string input;
    std::string profile = "lenient";
    std::string afi = "47";
};

int cmd_decode(const DecodeArgs& args) {
    using namespace esis;
    std::string text;
    if (args.input.empty() || args.input == "-") {
        text.assign(std::istreambuf_iterator<char>(std::cin), {});
    } else {
        std::ifstream in(args.input);
        if (!in) return usage_error("cannot open " + args.input);
        text.assign(std::istreambuf_iterator<char>(in), {});
    }

    Octets raw;
    ValidationProfile profile;
    try {
        raw = from_hex(text);
        auto afi = from_hex(args.afi);
        if (afi.size() != 1) return usage_error("--afi is one octet");
        profile = args.profile == "atn" ? ValidationProfile::atn(afi[0]) : ValidationProfile::lenient();
    } catch (const HexError& e) {
        return usage_error(std::string("unreadable hex: ") + e.what());
    }

    for (const auto& row : dissect(raw)) {
        char head[64];
        std::snprintf(head, sizeof head, "%-24s @%-3zu ", row.name.c_str(), row.offset);
        std::cout << head << row.raw;
        if (!row.value.empty()) std::cout << "  " << row.value;
        std::cout << "\n";
    }
    if (raw.size() >= fixed_part_length && raw[1] >= fixed_part_length && raw[1] <= raw.size())
        std::cout << "checksum: " << to_string(verify_checksum(ByteView(raw).first(raw[1]))) << "\n";

    auto result = decode(raw, profile);
    if (result) {
        std::cout << "OK " << to_string(result.pdu().type()) << "\n";
        return exit_ok;
    }
    std::cout << "DISCARD " << to_string(result.reason()) << "\n";
    return exit_discard;
}

struct RunArgs {
    std::string scenario;
    std::optional<esis::Seconds> until;
    bool dump_ribs = false;
    std::string log_path;
};

int cmd_run(const RunArgs& args) {
    using namespace esis;
    std::ifstream in(args.scenario);
    if (!in) return usage_error("cannot open " + args.scenario);

    Scenario scenario;
    try {
        scenario = parse_scenario(in);
    } catch (const ScenarioError& e) {
        return usage_error(args.scenario + ": " + e.what());
    }
    auto horizon = args.until ? args.until : scenario.until;
    if (!horizon) return usage_error("no run horizon: set 'until' in [sim] or pass --until");

    std::string log;
    std::string dumps;
    try {
        auto sim = build_sim(scenario);
        sim.run_until(*horizon);
        for (const auto& line : sim.log()) log += line + "\n";
        if (args.dump_ribs) dumps = sim.dump_ribs();
    } catch (const std::exception& e) {
        return usage_error(e.what());
    }

    if (!args.log_path.empty()) {
        std::ofstream out(args.log_path);
        if (!out) return usage_error("cannot write " + args.log_path);
        out << log;
    } else {
        std::cout << log;
    }
    std::cout << dumps;
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ES-IS PDU crafting, decoding and subnetwork simulation"};
    app.require_subcommand(1);

    CraftArgs craft;
    auto* craft_cmd = app.add_subcommand("craft", "Encode a PDU and print it as hex");
    craft_cmd->add_option("--type", craft.type, "PDU type")
        ->required()
        ->check(CLI::IsMember({"esh", "ish", "rd", "ra", "aa"}));
    craft_cmd->add_option("--addr", craft.addrs, "Address (hex); repeatable");
    craft_cmd->add_option("--snpa", craft.snpa, "Better SNPA for rd (hex, 6 octets)");
    craft_cmd->add_option("--holding", craft.holding, "Holding time in seconds");
    craft_cmd->add_option("--opt", craft.opts, "Option <code|name>=<hexvalue>; repeatable");
    craft_cmd->add_flag("--no-checksum", craft.no_checksum, "Leave the checksum octets as 00 00");

    DecodeArgs dec;
    auto* decode_cmd = app.add_subcommand("decode", "Dissect and validate a hex PDU");
    decode_cmd->add_option("input", dec.input, "File with hex text (default: standard input)");
    decode_cmd->add_option("--profile", dec.profile, "Address validation profile")
        ->check(CLI::IsMember({"lenient", "atn"}));
    decode_cmd->add_option("--afi", dec.afi, "AFI octet for the atn profile (hex)");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario file");
    run_cmd->add_option("scenario", run.scenario, "Scenario file")->required();
    run_cmd->add_option("--until", run.until, "Run horizon (overrides the file)");
    run_cmd->add_flag("--dump-ribs", run.dump_ribs, "Print every node's RIB after the run");
    run_cmd->add_option("--log", run.log_path, "Write the event log here instead of standard output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_error;
    }

    if (*craft_cmd) return cmd_craft(craft);
    if (*decode_cmd) return cmd_decode(dec);
    return cmd_run(run);
}
