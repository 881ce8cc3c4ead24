#include "esis/engine.hpp"
#include "support/generators.hpp"

#include <catch_amalgamated.hpp>

using namespace esis;

namespace {

NsapAddress nsap20(std::uint8_t tag) {
    Octets o(20, tag);
    o[0] = 0x47;
    return NsapAddress(o);
}

const NetAddress IS_NET = nsap20(0x01);
const NetAddress IS2_NET = nsap20(0x02);
const NsapAddress ES1_NSAP = nsap20(0x11);
const NsapAddress ES1_NSAP_B = nsap20(0x12);
const NsapAddress ES2_NSAP = nsap20(0x21);
const SnpaAddress IS_SNPA = SnpaAddress::from_hex("0200000000a1");
const SnpaAddress IS2_SNPA = SnpaAddress::from_hex("0200000000a2");
const SnpaAddress ES1_SNPA = SnpaAddress::from_hex("020000000011");
const SnpaAddress ES2_SNPA = SnpaAddress::from_hex("020000000021");

NodeConfig is_config(Seconds ct = 30) {
    NodeConfig c;
    c.role = Role::IntermediateSystem;
    c.snpa = IS_SNPA;
    c.local_net = IS_NET;
    c.configuration_timer = ct;
    return c;
}

NodeConfig es_config(std::vector<NsapAddress> nsaps = {ES1_NSAP}, SnpaAddress snpa = ES1_SNPA) {
    NodeConfig c;
    c.role = Role::EndSystem;
    c.snpa = snpa;
    c.local_nsaps = std::move(nsaps);
    return c;
}

std::vector<Frame> sent(const Events& events) {
    std::vector<Frame> out;
    for (const auto& e : events)
        if (const auto* s = std::get_if<event::SendFrame>(&e)) out.push_back(s->frame);
    return out;
}

template <class T>
std::vector<T> only(const Events& events) {
    std::vector<T> out;
    for (const auto& e : events)
        if (const auto* x = std::get_if<T>(&e)) out.push_back(*x);
    return out;
}

Pdu decoded(const Frame& f) {
    auto r = decode(f.payload);
    REQUIRE(r.ok());
    return r.pdu();
}

Frame frame_of(const Pdu& pdu, SnpaAddress from, SnpaAddress to) {
    return Frame{to, from, encode_with_checksum(pdu)};
}

}  // namespace

TEST_CASE("report configuration", "[engine]") {
    SECTION("IS sends an ISH to all ESs and rearms") {
        Node is(is_config(10));
        auto ev = is.on_config_timer(100);
        auto frames = sent(ev);
        REQUIRE(frames.size() == 1);
        CHECK(frames[0].destination == snpa::all_es);
        auto pdu = decoded(frames[0]);
        CHECK(pdu.type() == PduType::Ish);
        CHECK(pdu.fixed.holding_time == 20);
        CHECK(std::get<IshBody>(pdu.body).net == IS_NET);
        auto timers = only<event::TimerSet>(ev);
        REQUIRE(timers.size() == 1);
        CHECK(timers[0] == event::TimerSet{110, TimerKind::Configuration});
    }
    SECTION("ES without an address asks for one") {
        Node es(es_config({}));
        auto frames = sent(es.on_config_timer(0));
        REQUIRE(frames.size() == 1);
        CHECK(frames[0].destination == snpa::all_is);
        CHECK(decoded(frames[0]).type() == PduType::Ra);
    }
    SECTION("ES with two NSAPs and no IS known uses both groups") {
        Node es(es_config({ES1_NSAP, ES1_NSAP_B}));
        auto frames = sent(es.on_config_timer(0));
        REQUIRE(frames.size() == 2);
        CHECK(frames[0].destination == snpa::all_is);
        CHECK(frames[1].destination == snpa::all_es);
        for (const auto& f : frames) {
            auto pdu = decoded(f);
            CHECK(pdu.type() == PduType::Esh);
            CHECK(std::get<EshBody>(pdu.body).source_addresses.size() == 2);
            CHECK(pdu.fixed.holding_time == 60);
        }
    }
    SECTION("ES with a live IS sends to all ISs only") {
        Node es(es_config());
        es.handle_frame(frame_of(make_ish(IS_NET, 60), IS_SNPA, snpa::all_es), 0);
        auto frames = sent(es.on_config_timer(5));
        REQUIRE(frames.size() == 1);
        CHECK(frames[0].destination == snpa::all_is);
    }
    SECTION("first hello timing") {
        Node es(es_config());
        Node is(is_config(50));
        CHECK(es.start(0) == Events{event::TimerSet{0, TimerKind::Configuration}});
        CHECK(is.start(0) == Events{event::TimerSet{50, TimerKind::Configuration}});
    }
}

TEST_CASE("handle_frame dispatch", "[engine]") {
    Node is(is_config());
    SECTION("new ES gets a unicast ISH") {
        auto ev = is.handle_frame(frame_of(make_esh({ES1_NSAP}, 60), ES1_SNPA, snpa::all_is), 0);
        CHECK(only<event::RibChanged>(ev).size() == 1);
        auto frames = sent(ev);
        REQUIRE(frames.size() == 1);
        CHECK(frames[0].destination == ES1_SNPA);
        CHECK(decoded(frames[0]).type() == PduType::Ish);
    }
    SECTION("unknown NLPID is ignored") {
        Node es(es_config());
        CHECK(es.handle_frame(Frame{ES1_SNPA, ES2_SNPA, {0x55, 1, 2, 3}}, 0).empty());
    }
    SECTION("corrupted checksum is discarded") {
        auto f = frame_of(make_esh({ES1_NSAP}, 60), ES1_SNPA, snpa::all_is);
        f.payload[15] ^= 0x40;
        auto ev = is.handle_frame(f, 0);
        REQUIRE(ev.size() == 1);
        CHECK(std::get<event::Discarded>(ev[0]).reason == DiscardReason{DiscardKind::ChecksumError});
        CHECK(is.rib().num_of_entry() == 0);
    }
    SECTION("own frames are ignored") {
        CHECK(is.handle_frame(frame_of(make_ish(IS_NET, 60), IS_SNPA, snpa::all_es), 0).empty());
    }
}

TEST_CASE("record configuration at the IS", "[engine]") {
    Node is(is_config());
    auto first = is.handle_esh(make_esh({ES1_NSAP}, 60), ES1_SNPA, 0);
    CHECK(sent(first).size() == 1);

    SECTION("a repeat hello replaces silently") {
        auto again = is.handle_esh(make_esh({ES1_NSAP}, 60), ES1_SNPA, 10);
        CHECK(sent(again).empty());
        auto changes = only<event::RibChanged>(again);
        REQUIRE(changes.size() == 1);
        CHECK(changes[0].change == RibChange::Replaced);
        CHECK(is.rib().lookup(ES1_NSAP, 11)->expiry == 70);
    }
    SECTION("two new addresses give one notification") {
        auto ev = is.handle_esh(make_esh({ES2_NSAP, nsap20(0x22)}, 60), ES2_SNPA, 0);
        CHECK(is.rib().num_of_entry() == 3);
        CHECK(sent(ev).size() == 1);
    }
}

TEST_CASE("record configuration at the ES", "[engine]") {
    Node es(es_config());
    auto ev = es.handle_ish(make_ish(IS_NET, 60), IS_SNPA, 0);
    auto frames = sent(ev);
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].destination == IS_SNPA);
    CHECK(decoded(frames[0]).type() == PduType::Esh);
    CHECK(es.rib().lookup(NeighborKind::IsNeighbor, IS_NET, 1));

    SECTION("repeat ISH does not reply") {
        CHECK(sent(es.handle_ish(make_ish(IS_NET, 60), IS_SNPA, 5)).empty());
    }
    SECTION("ESCT adoption") {
        es.start(0);
        auto adopt = es.handle_ish(make_ish(IS_NET, 60, {make_esct_option(30)}), IS_SNPA, 5);
        CHECK(es.configuration_timer() == 30);
        CHECK(only<event::TimerSet>(adopt).empty());  // already 30

        auto change = es.handle_ish(make_ish(IS_NET, 60, {make_esct_option(12)}), IS_SNPA, 7);
        CHECK(es.configuration_timer() == 12);
        CHECK(only<event::TimerSet>(change) == std::vector{event::TimerSet{19, TimerKind::Configuration}});
        CHECK(decoded(sent(es.on_config_timer(19)).at(0)).fixed.holding_time == 24);
    }
}

TEST_CASE("address assignment", "[engine]") {
    Node is(is_config());
    auto ev = is.handle_ra(make_ra(), ES1_SNPA, 0);
    auto frames = sent(ev);
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].destination == ES1_SNPA);
    auto aa = decoded(frames[0]);
    REQUIRE(aa.type() == PduType::Aa);
    const auto net = std::get<AaBody>(aa.body).net;
    CHECK(net.size() == 20);
    CHECK_FALSE(validate_nsap(net.view(), ValidationProfile::lenient()));

    auto again = decoded(sent(is.handle_ra(make_ra(), ES1_SNPA, 5)).at(0));
    CHECK(std::get<AaBody>(again.body).net == net);

    SECTION("ES records the latest AA") {
        Node es(es_config({}));
        CHECK(es.handle_aa(aa, 1) == Events{event::AddressAssigned{net}});
        auto n2 = is.assign_temporary_net(ES2_SNPA);
        es.handle_aa(make_aa(n2, 60), 2);
        CHECK(es.acquired_net() == n2);
        auto hello = decoded(sent(es.on_config_timer(3)).at(0));
        CHECK(hello.type() == PduType::Esh);
        CHECK(std::get<EshBody>(hello.body).source_addresses == std::vector{n2});
    }
}

TEST_CASE("assign_temporary_net layout", "[engine]") {
    Node is(is_config());
    auto a = is.assign_temporary_net(ES1_SNPA);
    CHECK(a == is.assign_temporary_net(ES1_SNPA));
    CHECK(a != is.assign_temporary_net(ES2_SNPA));
    REQUIRE(a.size() == 20);
    CHECK(std::equal(a.octets.begin(), a.octets.begin() + 13, IS_NET.octets.begin()));
    CHECK(std::equal(a.octets.begin() + 13, a.octets.begin() + 19, ES1_SNPA.octets.begin()));
    CHECK(a.octets[19] == 0);
}

TEST_CASE("PDUs meant for the other role", "[engine]") {
    const auto mismatch = DiscardReason::protocol(ProtocolErrorDetail::RoleMismatch);
    Node es(es_config());
    Node is(is_config());
    CHECK(std::get<event::Discarded>(es.handle_ra(make_ra(), ES2_SNPA, 0).at(0)).reason == mismatch);
    CHECK(es.handle_esh(make_esh({ES2_NSAP}, 60), ES2_SNPA, 0).empty());
    CHECK(es.rib().num_of_entry() == 0);
    CHECK(std::get<event::Discarded>(is.handle_aa(make_aa(ES1_NSAP, 60), 0).at(0)).reason == mismatch);
    CHECK(std::get<event::Discarded>(is.handle_rd(make_rd(ES1_NSAP, ES1_SNPA, std::nullopt, 60), 0).at(0)).reason ==
          mismatch);
    CHECK(std::get<event::Discarded>(is.handle_ish(make_ish(IS2_NET, 60), IS2_SNPA, 0).at(0)).reason == mismatch);
}

TEST_CASE("request redirect at the IS", "[engine]") {
    auto cfg = is_config();
    cfg.forwarding_table = {
        {from_hex("4702"), IS2_NET, IS2_SNPA},
        {from_hex("47020202"), nsap20(0x03), SnpaAddress::from_hex("0200000000a3")},
    };
    Node is(cfg);
    is.handle_esh(make_esh({ES1_NSAP}, 60), ES1_SNPA, 0);
    is.handle_esh(make_esh({ES2_NSAP}, 60), ES2_SNPA, 0);

    SECTION("destination on the same subnetwork") {
        auto ev = is.handle_clnp_at_is({ES1_NSAP, ES2_NSAP}, ES1_SNPA, 5);
        auto frames = sent(ev);
        REQUIRE(frames.size() == 3);
        CHECK(frames[0].destination == ES1_SNPA);
        auto rd = decoded(frames[0]);
        const auto& body = std::get<RdBody>(rd.body);
        CHECK(body.destination == ES2_NSAP);
        CHECK(body.better_snpa == ES2_SNPA);
        CHECK_FALSE(body.redirect_net);
        CHECK(rd.fixed.holding_time == 60);
        // The reverse path goes to the destination ES.
        CHECK(frames[1].destination == ES2_SNPA);
        CHECK(std::get<RdBody>(decoded(frames[1]).body).better_snpa == ES1_SNPA);
        // And the data itself is forwarded.
        CHECK(frames[2].destination == ES2_SNPA);
        CHECK(frames[2].payload[0] == clnp_nlpid);
        CHECK(only<event::RedirectIssued>(ev).size() == 2);
    }
    SECTION("forwarding table, longest prefix") {
        auto far = nsap20(0x02);
        auto frames = sent(is.handle_clnp_at_is({ES1_NSAP, far}, ES1_SNPA, 5));
        REQUIRE(frames.size() == 2);
        auto rd = decoded(frames[0]);
        const auto& body = std::get<RdBody>(rd.body);
        CHECK(body.better_snpa == SnpaAddress::from_hex("0200000000a3"));
        REQUIRE(body.redirect_net);
        CHECK(*body.redirect_net == nsap20(0x03));
    }
    SECTION("shorter prefix when the longer one misses") {
        Octets dest(20, 0x09);
        dest[0] = 0x47;
        dest[1] = 0x02;
        auto rd = decoded(sent(is.handle_clnp_at_is({ES1_NSAP, NsapAddress(dest)}, ES1_SNPA, 5)).at(0));
        CHECK(*std::get<RdBody>(rd.body).redirect_net == IS2_NET);
    }
    SECTION("nothing known") {
        CHECK(is.handle_clnp_at_is({ES1_NSAP, nsap20(0x77)}, ES1_SNPA, 5).empty());
    }
}

TEST_CASE("redirect cache at the ES", "[engine]") {
    Node es(es_config());
    auto rd = make_rd(ES2_NSAP, ES2_SNPA, std::nullopt, 60);
    auto ev = es.handle_rd(rd, 10);
    REQUIRE(only<event::RibChanged>(ev).size() == 1);
    CHECK(es.rib().next_hop(ES2_NSAP, 11) == NextHop::direct(ES2_SNPA));

    SECTION("replacement") {
        auto ev2 = es.handle_rd(make_rd(ES2_NSAP, IS2_SNPA, std::nullopt, 60), 12);
        CHECK(only<event::RibChanged>(ev2).at(0).change == RibChange::Replaced);
        CHECK(es.rib().next_hop(ES2_NSAP, 13) == NextHop::direct(IS2_SNPA));
    }
    SECTION("refresh on reverse traffic over the same path") {
        auto r = es.handle_clnp_at_es({ES2_NSAP, ES1_NSAP}, ES2_SNPA, 40);
        CHECK(only<event::RibChanged>(r).at(0).change == RibChange::Refreshed);
        CHECK(es.rib().find_redirect(ES2_NSAP)->expiry == 100);
    }
    SECTION("no refresh over another path") {
        CHECK(es.handle_clnp_at_es({ES2_NSAP, ES1_NSAP}, IS_SNPA, 40).empty());
        CHECK(es.rib().find_redirect(ES2_NSAP)->expiry == 70);
    }
    SECTION("no entry, no events") {
        CHECK(es.handle_clnp_at_es({nsap20(0x55), ES1_NSAP}, ES2_SNPA, 40).empty());
    }
    SECTION("send_clnp follows the redirect") {
        auto frames = sent(es.send_clnp({ES1_NSAP, ES2_NSAP}, 20));
        REQUIRE(frames.size() == 1);
        CHECK(frames[0].destination == ES2_SNPA);
    }
}

TEST_CASE("holding timer flushes and rearms", "[engine]") {
    Node is(is_config());
    auto ev = is.handle_esh(make_esh({ES1_NSAP}, 20), ES1_SNPA, 31);
    CHECK(is.holding_due() == 51);
    CHECK(only<event::TimerSet>(ev) == std::vector{event::TimerSet{51, TimerKind::Holding}});
    CHECK(is.on_holding_timer(50).empty());  // stale fire
    auto fired = is.on_holding_timer(51);
    auto flushed = only<event::RibChanged>(fired);
    REQUIRE(flushed.size() == 1);
    CHECK(flushed[0].change == RibChange::Flushed);
    CHECK(is.rib().num_of_entry() == 0);
    CHECK_FALSE(is.holding_due());
}

TEST_CASE("CLNP stub wire format", "[engine]") {
    MinimalClnpPdu p{NsapAddress::from_hex("4711"), NsapAddress::from_hex("472233")};
    const auto wire = encode_clnp(p);
    CHECK(to_hex(wire) == "810102471103472233");
    CHECK(std::get<MinimalClnpPdu>(decode_clnp(wire, ValidationProfile::lenient())) == p);
    CHECK(std::get<ProtocolErrorDetail>(decode_clnp(ByteView(wire).first(6), ValidationProfile::lenient())) ==
          ProtocolErrorDetail::TruncatedPdu);
    CHECK(std::get<ProtocolErrorDetail>(decode_clnp(wire, ValidationProfile::atn())) ==
          ProtocolErrorDetail::BadAddressLength);
}

TEST_CASE("NodeConfig validation", "[engine]") {
    auto c = is_config();
    c.local_net.reset();
    CHECK_THROWS_AS(Node(c), std::invalid_argument);
    c = is_config();
    c.holding_multiplier = 1;
    CHECK_THROWS_AS(Node(c), std::invalid_argument);
    c = is_config(40000);
    CHECK_THROWS_AS(Node(c), std::invalid_argument);
    auto e = es_config();
    e.esct = 10;
    CHECK_THROWS_AS(Node(e), std::invalid_argument);
    e = es_config();
    e.snpa = snpa::all_es;
    CHECK_THROWS_AS(Node(e), std::invalid_argument);
}

namespace {

// Random stimulus for the engine properties: a mix of timer fires and frames
// from a handful of peers, some of them deliberately corrupted.
struct Stimulus {
    enum Kind { Config, Holding, Frame_ } kind;
    Seconds at;
    Frame frame;
};

std::vector<Stimulus> random_stimuli(gen::Rng& rng, bool for_is) {
    std::vector<Stimulus> out;
    Seconds t = 0;
    const SnpaAddress peers[] = {ES1_SNPA, ES2_SNPA, IS2_SNPA};
    const NsapAddress addrs[] = {ES1_NSAP, ES1_NSAP_B, ES2_NSAP, nsap20(0x31)};
    for (int i = 0; i < 200; ++i) {
        t += gen::uniform(rng, 0, 7);
        const auto kind = gen::uniform(rng, 0, 5);
        if (kind == 0) {
            out.push_back({Stimulus::Config, t, {}});
            continue;
        }
        if (kind == 1) {
            out.push_back({Stimulus::Holding, t, {}});
            continue;
        }
        const auto from = peers[gen::uniform(rng, 0, 2)];
        const auto& a = addrs[gen::uniform(rng, 0, 3)];
        const auto ht = static_cast<std::uint16_t>(gen::uniform(rng, 1, 40));
        Octets payload;
        switch (gen::uniform(rng, 0, 6)) {
            case 0: payload = encode_with_checksum(make_esh({a}, ht)); break;
            case 1: payload = encode_with_checksum(make_ish(for_is ? IS2_NET : a, ht)); break;
            case 2: payload = encode_with_checksum(make_rd(a, from, std::nullopt, ht)); break;
            case 3: payload = encode_with_checksum(make_ra()); break;
            case 4: payload = encode_with_checksum(make_aa(a, ht)); break;
            case 5: payload = encode_clnp({a, addrs[gen::uniform(rng, 0, 3)]}); break;
            default: payload = gen::octets(rng, gen::uniform(rng, 1, 30)); break;
        }
        if (gen::uniform(rng, 0, 9) == 0 && payload.size() > 9) payload[gen::uniform(rng, 9, payload.size() - 1)] ^= 0x5a;
        out.push_back({Stimulus::Frame_, t, Frame{for_is ? IS_SNPA : ES1_SNPA, from, payload}});
    }
    return out;
}

Events drive(Node& node, const std::vector<Stimulus>& stimuli) {
    Events all = node.start(0);
    for (const auto& s : stimuli) {
        Events ev;
        switch (s.kind) {
            case Stimulus::Config: ev = node.on_config_timer(s.at); break;
            case Stimulus::Holding:
                if (node.holding_due()) ev = node.on_holding_timer(*node.holding_due());
                break;
            case Stimulus::Frame_: ev = node.handle_frame(s.frame, s.at); break;
        }
        all.insert(all.end(), ev.begin(), ev.end());
    }
    return all;
}

}  // namespace

TEST_CASE("engine properties over random stimuli", "[engine][property]") {
    gen::Rng rng(808);
    for (int run = 0; run < 60; ++run) {
        const bool for_is = run % 2 == 0;
        const auto stimuli = random_stimuli(rng, for_is);
        auto cfg = for_is ? is_config(10) : es_config();
        if (for_is) cfg.forwarding_table = {{from_hex("47"), IS2_NET, IS2_SNPA}};

        Node a(cfg);
        Node b(cfg);
        const auto ev_a = drive(a, stimuli);
        REQUIRE(ev_a == drive(b, stimuli));

        for (const auto& e : a.rib().entries()) REQUIRE(e.snpa != cfg.snpa);

        for (const auto& f : sent(ev_a)) {
            REQUIRE(f.source == cfg.snpa);
            if (f.payload[0] != esis_nlpid) continue;
            REQUIRE(verify_checksum(f.payload) == ChecksumVerdict::Valid);
            auto r = decode(f.payload);
            REQUIRE(r.ok());
            const auto type = r.pdu().type();
            if (for_is) {
                REQUIRE(type != PduType::Esh);
                REQUIRE(type != PduType::Ra);
            } else {
                REQUIRE(type != PduType::Ish);
                REQUIRE(type != PduType::Rd);
                REQUIRE(type != PduType::Aa);
            }
            if (type == PduType::Esh || type == PduType::Ish)
                REQUIRE(r.pdu().fixed.holding_time == a.holding_time());
        }
    }
}

TEST_CASE("notification discipline", "[engine][property]") {
    gen::Rng rng(31337);
    for (int run = 0; run < 30; ++run) {
        Node is(is_config(10));
        std::size_t inserting_eshs = 0;
        std::size_t unicast_ishs = 0;
        Seconds t = 0;
        for (int i = 0; i < 300; ++i) {
            t += gen::uniform(rng, 0, 6);
            if (gen::uniform(rng, 0, 4) == 0) {
                if (is.holding_due()) is.on_holding_timer(*is.holding_due());
                continue;
            }
            std::vector<NsapAddress> sources;
            for (unsigned k = 0, n = gen::uniform(rng, 1, 3); k < n; ++k) sources.push_back(nsap20(gen::uniform(rng, 0x40, 0x48)));
            const auto from = gen::uniform(rng, 0, 1) ? ES1_SNPA : ES2_SNPA;
            auto ev = is.handle_esh(make_esh(sources, static_cast<std::uint16_t>(gen::uniform(rng, 1, 25))), from, t);
            const auto changes = only<event::RibChanged>(ev);
            if (std::any_of(changes.begin(), changes.end(),
                            [](const auto& c) { return c.change == RibChange::Inserted; }))
                ++inserting_eshs;
            for (const auto& f : sent(ev))
                if (f.destination == from && decoded(f).type() == PduType::Ish) ++unicast_ishs;
        }
        REQUIRE(inserting_eshs == unicast_ishs);
    }
}
