#include <doctest.h>

#include <algorithm>
#include <array>
#include <random>
#include <set>

#include "roamsim/policy/engine.hpp"
#include "roamsim/tunnel/frame.hpp"
#include "roamsim/tunnel/session.hpp"

using namespace roamsim;
using namespace roamsim::tunnel;

namespace {

// Independent big-endian assembler for the wire layout.
std::vector<std::uint8_t> assemble(const TunnelFrame& f) {
    std::vector<std::uint8_t> b{0xC3, 0x1A, 0x01};
    std::uint8_t flags = 0;
    if (f.direction == FrameDirection::Dl) flags |= 1;
    if (f.rat == Rat::Cbrs) flags |= 1 << 1;
    if (f.duplicate) flags |= 1 << 3;
    if (f.probe) flags |= 1 << 4;
    b.push_back(flags);
    for (int i = 7; i >= 0; --i) b.push_back(static_cast<std::uint8_t>(f.session_id >> (8 * i)));
    for (int i = 3; i >= 0; --i) b.push_back(static_cast<std::uint8_t>(f.seq >> (8 * i)));
    for (int i = 7; i >= 0; --i) b.push_back(static_cast<std::uint8_t>(f.timestamp_ms >> (8 * i)));
    const auto len = static_cast<std::uint16_t>(f.payload.size());
    b.push_back(static_cast<std::uint8_t>(len >> 8));
    b.push_back(static_cast<std::uint8_t>(len));
    b.insert(b.end(), f.payload.begin(), f.payload.end());
    return b;
}

TunnelFrame random_frame(std::mt19937_64& g) {
    TunnelFrame f;
    f.direction = g() & 1 ? FrameDirection::Dl : FrameDirection::Ul;
    f.rat = g() & 1 ? Rat::Cbrs : Rat::Wifi;
    f.probe = (g() % 5) == 0;
    f.duplicate = !f.probe && (g() & 1);
    f.session_id = g();
    f.seq = static_cast<std::uint32_t>(g());
    f.timestamp_ms = g();
    if (!f.probe) {
        f.payload.resize(g() % 300);
        for (auto& x : f.payload) x = static_cast<std::uint8_t>(g());
    }
    return f;
}

TunnelFrame data(Rat rat, std::uint32_t seq, FrameDirection dir = FrameDirection::Ul, std::uint64_t session = 7) {
    TunnelFrame f;
    f.rat = rat;
    f.seq = seq;
    f.direction = dir;
    f.session_id = session;
    f.payload = {1, 2, 3};
    return f;
}

// Probe both attached paths every 0.25 s until t_end, with fixed RTTs.
void probe_until(SessionState& s, const TunnelConfig& cfg, double from, double to, std::array<bool, 2> reachable,
                 double step = 0.01) {
    for (double t = from; t <= to + 1e-9; t += step) {
        advance_probes(s, cfg, t, [&](Rat r) {
            const bool ok = reachable[r == Rat::Wifi ? 0 : 1];
            return ProbeResult{ok, r == Rat::Wifi ? 20.0 : 40.0};
        });
    }
}

}  // namespace

TEST_CASE("golden 26-byte vector") {
    TunnelFrame f;
    f.session_id = 1;
    const std::vector<std::uint8_t> golden{0xC3, 0x1A, 0x01, 0x00, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0,
                                           0,    0,    0,    0,    0, 0, 0, 0, 0, 0};
    const auto wire = encode_frame(f);
    CHECK(wire.size() == kHeaderSize);
    CHECK(wire == golden);
    CHECK(decode_frame(golden) == f);
}

TEST_CASE("codec agrees with an independent assembler and round-trips") {
    std::mt19937_64 g(2024);
    std::size_t mismatches = 0;
    for (int i = 0; i < 100000; ++i) {
        const TunnelFrame f = random_frame(g);
        const auto wire = encode_frame(f);
        if (wire.size() != kHeaderSize + f.payload.size() || wire != assemble(f) || decode_frame(wire) != f)
            ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("decode errors name the failing field") {
    auto wire = encode_frame(data(Rat::Wifi, 3));
    auto field_of = [](std::vector<std::uint8_t> b) {
        try {
            decode_frame(b);
        } catch (const FrameError& e) {
            return e.field();
        }
        return std::string("none");
    };
    CHECK(field_of(std::vector<std::uint8_t>(wire.begin(), wire.begin() + 25)) == "header");
    try {
        decode_frame(std::span(wire.data(), 25));
        FAIL("expected error");
    } catch (const FrameError& e) {
        CHECK(std::string(e.what()) == "short header");
    }
    auto bad = wire;
    bad[1] = 0x1B;
    CHECK(field_of(bad) == "magic");
    bad = wire;
    bad[2] = 2;
    CHECK(field_of(bad) == "version");
    bad = wire;
    bad.pop_back();
    CHECK(field_of(bad) == "payload_len");
    bad = wire;
    bad.push_back(0);
    CHECK(field_of(bad) == "payload_len");
    bad = wire;
    bad[3] |= 0x80;
    CHECK(field_of(bad) == "flags");
}

TEST_CASE("receive window: duplicates, stale floor, random streams") {
    RecvWindow w(1024);
    CHECK(w.offer(5) == DedupResult::Accept);
    CHECK(w.offer(5) == DedupResult::Duplicate);

    RecvWindow w2(1024);
    for (std::uint32_t s = 1; s <= 2000; ++s) REQUIRE(w2.offer(s) == DedupResult::Accept);
    CHECK(w2.offer(1) == DedupResult::Stale);
    CHECK(w2.offer(977) == DedupResult::Duplicate);
    CHECK(w2.offer(976) == DedupResult::Stale);

    std::mt19937_64 g(9);
    for (int trial = 0; trial < 20; ++trial) {
        RecvWindow rw(1024);
        std::vector<std::uint32_t> stream;
        for (std::uint32_t s = 0; s < 3000; ++s) {
            stream.push_back(s);
            if (g() % 3 == 0) stream.push_back(s);
        }
        // Local reordering well inside the window.
        for (std::size_t i = 0; i + 8 < stream.size(); i += 8)
            std::shuffle(stream.begin() + static_cast<long>(i), stream.begin() + static_cast<long>(i) + 8, g);
        std::set<std::uint32_t> accepted;
        std::size_t accepts = 0;
        for (auto s : stream) {
            if (rw.offer(s) == DedupResult::Accept) {
                ++accepts;
                accepted.insert(s);
            }
        }
        CHECK(accepts == 3000);
        CHECK(accepted.size() == 3000);
    }
}

TEST_CASE("drop-oldest buffer") {
    DropOldestQueue<int> q(64);
    std::size_t dropped = 0;
    for (int i = 0; i < 100; ++i) dropped += q.push(i);
    CHECK(q.size() == 64);
    CHECK(dropped == 36);
    CHECK(q.items().front() == 36);
}

TEST_CASE("DL reflects the most recent UL data frame") {
    TunnelConfig cfg;
    SessionState s(7, cfg);
    CHECK_FALSE(server_route_dl(s).has_value());
    server_receive_ul(s, data(Rat::Cbrs, 1));
    CHECK(server_route_dl(s) == Rat::Cbrs);

    SessionState a(7, cfg);
    const Rat seq[] = {Rat::Wifi, Rat::Cbrs, Rat::Wifi};
    std::uint32_t n = 0;
    for (Rat r : seq) server_receive_ul(a, data(r, n++));
    CHECK(server_route_dl(a) == Rat::Wifi);

    TunnelFrame probe;
    probe.probe = true;
    probe.rat = Rat::Cbrs;
    probe.session_id = 7;
    server_receive_ul(a, probe);
    CHECK(server_route_dl(a) == Rat::Wifi);

    CHECK_THROWS(server_receive_ul(a, data(Rat::Wifi, 9, FrameDirection::Ul, 8)));
}

TEST_CASE("reflection rule replay over random UL/probe sequences") {
    TunnelConfig cfg;
    std::mt19937_64 g(4);
    SessionState s(7, cfg);
    Rat expected = Rat::None;
    for (std::uint32_t i = 0; i < 5000; ++i) {
        TunnelFrame f = data(g() & 1 ? Rat::Cbrs : Rat::Wifi, i);
        if (g() % 4 == 0) {
            f.probe = true;
            f.payload.clear();
        } else {
            expected = f.rat;
        }
        server_receive_ul(s, f);
        if (expected == Rat::None) REQUIRE_FALSE(server_route_dl(s).has_value());
        else REQUIRE(server_route_dl(s) == expected);
    }
}

TEST_CASE("congestion score tracks rtt and loss") {
    TunnelConfig cfg;
    PathState p;
    p.rat = Rat::Wifi;
    record_ack(p, 40.0, cfg);
    CHECK(p.congestion_score == doctest::Approx(2.0));
    record_loss(p, cfg);
    CHECK(p.loss_ewma == doctest::Approx(cfg.ewma_alpha));
    CHECK(p.congestion_score == doctest::Approx(40.0 / 20.0 + cfg.loss_weight * cfg.ewma_alpha));
    for (int i = 0; i < 50; ++i) record_loss(p, cfg);
    CHECK(p.loss_ewma <= 1.0);
    CHECK(p.loss_ewma >= 0.0);
}

TEST_CASE("make-before-break waits for a completed probe round trip") {
    TunnelConfig cfg;
    SessionState s(7, cfg);
    set_attached(s, Rat::Wifi, true, 0.0);
    probe_until(s, cfg, 0.0, 1.0, {true, true});
    const std::array<double, 2> rates{10, 10};
    CHECK(client_select_path(s, Rat::Wifi, rates) == std::vector<Rat>{Rat::Wifi});

    set_attached(s, Rat::Cbrs, true, 1.0);
    // Probe sent at 1.0 is acknowledged at 1.04.
    probe_until(s, cfg, 1.0, 1.03, {true, true});
    CHECK(client_select_path(s, Rat::Cbrs, rates) == std::vector<Rat>{Rat::Wifi});
    probe_until(s, cfg, 1.04, 1.05, {true, true});
    CHECK(client_select_path(s, Rat::Cbrs, rates) == std::vector<Rat>{Rat::Cbrs});
    CHECK(s.inner_address == cfg.inner_address);
}

TEST_CASE("path declared dead after three missed probes") {
    TunnelConfig cfg;
    SessionState s(7, cfg);
    set_attached(s, Rat::Wifi, true, 0.0);
    set_attached(s, Rat::Cbrs, true, 0.0);
    probe_until(s, cfg, 0.0, 1.0, {true, true});
    CHECK(s.path(Rat::Wifi).alive);
    // Probes at 1.25, 1.5, 1.75 are lost; the third timeout is noticed at 2.0.
    probe_until(s, cfg, 1.01, 1.99, {false, true});
    CHECK(s.path(Rat::Wifi).alive);
    probe_until(s, cfg, 2.0, 2.0, {false, true});
    CHECK_FALSE(s.path(Rat::Wifi).alive);
    const std::array<double, 2> rates{10, 10};
    CHECK(client_select_path(s, Rat::Wifi, rates) == std::vector<Rat>{Rat::Cbrs});
}

TEST_CASE("no usable path means tunnel down") {
    TunnelConfig cfg;
    SessionState s(7, cfg);
    CHECK(client_select_path(s, Rat::Wifi, {10, 10}).empty());
}

TEST_CASE("duplicate mode sends on every usable path") {
    TunnelConfig cfg;
    cfg.mode = TunnelMode::Duplicate;
    SessionState s(7, cfg);
    set_attached(s, Rat::Wifi, true, 0.0);
    set_attached(s, Rat::Cbrs, true, 0.0);
    probe_until(s, cfg, 0.0, 0.5, {true, true});
    CHECK(client_select_path(s, Rat::Wifi, {10, 10}) == std::vector<Rat>{Rat::Wifi, Rat::Cbrs});
    // Receiver side: the second copy never surfaces.
    CHECK(client_receive_dl(s, data(Rat::Wifi, 3, FrameDirection::Dl)) == DedupResult::Accept);
    CHECK(client_receive_dl(s, data(Rat::Cbrs, 3, FrameDirection::Dl)) == DedupResult::Duplicate);
}

TEST_CASE("split mode shares frames in proportion to link rate") {
    TunnelConfig cfg;
    cfg.mode = TunnelMode::Split;
    SessionState s(7, cfg);
    set_attached(s, Rat::Wifi, true, 0.0);
    set_attached(s, Rat::Cbrs, true, 0.0);
    probe_until(s, cfg, 0.0, 0.5, {true, true});
    int wifi = 0, cbrs = 0;
    for (int i = 0; i < 4000; ++i) {
        const auto p = client_select_path(s, Rat::Wifi, {30, 10});
        REQUIRE(p.size() == 1);
        (p[0] == Rat::Wifi ? wifi : cbrs)++;
    }
    CHECK(wifi == 3000);
    CHECK(cbrs == 1000);
}

TEST_CASE("scripted congestion: switch after two consecutive probe rounds") {
    using namespace roamsim::policy;
    RadioPreferenceProfile prof;
    prof.wlan = {{"Celona", -90}};
    prof.wwan = {{"CelonaPrivate", -110}};
    prof.rat_order = {Rat::Wifi, Rat::Cbrs};
    const std::vector<VisibleNetwork> sig{{Rat::Wifi, "Celona", -60}, {Rat::Cbrs, "CelonaPrivate", -80}};
    Hysteresis h;
    TunnelConfig cfg;
    h.congestion_ratio = cfg.congestion_ratio;
    h.congestion_dwell_s = cfg.congestion_dwell_s();

    auto replay = [&](const std::vector<std::array<double, 2>>& rounds) {
        PolicyState st;
        std::vector<Rat> out;
        for (std::size_t k = 0; k < rounds.size(); ++k) {
            PolicyInputs in;
            in.signals = sig;
            in.congestion = rounds[k];
            const auto ev = evaluate(prof, in, st, k * cfg.probe_interval_s, h);
            st = ev.state;
            out.push_back(ev.decision.preferred_rat);
        }
        return out;
    };
    // Oracle: switch at the second consecutive round where wifi > 1.5 * cbrs.
    const auto a = replay({{1, 1}, {2, 1}, {2, 1}, {2, 1}});
    CHECK(a == std::vector<Rat>{Rat::Wifi, Rat::Wifi, Rat::Cbrs, Rat::Cbrs});
    const auto b = replay({{1, 1}, {2, 1}, {1, 1}, {2, 1}, {1.4, 1}});
    CHECK(b == std::vector<Rat>{Rat::Wifi, Rat::Wifi, Rat::Wifi, Rat::Wifi, Rat::Wifi});
    const auto c = replay({{1, 1}, {1.6, 1}, {1.6, 1}});
    CHECK(c.back() == Rat::Cbrs);
}

TEST_CASE("config validation") {
    TunnelConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.congestion_ratio = 0.5;
    CHECK_THROWS(cfg.validate());
    CHECK(parse_tunnel_mode("SPLIT") == TunnelMode::Split);
    CHECK_THROWS(parse_tunnel_mode("split"));
}
