#include <doctest.h>

#include <set>

#include "roamsim/report.hpp"
#include "roamsim/sim.hpp"

using namespace roamsim;

namespace {

Scenario default_scenario() { return load_scenario(ROAMSIM_DATA_DIR "/default_scenario.yaml"); }

// Keeps only the named devices.
Scenario only(Scenario sc, std::set<std::string> ids) {
    std::erase_if(sc.devices, [&](const DeviceConfig& d) { return !ids.count(d.id); });
    return sc;
}

const traffic::FlowSpec* flow_of(const DeviceConfig& d, traffic::FlowClass cls) {
    for (const auto& f : d.flows)
        if (f.cls == cls) return &f;
    return nullptr;
}

}  // namespace

TEST_CASE("empty device list: empty log and report") {
    Scenario sc = default_scenario();
    sc.devices.clear();
    const auto r = sim::run(sc, 1);
    CHECK(r.log.records.empty());
    CHECK(r.devices.empty());
    const auto rep = report::build(r.devices);
    CHECK(rep.cells.empty());
    CHECK(rep.rebuffers.empty());
}

TEST_CASE("same seed gives byte-identical logs; different seeds differ") {
    const Scenario sc = only(default_scenario(), {"model3", "model6"});
    for (Mode m : {Mode::Traditional, Mode::Tunnel}) {
        sim::RunOptions o;
        o.mode_override = m;
        const std::string a = sim::run(sc, 5, o).log.to_jsonl();
        const std::string b = sim::run(sc, 5, o).log.to_jsonl();
        CHECK(a == b);
        CHECK(a != sim::run(sc, 6, o).log.to_jsonl());
    }
}

TEST_CASE("log timestamps are non-decreasing and the jsonl form is a fixed point") {
    const Scenario sc = only(default_scenario(), {"model1"});
    sim::RunOptions o;
    o.mode_override = Mode::Tunnel;
    const auto r = sim::run(sc, 2, o);
    for (std::size_t i = 1; i < r.log.records.size(); ++i) REQUIRE(r.log.records[i - 1].t <= r.log.records[i].t);
    const std::string text = r.log.to_jsonl();
    CHECK(log::parse_jsonl(text).to_jsonl() == text);
}

TEST_CASE("report regenerated from stored logs equals the live report") {
    const Scenario sc = only(default_scenario(), {"model2", "model7"});
    std::vector<sim::DeviceRun> runs;
    std::vector<log::EventLog> logs;
    for (std::uint64_t seed : {1, 2, 3}) {
        auto r = sim::run(sc, seed);
        runs.insert(runs.end(), r.devices.begin(), r.devices.end());
        logs.push_back(log::parse_jsonl(r.log.to_jsonl()));
    }
    const auto live = report::build(runs);
    const auto again = report::from_logs(logs, false);
    CHECK(report::cells_csv(live) == report::cells_csv(again));
    CHECK(report::rebuffer_csv(live) == report::rebuffer_csv(again));
    // Idempotent.
    CHECK(report::cells_csv(report::from_logs(logs, false)) == report::cells_csv(again));
}

TEST_CASE("single seed, single device, both modes: four cells per flow") {
    const Scenario sc = only(default_scenario(), {"model6"});
    const std::string flow = flow_of(sc.devices[0], traffic::FlowClass::Live)->id;
    std::vector<sim::DeviceRun> runs;
    for (Mode m : {Mode::Traditional, Mode::Tunnel}) {
        sim::RunOptions o;
        o.mode_override = m;
        auto r = sim::run(sc, 1, o);
        runs.insert(runs.end(), r.devices.begin(), r.devices.end());
    }
    auto rep = report::build(runs);
    std::erase_if(rep.cells, [&](const report::Cell& c) { return c.flow != flow; });
    REQUIRE(rep.cells.size() == 4);
    for (Mode m : {Mode::Traditional, Mode::Tunnel})
        for (const auto& d : report::kDirections) CHECK(rep.find("model6", m, flow, d[0]) != nullptr);
}

TEST_CASE("tunnel runs keep the inner address and reflect DL on the last UL path") {
    const Scenario sc = only(default_scenario(), {"model1", "model3", "model6"});
    sim::RunOptions o;
    o.mode_override = Mode::Tunnel;
    for (std::uint64_t seed : {1, 2}) {
        const auto r = sim::run(sc, seed, o);
        CHECK(sim::reflection_violations(r.log) == 0);
        CHECK(sim::inner_address_changes(r.log) == 0);
        for (const auto& d : r.devices) {
            CHECK(d.tunnel.reflection_violations == 0);
            CHECK(d.tunnel.duplicate_deliveries == 0);
            CHECK(d.inner_address == sc.tunnel.inner_address);
            CHECK(d.tunnel.ul_frames > 0);
        }
    }
}

TEST_CASE("reflection replay catches a planted violation") {
    log::EventLog lg;
    log::FrameRecord ul;
    ul.device = "d";
    ul.flow = "f";
    ul.session_id = 1;
    ul.rat = Rat::Wifi;
    lg.add(1.0, ul);
    auto dl = ul;
    dl.direction = tunnel::FrameDirection::Dl;
    lg.add(1.1, dl);
    CHECK(sim::reflection_violations(lg) == 0);
    dl.rat = Rat::Cbrs;
    lg.add(1.2, dl);
    CHECK(sim::reflection_violations(lg) == 1);
    auto probe = ul;
    probe.probe = true;
    probe.flow.clear();
    probe.rat = Rat::Cbrs;
    lg.add(1.3, probe);
    dl.rat = Rat::Wifi;
    lg.add(1.4, dl);
    CHECK(sim::reflection_violations(lg) == 1);
}

TEST_CASE("duplicate mode covers the Wi-Fi to CBRS switch within one packet interval") {
    Scenario sc = only(default_scenario(), {"model6"});
    sc.tunnel.mode = tunnel::TunnelMode::Duplicate;
    sim::RunOptions o;
    o.mode_override = Mode::Tunnel;
    const auto* live = flow_of(sc.devices[0], traffic::FlowClass::Live);
    REQUIRE(live);
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto r = sim::run(sc, seed, o);
        const auto* f = r.devices[0].flow(live->id);
        REQUIRE(f);
        bool seen = false;
        for (const auto& rec : f->interruptions) {
            if (rec.from != Rat::Wifi || !rec.measurable) continue;
            seen = true;
            CHECK(rec.max_gap_s <= live->packet_interval_s + sc.tick_s + 1e-9);
        }
        CHECK(seen);
        CHECK(r.devices[0].tunnel.duplicate_deliveries == 0);
        CHECK(r.devices[0].tunnel.duplicates_dropped > 0);
    }
}

TEST_CASE("split mode keeps the tunnel invariants") {
    Scenario sc = only(default_scenario(), {"model4"});
    sc.tunnel.mode = tunnel::TunnelMode::Split;
    sim::RunOptions o;
    o.mode_override = Mode::Tunnel;
    const auto r = sim::run(sc, 1, o);
    CHECK(sim::reflection_violations(r.log) == 0);
    CHECK(sim::inner_address_changes(r.log) == 0);
    CHECK(r.devices[0].tunnel.duplicate_deliveries == 0);
}

TEST_CASE("serial and parallel seed fan-out agree") {
    const Scenario sc = only(default_scenario(), {"model5"});
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4};
    const auto a = sim::run_seeds_serial(sc, seeds, {});
    const auto b = sim::run_seeds_parallel(sc, seeds, {});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].seed == seeds[i]);
        CHECK(a[i].log.to_jsonl() == b[i].log.to_jsonl());
    }
}

TEST_CASE("default seeds follow the scenario") {
    Scenario sc = default_scenario();
    sc.seed = 40;
    sc.seed_count = 3;
    CHECK(sim::default_seeds(sc) == std::vector<std::uint64_t>{40, 41, 42});
}
