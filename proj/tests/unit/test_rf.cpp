#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "roamsim/rf_env.hpp"
#include "roamsim/scenario.hpp"

using namespace roamsim;
using namespace roamsim::rf;

namespace {

RadioNode node(std::string id, Rat rat, Vec2 pos, double tx) {
    RadioNode n;
    n.id = std::move(id);
    n.rat = rat;
    n.position = pos;
    n.tx_power_dbm = tx;
    return n;
}

PathLossModel plain() {
    PathLossModel m;
    m.reference_loss_db = 40;
    m.exponent = 3;
    m.shadowing_sigma_db = 0;
    return m;
}

Scenario default_scenario() { return load_scenario(ROAMSIM_DATA_DIR "/default_scenario.yaml"); }

}  // namespace

TEST_CASE("log-distance reference and 100 m values") {
    const auto n = node("a", Rat::Wifi, {0, 0}, 20);
    CHECK(signal_at(n, {1, 0}, plain()).value_dbm == doctest::Approx(-20.0));
    CHECK(signal_at(n, {100, 0}, plain()).value_dbm == doctest::Approx(-80.0));
    CHECK(signal_at(n, {0, 0}, plain()).value_dbm <= 20.0);
    CHECK(signal_at(n, {100, 0}, plain()).metric == SignalMetric::Rssi);
    CHECK(signal_at(node("c", Rat::Cbrs, {0, 0}, 5), {3, 0}, plain()).metric == SignalMetric::Rsrp);
}

TEST_CASE("walls subtract penetration loss per crossing") {
    auto m = plain();
    m.buildings.push_back({{10, -5}, {20, -5}, {20, 5}, {10, 5}});
    const auto n = node("a", Rat::Wifi, {0, 0}, 20);
    const double open = 20 - 40 - 30 * std::log10(30.0);
    CHECK(signal_at(n, {30, 0}, m).value_dbm == doctest::Approx(open - 20.0));
    CHECK(signal_at(n, {15, 0}, m).value_dbm == doctest::Approx(20 - 40 - 30 * std::log10(15.0) - 10.0));
}

TEST_CASE("non-finite input is rejected") {
    const auto n = node("a", Rat::Wifi, {0, 0}, 20);
    CHECK_THROWS_AS(signal_at(n, {NAN, 0}, plain()), std::invalid_argument);
}

TEST_CASE("shadowing is deterministic and quantized to 1 m") {
    auto m = plain();
    m.shadowing_sigma_db = 4;
    m.seed = 9;
    CHECK(shadow_db(m, "a", {3.2, 7.9}) == shadow_db(m, "a", {3.7, 7.1}));
    CHECK(shadow_db(m, "a", {3.2, 7.9}) != shadow_db(m, "b", {3.2, 7.9}));
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double z = shadow_db(m, "a", {static_cast<double>(i % 200), static_cast<double>(i / 200)});
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.15);
    CHECK(std::sqrt(sq / n) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("monotone in distance without shadowing") {
    const auto n = node("a", Rat::Wifi, {0, 0}, 15);
    double prev = signal_at(n, {0.5, 0}, plain()).value_dbm;
    for (double d = 1.0; d < 300; d += 0.5) {
        const double v = signal_at(n, {d, 0}, plain()).value_dbm;
        REQUIRE(v < prev);
        prev = v;
    }
}

TEST_CASE("link rate anchors and monotonicity") {
    const auto t = RateTables::defaults();
    CHECK(link_rate({"w", SignalMetric::Rssi, -89, {}}, 20, t) == doctest::Approx(0.5));
    CHECK(link_rate({"c", SignalMetric::Rsrp, -104, {}}, 40, t) == doctest::Approx(8.0));
    CHECK(link_rate({"w", SignalMetric::Rssi, -120, {}}, 20, t) == 0.0);
    CHECK(t.wifi.size() == 6);
    CHECK(t.cellular.size() == 6);
    for (auto metric : {SignalMetric::Rssi, SignalMetric::Rsrp}) {
        double prev = 0;
        for (double s = -140; s <= -30; s += 0.25) {
            const double r = link_rate({"x", metric, s, {}}, 20, t);
            REQUIRE(r >= prev);
            prev = r;
        }
    }
}

TEST_CASE("best server: single, tie-break, permutation invariance") {
    const auto m = plain();
    std::vector<RadioNode> one{node("only", Rat::Wifi, {5, 5}, 10)};
    CHECK(best_server(one, {0, 0}, Rat::Wifi, m)->node->id == "only");
    CHECK_FALSE(best_server(one, {0, 0}, Rat::Cbrs, m).has_value());

    std::vector<RadioNode> mirrored{node("zeta", Rat::Wifi, {10, 0}, 10), node("alpha", Rat::Wifi, {-10, 0}, 10)};
    CHECK(best_server(mirrored, {0, 3}, Rat::Wifi, m)->node->id == "alpha");

    std::vector<RadioNode> many;
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(0, 50);
    for (int i = 0; i < 8; ++i) many.push_back(node("n" + std::to_string(i), Rat::Wifi, {u(g), u(g)}, 15));
    many.push_back(node("twin", Rat::Wifi, many[3].position, 15));
    for (int trial = 0; trial < 50; ++trial) {
        const Vec2 p{u(g), u(g)};
        const std::string ref = best_server(many, p, Rat::Wifi, m)->node->id;
        auto shuffled = many;
        std::shuffle(shuffled.begin(), shuffled.end(), g);
        REQUIRE(best_server(shuffled, p, Rat::Wifi, m)->node->id == ref);
    }
}

TEST_CASE("best server at building center is the nearest AP by brute force") {
    const Scenario sc = default_scenario();
    const Vec2 c{20, 15};
    std::vector<const RadioNode*> wifi;
    for (const auto& n : sc.env.nodes)
        if (n.rat == Rat::Wifi) wifi.push_back(&n);
    REQUIRE(wifi.size() == 4);
    const auto pick = best_server(sc.env.nodes, c, Rat::Wifi, sc.env.path_loss);
    double best = -1e9;
    for (const auto* n : wifi) best = std::max(best, signal_at(*n, c, sc.env.path_loss).value_dbm);
    CHECK(pick->sample.value_dbm == best);
    // Off-centre: nearest by distance wins.
    const Vec2 q{12, 9};
    const RadioNode* nearest = *std::min_element(wifi.begin(), wifi.end(), [&](auto* a, auto* b) {
        return distance(a->position, q) < distance(b->position, q);
    });
    CHECK(best_server(sc.env.nodes, q, Rat::Wifi, sc.env.path_loss)->node->id == nearest->id);
}

TEST_CASE("coverage edge: closed form on a radial walk") {
    const auto m = plain();
    std::vector<RadioNode> nodes{node("a", Rat::Wifi, {0, 0}, 15)};
    MobilityTrace walk{{{1, 0}, {400, 0}}, 1.0, 0.0, {}};
    for (double thr : {-60.0, -75.0, -90.0}) {
        // 15 - 40 - 30 log10(d) = thr
        const double d = std::pow(10.0, (15 - 40 - thr) / 30.0);
        const double edge = coverage_edge(nodes, walk, Rat::Wifi, thr, m);
        CHECK(std::abs((edge + 1.0) - d) <= 1.0);
    }
    CHECK(coverage_edge(nodes, walk, Rat::Wifi, 20.0, m) == 0.0);
    CHECK(coverage_edge(nodes, walk, Rat::Wifi, -200.0, m) == kBeyondPathEnd);
    CHECK_THROWS_AS(coverage_edge(nodes, MobilityTrace{}, Rat::Wifi, -90, m), std::invalid_argument);
}

TEST_CASE("default scenario: Wi-Fi edge closer than CBRS edge") {
    const Scenario sc = default_scenario();
    MobilityTrace out = sc.devices.at(0).trace;
    out.waypoints.resize(2);
    out.pauses_s.clear();
    const double wifi = coverage_edge(sc.env.nodes, out, Rat::Wifi, -90, sc.env.path_loss);
    const double cbrs = coverage_edge(sc.env.nodes, out, Rat::Cbrs, -110, sc.env.path_loss);
    CHECK(wifi < cbrs);
    CHECK(wifi > 0.0);
}

TEST_CASE("node validation") {
    std::vector<RadioNode> nodes{node("c1", Rat::Cbrs, {0, 0}, 5), node("c2", Rat::Cbrs, {1, 0}, 5)};
    nodes[0].pci = 101;
    nodes[1].pci = 101;
    CHECK_THROWS(validate_nodes(nodes));
    nodes[1].pci = 102;
    CHECK_NOTHROW(validate_nodes(nodes));
    nodes[1].carriers = 3;
    CHECK_THROWS(validate_nodes(nodes));
    PathLossModel m = plain();
    m.exponent = 7;
    CHECK_THROWS(m.validate());
}
