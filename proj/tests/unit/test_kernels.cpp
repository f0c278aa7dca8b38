#include <doctest.h>

#include <random>

#include "roamsim/kernels.hpp"

using namespace roamsim;

namespace {

Scenario default_scenario() { return load_scenario(ROAMSIM_DATA_DIR "/default_scenario.yaml"); }

}  // namespace

TEST_CASE("radio track: parallel equals serial reference") {
    const Scenario sc = default_scenario();
    const auto& tr = sc.devices.at(0).trace;
    const auto a = kernels::radio_track_serial(sc.env, tr, sc.tick_s, sc.tick_count());
    const auto b = kernels::radio_track_parallel(sc.env, tr, sc.tick_s, sc.tick_count());
    REQUIRE(a.ticks.size() == sc.tick_count());
    CHECK(a.ticks == b.ticks);
    CHECK(a.macro.size() == b.macro.size());
}

TEST_CASE("radio track entries match pointwise evaluation") {
    const Scenario sc = default_scenario();
    const auto& tr = sc.devices.at(0).trace;
    const auto a = kernels::radio_track_serial(sc.env, tr, sc.tick_s, 2000);
    for (std::size_t i = 0; i < a.ticks.size(); i += 97) {
        const auto pos = tr.position_at(static_cast<double>(i) * sc.tick_s);
        const auto r = kernels::radio_at(sc.env, pos);
        CHECK(a.ticks[i] == r);
        const auto w = rf::best_server(sc.env.nodes, pos, Rat::Wifi, sc.env.path_loss);
        REQUIRE(w);
        CHECK(r.wifi_dbm == w->sample.value_dbm);
    }
}

TEST_CASE("geofence batch: parallel equals serial equals scalar") {
    policy::GeofenceSpec g;
    g.shapes = {geometry::Polygon{{0, 0}, {40, 0}, {40, 30}, {20, 45}, {0, 30}}, policy::Circle{{80, 80}, 15}};
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-20, 120);
    std::vector<Vec2> pts(50000);
    for (auto& p : pts) p = {u(rng), u(rng)};
    pts.push_back({40, 15});
    const auto a = kernels::contains_batch_serial(g, pts);
    const auto b = kernels::contains_batch_parallel(g, pts);
    CHECK(a == b);
    for (std::size_t i = 0; i < pts.size(); i += 101) CHECK((a[i] != 0) == policy::geofence_contains(g, pts[i]));
    CHECK(a.back() == 1);
    CHECK(kernels::max_threads() >= 1);
}
