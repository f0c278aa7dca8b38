#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "roamsim/mobility.hpp"
#include "roamsim/rng.hpp"

using namespace roamsim;

TEST_CASE("single waypoint is constant") {
    MobilityTrace tr{{{3, 4}}, 1.4, 0.0, {}};
    for (double t : {0.0, 1.0, 100.0}) CHECK(tr.position_at(t) == Vec2{3, 4});
    CHECK(tr.duration() == 0.0);
}

TEST_CASE("midpoint of a straight leg") {
    MobilityTrace tr{{{0, 0}, {10, 0}}, 1.0, 2.0, {}};
    const Vec2 p = tr.position_at(7.0);
    CHECK(p.x == doctest::Approx(5.0));
    CHECK(p.y == doctest::Approx(0.0));
    CHECK(tr.position_at(0.0) == Vec2{0, 0});
    CHECK(tr.position_at(1e6) == Vec2{10, 0});
    CHECK(tr.end_time() == doctest::Approx(12.0));
}

TEST_CASE("pauses hold the device at the waypoint") {
    MobilityTrace tr{{{0, 0}, {10, 0}, {10, 10}}, 2.0, 0.0, {1.0, 3.0}};
    CHECK(tr.duration() == doctest::Approx(10.0 / 2 + 10.0 / 2 + 4.0));
    CHECK(tr.position_at(0.5) == Vec2{0, 0});
    CHECK(tr.position_at(6.0).x == doctest::Approx(10.0));
    CHECK(tr.position_at(8.9).y == doctest::Approx(0.0));
    CHECK(tr.position_at(10.0).y == doctest::Approx(2.0));
}

TEST_CASE("arclength oracle on random traces") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        rng::Stream r(seed, "trace");
        MobilityTrace tr;
        tr.speed_mps = 0.5 + 2.0 * r.uniform();
        tr.start_time_s = 3.0 * r.uniform();
        for (int i = 0; i < 5; ++i) tr.waypoints.push_back({100 * r.uniform(), 100 * r.uniform()});
        // Numeric integration of |dp/dt| with a fine step; a chord across a
        // corner loses at most speed * dt.
        const double dt = 1e-3;
        double walked = 0.0;
        double worst = 0.0;
        Vec2 prev = tr.position_at(tr.start_time_s);
        for (double t = tr.start_time_s + dt; t <= tr.end_time() + 1e-12; t += dt) {
            const Vec2 p = tr.position_at(t);
            walked += distance(prev, p);
            prev = p;
            const double expected = tr.speed_mps * (t - tr.start_time_s);
            worst = std::max(worst, std::abs(walked - expected));
        }
        CHECK(worst <= 4 * tr.speed_mps * dt + 1e-9);
    }
}

TEST_CASE("per-tick displacement is bounded by speed * tick") {
    MobilityTrace tr{{{20, 15}, {140, 15}, {20, 15}}, 1.4, 0.0, {10, 60, 20}};
    const double tick = 0.01;
    Vec2 prev = tr.position_at(0.0);
    for (int i = 1; i < 30000; ++i) {
        const Vec2 p = tr.position_at(i * tick);
        REQUIRE(distance(prev, p) <= tr.speed_mps * tick + 1e-9);
        prev = p;
    }
}

TEST_CASE("validation") {
    CHECK_THROWS(MobilityTrace{{}, 1.0, 0.0, {}}.validate());
    CHECK_THROWS(MobilityTrace{{{0, 0}}, 0.0, 0.0, {}}.validate());
    CHECK_THROWS(MobilityTrace{{{0, 0}}, 1.0, 0.0, {1, 2}}.validate());
    CHECK_NOTHROW(MobilityTrace{{{0, 0}, {1, 1}}, 1.0, 0.0, {1}}.validate());
}
