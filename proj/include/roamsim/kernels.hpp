#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "roamsim/policy/geofence.hpp"
#include "roamsim/scenario.hpp"

namespace roamsim::kernels {

inline constexpr double kNoSignal = -std::numeric_limits<double>::infinity();

// Best server per RAT at one instant. Node indices refer to Environment::nodes;
// -1 means the RAT has no node at all.
struct TickRadio {
    Vec2 position;
    int wifi_node = -1;
    double wifi_dbm = kNoSignal;
    double wifi_rate_mbps = 0.0;
    int cbrs_node = -1;
    double cbrs_dbm = kNoSignal;
    double cbrs_rate_mbps = 0.0;

    friend bool operator==(const TickRadio&, const TickRadio&) = default;
};

// Seed-independent radio conditions along a trace, one entry per tick.
struct RadioTrack {
    double tick_s = 0.01;
    std::vector<TickRadio> ticks;
    // Visible macro cells per tick; empty when the environment has none.
    std::vector<std::vector<policy::VisibleCell>> macro;
};

TickRadio radio_at(const Environment& env, Vec2 pos);
std::vector<policy::VisibleCell> macro_cells_at(const Environment& env, Vec2 pos);

// Reference implementation.
RadioTrack radio_track_serial(const Environment& env, const MobilityTrace& trace, double tick_s, std::size_t ticks);
// OpenMP over ticks; identical output.
RadioTrack radio_track_parallel(const Environment& env, const MobilityTrace& trace, double tick_s, std::size_t ticks);

std::vector<std::uint8_t> contains_batch_serial(const policy::GeofenceSpec& spec, std::span<const Vec2> points);
std::vector<std::uint8_t> contains_batch_parallel(const policy::GeofenceSpec& spec, std::span<const Vec2> points);

int max_threads();

}  // namespace roamsim::kernels
