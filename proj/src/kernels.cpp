#include "roamsim/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace roamsim::kernels {

TickRadio radio_at(const Environment& env, Vec2 pos) {
    TickRadio out;
    out.position = pos;
    const auto& nodes = env.nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const rf::RadioNode& n = nodes[i];
        if (n.rat != Rat::Wifi && n.rat != Rat::Cbrs) continue;
        const double v = rf::signal_at(n, pos, env.path_loss).value_dbm;
        int& best = n.rat == Rat::Wifi ? out.wifi_node : out.cbrs_node;
        double& best_v = n.rat == Rat::Wifi ? out.wifi_dbm : out.cbrs_dbm;
        if (best < 0 || v > best_v || (v == best_v && n.id < nodes[static_cast<std::size_t>(best)].id)) {
            best = static_cast<int>(i);
            best_v = v;
        }
    }
    if (out.wifi_node >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(out.wifi_node)];
        out.wifi_rate_mbps = rf::link_rate({n.id, SignalMetric::Rssi, out.wifi_dbm, pos}, n.aggregate_bandwidth_mhz(), env.rates);
    }
    if (out.cbrs_node >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(out.cbrs_node)];
        out.cbrs_rate_mbps = rf::link_rate({n.id, SignalMetric::Rsrp, out.cbrs_dbm, pos}, n.aggregate_bandwidth_mhz(), env.rates);
    }
    return out;
}

std::vector<policy::VisibleCell> macro_cells_at(const Environment& env, Vec2 pos) {
    std::vector<policy::VisibleCell> out;
    for (const rf::RadioNode& n : env.nodes) {
        if (n.rat != Rat::Macro || !n.cell_id) continue;
        const double rsrp = rf::signal_at(n, pos, env.path_loss).value_dbm;
        const double sinr = rsrp - env.macro_noise_floor_dbm;
        if (sinr < -10.0) continue;  // below detection
        // Coarse CQI mapping: roughly 2 dB per step.
        const int cqi = std::clamp(static_cast<int>(std::floor((sinr + 6.0) / 2.0)), 0, 15);
        out.push_back({*n.cell_id, sinr, cqi});
    }
    return out;
}

namespace {

bool has_macro(const Environment& env) {
    return std::any_of(env.nodes.begin(), env.nodes.end(), [](const rf::RadioNode& n) { return n.rat == Rat::Macro; });
}

}  // namespace

RadioTrack radio_track_serial(const Environment& env, const MobilityTrace& trace, double tick_s, std::size_t ticks) {
    RadioTrack track;
    track.tick_s = tick_s;
    track.ticks.resize(ticks);
    const bool macro = has_macro(env);
    if (macro) track.macro.resize(ticks);
    for (std::size_t i = 0; i < ticks; ++i) {
        const Vec2 pos = trace.position_at(static_cast<double>(i) * tick_s);
        track.ticks[i] = radio_at(env, pos);
        if (macro) track.macro[i] = macro_cells_at(env, pos);
    }
    return track;
}

RadioTrack radio_track_parallel(const Environment& env, const MobilityTrace& trace, double tick_s, std::size_t ticks) {
    RadioTrack track;
    track.tick_s = tick_s;
    track.ticks.resize(ticks);
    const bool macro = has_macro(env);
    if (macro) track.macro.resize(ticks);
    const auto n = static_cast<std::int64_t>(ticks);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const Vec2 pos = trace.position_at(static_cast<double>(k) * tick_s);
        track.ticks[k] = radio_at(env, pos);
        if (macro) track.macro[k] = macro_cells_at(env, pos);
    }
    return track;
}

std::vector<std::uint8_t> contains_batch_serial(const policy::GeofenceSpec& spec, std::span<const Vec2> points) {
    std::vector<std::uint8_t> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = policy::geofence_contains(spec, points[i]) ? 1 : 0;
    return out;
}

std::vector<std::uint8_t> contains_batch_parallel(const policy::GeofenceSpec& spec, std::span<const Vec2> points) {
    std::vector<std::uint8_t> out(points.size());
    const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out[k] = policy::geofence_contains(spec, points[k]) ? 1 : 0;
    }
    return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace roamsim::kernels
