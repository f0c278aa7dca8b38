#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roamsim/geometry.hpp"
#include "roamsim/mobility.hpp"
#include "roamsim/types.hpp"

namespace roamsim::rf {

// A Wi-Fi AP, CBRS AP or public macro cell.
//
// For CBRS and macro nodes tx_power_dbm is the reference-signal power per
// resource element, so signal_at() yields RSRP directly.
struct RadioNode {
    std::string id;
    Rat rat = Rat::Wifi;
    Vec2 position;
    double tx_power_dbm = 0.0;
    double center_freq_mhz = 0.0;
    double bandwidth_mhz = 20.0;  // per carrier
    int carriers = 1;
    std::string channel_label;
    std::string network;  // SSID or network name
    std::optional<std::int64_t> cell_id;
    std::optional<int> pci;

    double aggregate_bandwidth_mhz() const { return bandwidth_mhz * carriers; }
};

// Log-distance path loss with lognormal shadowing and per-wall penetration.
struct PathLossModel {
    double reference_loss_db = 40.0;
    double exponent = 3.0;
    double shadowing_sigma_db = 0.0;
    double wall_penetration_db = 10.0;
    std::uint64_t seed = 0;
    std::vector<geometry::Polygon> buildings;

    void validate() const;
};

// One step of a signal-to-rate table: at or above threshold_dbm the link
// carries mbps_per_20mhz (scaled linearly with bandwidth).
struct RateStep {
    double threshold_dbm = 0.0;
    double mbps_per_20mhz = 0.0;
};

struct RateTables {
    std::vector<RateStep> wifi;      // RSSI
    std::vector<RateStep> cellular;  // RSRP

    static RateTables defaults();
    void validate() const;
};

void validate_nodes(std::span<const RadioNode> nodes);

SignalMetric metric_for(Rat rat);

// Deterministic zero-mean normal draw for (seed, node, 1 m grid cell).
double shadow_db(const PathLossModel& model, const std::string& node_id, Vec2 pos);

SignalSample signal_at(const RadioNode& node, Vec2 pos, const PathLossModel& model);

struct ServerPick {
    const RadioNode* node = nullptr;
    SignalSample sample;
};

// Strongest node of the requested RAT; ties go to the smallest id. Returns
// nullopt when no node of that RAT exists.
std::optional<ServerPick> best_server(std::span<const RadioNode> nodes, Vec2 pos, Rat rat,
                                      const PathLossModel& model);

double link_rate(const SignalSample& sample, double bandwidth_mhz, const RateTables& tables);

inline constexpr double kBeyondPathEnd = std::numeric_limits<double>::infinity();

// First arclength after which the best-server signal stays below threshold
// for the rest of the path; kBeyondPathEnd if coverage never drops for good.
double coverage_edge(std::span<const RadioNode> nodes, const MobilityTrace& path, Rat rat, double threshold_dbm,
                     const PathLossModel& model, double step_m = 1.0);

}  // namespace roamsim::rf
