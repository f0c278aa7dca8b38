#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "roamsim/device.hpp"
#include "roamsim/event_log.hpp"
#include "roamsim/kernels.hpp"
#include "roamsim/scenario.hpp"
#include "roamsim/traffic.hpp"

namespace roamsim::sim {

struct FlowResult {
    traffic::FlowSpec spec;
    std::vector<traffic::DeliveryRecord> records;
    std::vector<traffic::InterruptionRecord> interruptions;
    std::vector<traffic::Stall> stalls;
};

struct TunnelStats {
    std::size_t ul_frames = 0;
    std::size_t dl_frames = 0;
    std::size_t probes = 0;
    std::size_t duplicates_dropped = 0;
    std::size_t stale_dropped = 0;
    std::size_t buffer_drops = 0;
    std::size_t reflection_violations = 0;
    std::size_t duplicate_deliveries = 0;
};

struct DeviceRun {
    std::string device_id;
    std::string profile_name;
    Mode mode = Mode::Traditional;
    std::uint64_t seed = 0;
    std::vector<device::ConnectionEvent> events;
    std::vector<device::SwitchInterval> transitions;
    std::vector<FlowResult> flows;
    TunnelStats tunnel;
    std::string inner_address;  // tunnel mode only

    const FlowResult* flow(std::string_view id) const;
};

struct RunOptions {
    bool keep_log = true;
    // Run every device in this mode instead of its configured one.
    std::optional<Mode> mode_override;
    bool signal_samples = true;
};

struct RunResult {
    std::uint64_t seed = 0;
    std::vector<DeviceRun> devices;
    log::EventLog log;
};

// One radio track per scenario device.
std::vector<kernels::RadioTrack> precompute_tracks(const Scenario& sc, bool parallel = true);

DeviceRun run_device(const Scenario& sc, const DeviceConfig& dev, const kernels::RadioTrack& track, std::uint64_t seed,
                     Mode mode, log::EventLog* log, bool signal_samples = true);

// Transitions, interruptions and stalls from events and delivery records.
void derive_metrics(DeviceRun& run);

RunResult run(const Scenario& sc, std::uint64_t seed, const RunOptions& opts = {});
RunResult run(const Scenario& sc, std::uint64_t seed, const RunOptions& opts,
              const std::vector<kernels::RadioTrack>& tracks);

std::vector<std::uint64_t> default_seeds(const Scenario& sc);

// Independent runs over seeds; results are ordered like `seeds`.
std::vector<RunResult> run_seeds_serial(const Scenario& sc, std::span<const std::uint64_t> seeds,
                                        const RunOptions& opts);
std::vector<RunResult> run_seeds_parallel(const Scenario& sc, std::span<const std::uint64_t> seeds,
                                          const RunOptions& opts);

// Replays the frame records of a log: DL data frames whose RAT differs from
// the most recent prior UL data frame of the same session.
std::size_t reflection_violations(const log::EventLog& log);
// Number of distinct inner addresses seen per device, minus one, summed.
std::size_t inner_address_changes(const log::EventLog& log);

}  // namespace roamsim::sim
