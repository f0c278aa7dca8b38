#pragma once

#include <optional>
#include <string>
#include <vector>

#include "roamsim/event_log.hpp"
#include "roamsim/sim.hpp"

namespace roamsim::report {

// Switch statistics over seeds for one device x mode x direction x flow.
struct Cell {
    std::string device;
    std::string profile;
    Mode mode = Mode::Traditional;
    std::string flow;
    Rat from = Rat::None;
    Rat to = Rat::None;
    // Per seed: worst measurable transition in this direction. Seeds without
    // one are not counted.
    std::vector<double> switch_s;
    std::vector<double> max_gap_s;
    double mean_switch_s = 0.0;
    double min_switch_s = 0.0;
    double max_switch_s = 0.0;
    double mean_gap_s = 0.0;
    double min_gap_s = 0.0;
    double max_gap_max_s = 0.0;
    bool seamless = false;  // mean gap below the seamless bound

    std::size_t seeds() const { return max_gap_s.size(); }
};

struct Rebuffer {
    std::string device;
    Mode mode = Mode::Traditional;
    std::string flow;
    std::size_t runs = 0;
    std::size_t events = 0;
    double total_s = 0.0;
};

struct ThroughputSample {
    std::string device;
    Mode mode = Mode::Traditional;
    double t = 0.0;
    Vec2 position;
    double wifi_rate_mbps = 0.0;
    double cbrs_rate_mbps = 0.0;
    Rat serving = Rat::None;
    double serving_rate_mbps = 0.0;
};

struct Report {
    std::vector<Cell> cells;
    std::vector<Rebuffer> rebuffers;
    std::vector<ThroughputSample> throughput;

    const Cell* find(std::string_view device, Mode mode, std::string_view flow, Rat from) const;
};

inline constexpr Rat kDirections[2][2] = {{Rat::Wifi, Rat::Cbrs}, {Rat::Cbrs, Rat::Wifi}};

Report build(const std::vector<sim::DeviceRun>& runs);
void add_throughput(Report& r, const log::EventLog& log);

// Rebuilds device runs (events, flows, deliveries) from a log holding one run
// per device, then re-derives transitions, interruptions and stalls.
std::vector<sim::DeviceRun> runs_from_log(const log::EventLog& log);
Report from_logs(const std::vector<log::EventLog>& logs, bool throughput = true);

// One row per (device, mode, flow) with both directions side by side.
std::string cells_csv(const Report& r);
std::string rebuffer_csv(const Report& r);
std::string throughput_csv(const Report& r);
// Shopping-table layout: "1.0 S" or "Seamless" per direction.
std::string human_table(const Report& r, std::string_view flow, Mode mode);
std::string format_cell(const Cell* c);

}  // namespace roamsim::report
