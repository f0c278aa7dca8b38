#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "roamsim/device.hpp"
#include "roamsim/kernels.hpp"
#include "roamsim/scenario.hpp"

namespace roamsim::calibrate {

// A table cell: either a switch time in seconds or "Seamless" (stall < 0.5 s).
struct CellTarget {
    bool seamless = false;
    double seconds = 0.0;
};

struct Target {
    std::string model_name;
    CellTarget wifi_to_cell;
    CellTarget cell_to_wifi;
    std::optional<CellTarget> zoom_wifi_to_cell;
    // LIVE flow, tunnel mode.
    std::optional<CellTarget> tunnel_wifi_to_cell;
    bool supports_tunnel_client = true;
};

struct Targets {
    double tolerance_s = 0.5;
    std::vector<Target> targets;
};

Targets parse_targets(const std::string& text, const std::string& file_name);
Targets load_targets(const std::filesystem::path& path);

// Reference walk, flows and seeds every candidate profile is scored on.
struct Reference {
    Scenario scenario;
    DeviceConfig device;  // first scenario device, INTERACTIVE + LIVE flows only
    kernels::RadioTrack track;
    std::vector<std::uint64_t> seeds;
    std::string interactive_flow;
    std::string live_flow;
    // First time the Wi-Fi rate drops below the LIVE flow's demand; NaN if never.
    double live_edge_s = 0.0;
    // Earliest allowed Wi-Fi detach relative to live_edge_s.
    double detach_margin_s = 0.4;
};

Reference make_reference(const Scenario& sc, std::vector<std::uint64_t> seeds = {});

// Mean over seeds of the worst per-run stall in each direction.
struct Measured {
    double wifi_to_cell = 0.0;
    double cell_to_wifi = 0.0;
    double zoom_wifi_to_cell = 0.0;
    std::optional<double> tunnel_wifi_to_cell;
    bool detach_after_edge = true;
};

Measured measure(const Reference& ref, const device::DeviceProfile& profile);
// Mean worst LIVE-flow Wi-Fi -> cell gap with the tunnel client.
double measure_tunnel(const Reference& ref, const device::DeviceProfile& profile);

struct Residual {
    std::string cell;
    CellTarget target;
    double measured = 0.0;
    double residual = 0.0;
    bool ok = false;
};

struct CalibrationResult {
    device::DeviceProfile profile;
    Measured measured;
    std::vector<Residual> residuals;
    bool within_tolerance = false;
    std::size_t evaluations = 0;
};

class CalibrationError : public std::runtime_error {
public:
    explicit CalibrationError(CalibrationResult best);
    const CalibrationResult& best() const { return best_; }

private:
    CalibrationResult best_;
};

std::vector<Residual> residuals(const Target& target, const Measured& m, double tolerance_s);

// Deterministic coordinate descent over a fixed parameter grid.
CalibrationResult calibrate_profile(const Target& target, const Reference& ref, double tolerance_s = 0.5);

struct Library {
    std::vector<CalibrationResult> results;
    bool ok = true;

    std::vector<device::DeviceProfile> profiles() const;
};

Library calibrate_all(const Targets& targets, const Reference& ref);
std::string residual_report(const Library& lib);

}  // namespace roamsim::calibrate
