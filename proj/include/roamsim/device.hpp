#pragma once

#include <optional>
#include <string>
#include <vector>

#include "roamsim/types.hpp"

namespace roamsim::device {

// Roaming behavior of one handset model under the stock OS connection manager.
struct DeviceProfile {
    std::string model_name;
    double wifi_disconnect_rssi = -90.0;
    double wifi_disconnect_hold_s = 0.0;
    double wifi_attach_rssi = -85.0;
    double cell_scan_interval_s = 1.0;
    double wifi_scan_interval_s = 1.0;
    double cell_attach_delay_s = 0.5;
    double wifi_attach_delay_s = 0.5;
    double cell_min_rsrp = -110.0;
    bool prefers_wifi = true;
    bool supports_tunnel_client = true;

    void validate() const;
    friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

enum class Phase { Connected, Scanning, Attaching };

struct ConnectionState {
    Rat current_rat = Rat::None;
    Phase phase = Phase::Scanning;
    std::optional<double> attach_complete_at;
    Rat attaching_rat = Rat::None;
    std::optional<double> below_threshold_since;
    std::optional<std::string> serving_node;
    // Second attached RAT during a make-before-break overlap, or permanently
    // in dual-active mode (release_at = +inf).
    Rat secondary_rat = Rat::None;
    std::optional<double> secondary_release_at;
    // Scan clocks: boundaries at offset + k * interval.
    double cell_scan_offset_s = 0.0;
    double wifi_scan_offset_s = 0.0;

    bool attached(Rat r) const { return r != Rat::None && (current_rat == r || secondary_rat == r); }
};

enum class EventKind { Attached, Detached, ScanStarted };

std::string_view to_string(EventKind kind);
std::string_view to_string(Phase phase);

struct ConnectionEvent {
    double t = 0.0;
    EventKind kind = EventKind::Attached;
    Rat rat = Rat::None;
    std::optional<std::string> node_id;
};

// Best sample per RAT at the device position; absent means no coverage.
struct RadioView {
    std::optional<SignalSample> wifi;
    std::optional<SignalSample> cbrs;

    const std::optional<SignalSample>& of(Rat r) const { return r == Rat::Wifi ? wifi : cbrs; }
};

struct StepOptions {
    // Present only under policy control (tunnel mode).
    std::optional<Rat> policy_hint;
    // Keep both RATs attached whenever both have coverage.
    bool dual_active = false;
    // How long the old RAT stays attached after a make-before-break switch.
    double mbb_overlap_s = 0.5;
};

struct StepResult {
    ConnectionState state;
    std::vector<ConnectionEvent> events;
};

// Advances the connection manager by one tick ending at time t.
StepResult step(const ConnectionState& state, const DeviceProfile& profile, const RadioView& signals, double t,
                double tick, const StepOptions& options = {});

struct SwitchInterval {
    Rat from = Rat::None;
    Rat to = Rat::None;
    double t_detach = 0.0;
    double t_attach = 0.0;
    double gap_s = 0.0;
    bool open = false;  // detached and never re-attached before the log ended
};

std::vector<SwitchInterval> switch_intervals(const std::vector<ConnectionEvent>& events);

}  // namespace roamsim::device
