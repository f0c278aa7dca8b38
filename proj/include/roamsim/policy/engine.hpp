#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roamsim/policy/geofence.hpp"
#include "roamsim/policy/profile.hpp"
#include "roamsim/traffic.hpp"

namespace roamsim::policy {

enum class Reason { PriorityList, SignalFloor, Geofence, FootprintScan, AppPreference, Congestion };

std::string_view to_string(Reason r);

struct PolicyDecision {
    Rat preferred_rat = Rat::None;
    Reason reason = Reason::SignalFloor;
    bool scan_request = false;
    std::string entry;  // cited list entry, empty when none applies

    friend bool operator==(const PolicyDecision&, const PolicyDecision&) = default;
};

// Best observed signal of one named network.
struct VisibleNetwork {
    Rat rat = Rat::None;
    std::string name;
    double signal_dbm = 0.0;
};

struct Hysteresis {
    double dwell_s = 2.0;
    double margin_db = 3.0;
    // Congestion-driven switches use their own, shorter dwell.
    double congestion_dwell_s = 0.25;
    double congestion_ratio = 1.5;
};

struct PolicyState {
    std::optional<PolicyDecision> last;
    double since = 0.0;
    std::optional<PolicyDecision> pending;
    double pending_since = 0.0;
};

struct PolicyInputs {
    std::span<const VisibleNetwork> signals;
    traffic::Criticality app_class = traffic::Criticality::Critical;
    // Tunnel congestion score per RAT (WIFI, CBRS); 1.0 is nominal.
    std::array<double, 2> congestion{1.0, 1.0};
    const GeofenceSpec* geofence = nullptr;
    Vec2 position;
    std::span<const VisibleCell> macro_cells;
};

struct Evaluation {
    PolicyDecision decision;
    PolicyState state;
};

// Strict first match over rat_order and entry order, no geofence,
// congestion or hysteresis.
PolicyDecision first_match(const RadioPreferenceProfile& profile, std::span<const VisibleNetwork> signals);

Evaluation evaluate(const RadioPreferenceProfile& profile, const PolicyInputs& in, const PolicyState& state, double t,
                    const Hysteresis& hyst = {});

}  // namespace roamsim::policy
