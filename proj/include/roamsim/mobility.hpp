#pragma once

#include <vector>

#include "roamsim/types.hpp"

namespace roamsim {

// Constant-speed walk along straight legs between waypoints. pauses[i], when
// present, is the time spent standing at waypoint i before moving on.
struct MobilityTrace {
    std::vector<Vec2> waypoints;
    double speed_mps = 1.4;
    double start_time_s = 0.0;
    std::vector<double> pauses_s;

    void validate() const;

    double path_length() const;
    double total_pause() const;
    // path_length / speed plus pauses.
    double duration() const;
    double end_time() const { return start_time_s + duration(); }

    Vec2 position_at(double t) const;
    // Distance walked by time t.
    double arclength_at(double t) const;
    Vec2 position_at_arclength(double s) const;
};

}  // namespace roamsim
