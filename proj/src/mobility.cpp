#include "roamsim/mobility.hpp"

#include <algorithm>
#include <stdexcept>

namespace roamsim {

namespace {

double pause_at(const MobilityTrace& trace, std::size_t i) {
    return i < trace.pauses_s.size() ? trace.pauses_s[i] : 0.0;
}

}  // namespace

void MobilityTrace::validate() const {
    if (waypoints.empty()) throw std::invalid_argument("mobility trace needs at least one waypoint");
    if (!(speed_mps > 0.0) || !std::isfinite(speed_mps))
        throw std::invalid_argument("mobility speed must be positive");
    if (!std::isfinite(start_time_s) || start_time_s < 0.0)
        throw std::invalid_argument("mobility start time must be finite and non-negative");
    if (pauses_s.size() > waypoints.size())
        throw std::invalid_argument("more pauses than waypoints");
    for (double p : pauses_s) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("pauses must be non-negative");
    }
    for (const Vec2& w : waypoints) {
        if (!is_finite(w)) throw std::invalid_argument("waypoint is not finite");
    }
}

double MobilityTrace::path_length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) len += distance(waypoints[i - 1], waypoints[i]);
    return len;
}

double MobilityTrace::total_pause() const {
    double total = 0.0;
    for (double p : pauses_s) total += p;
    return total;
}

double MobilityTrace::duration() const { return path_length() / speed_mps + total_pause(); }

double MobilityTrace::arclength_at(double t) const {
    double remaining = t - start_time_s;
    if (remaining <= 0.0 || waypoints.size() < 2) return 0.0;
    double walked = 0.0;
    for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
        const double pause = pause_at(*this, i);
        if (remaining <= pause) return walked;
        remaining -= pause;
        const double leg = distance(waypoints[i], waypoints[i + 1]);
        const double leg_time = leg / speed_mps;
        if (remaining <= leg_time) return walked + remaining * speed_mps;
        remaining -= leg_time;
        walked += leg;
    }
    return walked;
}

Vec2 MobilityTrace::position_at_arclength(double s) const {
    if (waypoints.size() == 1 || s <= 0.0) return waypoints.front();
    for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
        const Vec2 a = waypoints[i];
        const Vec2 b = waypoints[i + 1];
        const double leg = distance(a, b);
        if (s <= leg) {
            if (leg == 0.0) return b;
            return a + (b - a) * (s / leg);
        }
        s -= leg;
    }
    return waypoints.back();
}

Vec2 MobilityTrace::position_at(double t) const { return position_at_arclength(arclength_at(t)); }

}  // namespace roamsim
