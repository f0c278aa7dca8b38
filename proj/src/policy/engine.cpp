#include "roamsim/policy/engine.hpp"

#include <cmath>
#include <limits>

namespace roamsim::policy {

namespace {

constexpr double kEps = 1e-9;

std::optional<double> strongest(std::span<const VisibleNetwork> signals, Rat rat, const std::string& name) {
    std::optional<double> best;
    for (const auto& s : signals)
        if (s.rat == rat && s.name == name && (!best || s.signal_dbm > *best)) best = s.signal_dbm;
    return best;
}

struct Match {
    const PreferenceEntry* entry = nullptr;
    double signal_dbm = 0.0;
};

std::optional<Match> match_rat(const RadioPreferenceProfile& p, std::span<const VisibleNetwork> signals, Rat rat) {
    for (const auto& e : p.entries(rat)) {
        const auto s = strongest(signals, rat, e.name);
        if (s && *s >= e.threshold_dbm) return Match{&e, *s};
    }
    return std::nullopt;
}

std::size_t slot(Rat r) { return r == Rat::Wifi ? 0 : 1; }

// Signal margin of the decision's cited entry above its floor.
std::optional<double> headroom(const RadioPreferenceProfile& p, std::span<const VisibleNetwork> signals,
                               const PolicyDecision& d) {
    if (d.preferred_rat == Rat::None || d.entry.empty()) return std::nullopt;
    for (const auto& e : p.entries(d.preferred_rat)) {
        if (e.name != d.entry) continue;
        const auto s = strongest(signals, d.preferred_rat, e.name);
        if (!s) return std::nullopt;
        return *s - e.threshold_dbm;
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(Reason r) {
    switch (r) {
        case Reason::PriorityList: return "PRIORITY_LIST";
        case Reason::SignalFloor: return "SIGNAL_FLOOR";
        case Reason::Geofence: return "GEOFENCE";
        case Reason::FootprintScan: return "FOOTPRINT_SCAN";
        case Reason::AppPreference: return "APP_PREFERENCE";
        case Reason::Congestion: return "CONGESTION";
    }
    return "?";
}

PolicyDecision first_match(const RadioPreferenceProfile& p, std::span<const VisibleNetwork> signals) {
    PolicyDecision d;
    int met = 0;
    for (Rat r : p.rat_order) {
        const auto m = match_rat(p, signals, r);
        if (!m) continue;
        ++met;
        if (d.preferred_rat == Rat::None) {
            d.preferred_rat = r;
            d.entry = m->entry->name;
        }
    }
    d.reason = met > 1 ? Reason::PriorityList : Reason::SignalFloor;
    return d;
}

Evaluation evaluate(const RadioPreferenceProfile& p, const PolicyInputs& in, const PolicyState& state, double t,
                    const Hysteresis& hyst) {
    PolicyDecision cand = first_match(p, in.signals);

    // Geofence / radio footprint: look for the private network first.
    if (in.geofence) {
        const bool inside = geofence_contains(*in.geofence, in.position);
        const bool footprint = !inside && footprint_trigger(*in.geofence, in.macro_cells);
        if (inside || footprint) {
            cand.scan_request = true;
            const auto m = match_rat(p, in.signals, Rat::Cbrs);
            if (m || cand.preferred_rat == Rat::None) {
                cand.preferred_rat = Rat::Cbrs;
                cand.entry = m ? m->entry->name : std::string();
                cand.reason = inside ? Reason::Geofence : Reason::FootprintScan;
            }
        }
    }

    // Relative congestion: move to the other RAT if it is usable and the
    // chosen one scores worse by the configured ratio.
    if (cand.preferred_rat == Rat::Wifi || cand.preferred_rat == Rat::Cbrs) {
        const Rat other = other_rat(cand.preferred_rat);
        const auto m = match_rat(p, in.signals, other);
        if (m && in.congestion[slot(cand.preferred_rat)] > hyst.congestion_ratio * in.congestion[slot(other)]) {
            cand.preferred_rat = other;
            cand.entry = m->entry->name;
            cand.reason = Reason::Congestion;
        }
    }

    Evaluation out{cand, state};
    PolicyState& s = out.state;
    auto adopt = [&](const PolicyDecision& d) {
        s.last = d;
        s.since = t;
        s.pending.reset();
        out.decision = d;
    };

    if (!s.last) {
        adopt(cand);
        return out;
    }
    if (cand.preferred_rat == s.last->preferred_rat) {
        const double since = s.since;
        adopt(cand);
        s.since = since;
        return out;
    }
    // A critical application is never left without a RAT while one qualifies.
    if (in.app_class == traffic::Criticality::Critical && s.last->preferred_rat == Rat::None) {
        cand.reason = Reason::AppPreference;
        adopt(cand);
        return out;
    }
    const auto room = headroom(p, in.signals, cand);
    const bool clears_margin = !room || *room >= hyst.margin_db - kEps;
    if (!clears_margin) {
        s.pending.reset();
        out.decision = *s.last;
        return out;
    }
    const double dwell = cand.reason == Reason::Congestion ? hyst.congestion_dwell_s : hyst.dwell_s;
    if (!s.pending || s.pending->preferred_rat != cand.preferred_rat) {
        s.pending = cand;
        s.pending_since = t;
    }
    if (t - s.pending_since >= dwell - kEps) {
        adopt(cand);
        return out;
    }
    out.decision = *s.last;
    return out;
}

}  // namespace roamsim::policy
