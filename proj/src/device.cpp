#include "roamsim/device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace roamsim::device {

namespace {

constexpr double kEps = 1e-9;

// Scan boundary in (t - tick, t], if any.
std::optional<double> boundary_in_tick(double offset, double interval, double t, double tick) {
    const double k = std::floor((t - offset) / interval + kEps);
    const double b = offset + k * interval;
    if (b > t - tick + kEps && b <= t + kEps) return b;
    return std::nullopt;
}

double signal_or_floor(const std::optional<SignalSample>& s) {
    return s ? s->value_dbm : -std::numeric_limits<double>::infinity();
}

struct Stepper {
    const DeviceProfile& profile;
    const RadioView& view;
    double t;
    double tick;
    const StepOptions& options;
    ConnectionState s;
    std::vector<ConnectionEvent> events;

    void emit(EventKind kind, Rat rat) {
        std::optional<std::string> node;
        if (kind != EventKind::ScanStarted && view.of(rat)) node = view.of(rat)->node_id;
        events.push_back(ConnectionEvent{t, kind, rat, std::move(node)});
    }

    double attach_delay(Rat r) const {
        return r == Rat::Wifi ? profile.wifi_attach_delay_s : profile.cell_attach_delay_s;
    }

    bool wifi_attachable() const { return signal_or_floor(view.wifi) >= profile.wifi_attach_rssi; }
    bool cbrs_attachable() const { return signal_or_floor(view.cbrs) >= profile.cell_min_rsrp; }
    bool attachable(Rat r) const { return r == Rat::Wifi ? wifi_attachable() : cbrs_attachable(); }

    void begin_attach(Rat target, double from) {
        s.phase = Phase::Attaching;
        s.attaching_rat = target;
        s.attach_complete_at = from + attach_delay(target);
    }

    void clear_attach() {
        s.attaching_rat = Rat::None;
        s.attach_complete_at.reset();
    }

    void enter_scanning() {
        s.current_rat = Rat::None;
        s.phase = Phase::Scanning;
        s.below_threshold_since.reset();
        clear_attach();
        emit(EventKind::ScanStarted, Rat::None);
    }

    // Detaches the current RAT. A still-attached secondary takes over.
    void drop_current() {
        emit(EventKind::Detached, s.current_rat);
        s.below_threshold_since.reset();
        if (s.secondary_rat != Rat::None) {
            s.current_rat = s.secondary_rat;
            s.secondary_rat = Rat::None;
            s.secondary_release_at.reset();
            if (s.phase != Phase::Attaching) s.phase = Phase::Connected;
            return;
        }
        if (s.phase == Phase::Attaching) {
            s.current_rat = Rat::None;
            return;
        }
        enter_scanning();
    }

    // OS disconnect rules for the RAT currently carrying traffic.
    bool current_lost() {
        if (s.current_rat == Rat::Wifi) {
            if (signal_or_floor(view.wifi) < profile.wifi_disconnect_rssi) {
                if (!s.below_threshold_since) s.below_threshold_since = t;
                return t - *s.below_threshold_since >= profile.wifi_disconnect_hold_s - kEps;
            }
            s.below_threshold_since.reset();
            return false;
        }
        if (s.current_rat == Rat::Cbrs) return !cbrs_attachable();
        return false;
    }

    void release_secondary() {
        if (s.secondary_rat == Rat::None) return;
        const Rat r = s.secondary_rat;
        const bool expired = s.secondary_release_at && t >= *s.secondary_release_at - kEps;
        const bool lost = r == Rat::Wifi ? signal_or_floor(view.wifi) < profile.wifi_disconnect_rssi
                                         : !cbrs_attachable();
        if (expired || lost) {
            emit(EventKind::Detached, r);
            s.secondary_rat = Rat::None;
            s.secondary_release_at.reset();
        }
    }

    void finish_attach(bool policy_mode) {
        const Rat target = s.attaching_rat;
        if (!view.of(target)) {
            // Target vanished mid-attach.
            clear_attach();
            if (s.current_rat == Rat::None) enter_scanning();
            else s.phase = Phase::Connected;
            return;
        }
        if (t < *s.attach_complete_at - kEps) return;
        emit(EventKind::Attached, target);
        clear_attach();
        s.phase = Phase::Connected;
        if (s.current_rat == Rat::None) {
            s.current_rat = target;
            return;
        }
        // Make-before-break: the previous RAT lingers as secondary.
        const bool promote = !policy_mode || !options.dual_active || options.policy_hint == target;
        if (promote) {
            s.secondary_rat = s.current_rat;
            s.current_rat = target;
            s.below_threshold_since.reset();
        } else {
            s.secondary_rat = target;
        }
        s.secondary_release_at = options.dual_active ? std::numeric_limits<double>::infinity()
                                                     : t + options.mbb_overlap_s;
    }

    // Break-before-make search for any RAT, honoring scan clocks.
    void scan_traditional() {
        const auto cell_b = boundary_in_tick(s.cell_scan_offset_s, profile.cell_scan_interval_s, t, tick);
        const auto wifi_b = boundary_in_tick(s.wifi_scan_offset_s, profile.wifi_scan_interval_s, t, tick);
        const bool wifi_ok = wifi_b && wifi_attachable();
        const bool cell_ok = cell_b && cbrs_attachable();
        if (profile.prefers_wifi && wifi_ok) begin_attach(Rat::Wifi, *wifi_b);
        else if (cell_ok) begin_attach(Rat::Cbrs, *cell_b);
        else if (wifi_ok) begin_attach(Rat::Wifi, *wifi_b);
        if (s.phase == Phase::Attaching) finish_attach(false);
    }

    void run_traditional() {
        if (s.phase == Phase::Attaching) {
            finish_attach(false);
            return;
        }
        if (s.phase == Phase::Scanning) {
            scan_traditional();
            return;
        }
        if (current_lost()) {
            drop_current();
            if (s.phase == Phase::Scanning) scan_traditional();
            return;
        }
        if (s.current_rat == Rat::Cbrs && profile.prefers_wifi) {
            const auto wifi_b = boundary_in_tick(s.wifi_scan_offset_s, profile.wifi_scan_interval_s, t, tick);
            if (wifi_b && wifi_attachable()) {
                emit(EventKind::Detached, Rat::Cbrs);
                s.current_rat = Rat::None;
                begin_attach(Rat::Wifi, *wifi_b);
                finish_attach(false);
            }
        }
    }

    void run_policy(Rat hint) {
        release_secondary();
        if (s.phase == Phase::Attaching) finish_attach(true);

        if (s.current_rat != Rat::None && current_lost()) drop_current();

        if (s.phase == Phase::Scanning || (s.current_rat == Rat::None && s.phase != Phase::Attaching)) {
            s.phase = Phase::Scanning;
            const Rat fallback = hint == Rat::None ? Rat::None : other_rat(hint);
            if (hint != Rat::None && attachable(hint)) {
                begin_attach(hint, t);
                finish_attach(true);
            } else if (fallback != Rat::None && attachable(fallback)) {
                // The tunnel client drives the connection manager: no scan wait.
                begin_attach(fallback, t);
                finish_attach(true);
            } else {
                scan_traditional();
            }
            return;
        }
        if (s.phase != Phase::Connected) return;

        if (hint != Rat::None && hint != s.current_rat) {
            if (s.secondary_rat == hint) {
                // Already attached in parallel: just swap roles.
                std::swap(s.current_rat, s.secondary_rat);
                s.below_threshold_since.reset();
                s.secondary_release_at = options.dual_active ? std::numeric_limits<double>::infinity()
                                                             : t + options.mbb_overlap_s;
            } else if (view.of(hint)) {
                begin_attach(hint, t);
                finish_attach(true);
            }
            return;
        }
        if (options.dual_active && s.secondary_rat == Rat::None) {
            const Rat other = other_rat(s.current_rat);
            if (attachable(other)) {
                begin_attach(other, t);
                finish_attach(true);
            }
        }
    }
};

}  // namespace

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Attached: return "ATTACHED";
        case EventKind::Detached: return "DETACHED";
        case EventKind::ScanStarted: return "SCAN_STARTED";
    }
    return "?";
}

std::string_view to_string(Phase phase) {
    switch (phase) {
        case Phase::Connected: return "CONNECTED";
        case Phase::Scanning: return "SCANNING";
        case Phase::Attaching: return "ATTACHING";
    }
    return "?";
}

void DeviceProfile::validate() const {
    auto finite_nonneg = [&](double v, const char* what) {
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument(model_name + ": " + what + " must be finite and >= 0");
    };
    finite_nonneg(wifi_disconnect_hold_s, "wifi_disconnect_hold");
    finite_nonneg(cell_attach_delay_s, "cell_attach_delay");
    finite_nonneg(wifi_attach_delay_s, "wifi_attach_delay");
    if (!(cell_scan_interval_s > 0.0) || !(wifi_scan_interval_s > 0.0))
        throw std::invalid_argument(model_name + ": scan intervals must be > 0");
    if (!(wifi_attach_rssi > wifi_disconnect_rssi))
        throw std::invalid_argument(model_name + ": wifi_attach_rssi must exceed wifi_disconnect_rssi");
    if (!std::isfinite(cell_min_rsrp)) throw std::invalid_argument(model_name + ": cell_min_rsrp not finite");
}

StepResult step(const ConnectionState& state, const DeviceProfile& profile, const RadioView& signals, double t,
                double tick, const StepOptions& options) {
    if (!(tick > 0.0)) throw std::invalid_argument("step: tick must be > 0");
    Stepper st{profile, signals, t, tick, options, state, {}};
    if (options.policy_hint) st.run_policy(*options.policy_hint);
    else st.run_traditional();

    if (st.s.current_rat != Rat::None && signals.of(st.s.current_rat))
        st.s.serving_node = signals.of(st.s.current_rat)->node_id;
    else
        st.s.serving_node.reset();
    return StepResult{std::move(st.s), std::move(st.events)};
}

std::vector<SwitchInterval> switch_intervals(const std::vector<ConnectionEvent>& events) {
    std::vector<SwitchInterval> out;
    std::vector<Rat> attached;
    std::optional<ConnectionEvent> open_detach;
    // ATTACHED on a new RAT while another was still attached.
    std::optional<ConnectionEvent> early_attach;

    auto is_attached = [&](Rat r) { return std::find(attached.begin(), attached.end(), r) != attached.end(); };

    for (const ConnectionEvent& e : events) {
        if (e.kind == EventKind::ScanStarted) continue;
        if (e.kind == EventKind::Attached) {
            if (open_detach) {
                if (open_detach->rat != e.rat) {
                    out.push_back({open_detach->rat, e.rat, open_detach->t, e.t, e.t - open_detach->t, false});
                }
                open_detach.reset();
            } else if (!attached.empty() && !is_attached(e.rat)) {
                early_attach = e;
            }
            if (!is_attached(e.rat)) attached.push_back(e.rat);
            continue;
        }
        // DETACHED
        std::erase(attached, e.rat);
        if (early_attach && early_attach->rat != e.rat) {
            out.push_back({e.rat, early_attach->rat, e.t, early_attach->t, 0.0, false});
            early_attach.reset();
        } else if (attached.empty()) {
            open_detach = e;
        }
        if (early_attach && early_attach->rat == e.rat) early_attach.reset();
    }
    if (open_detach) {
        out.push_back({open_detach->rat, Rat::None, open_detach->t, std::numeric_limits<double>::quiet_NaN(),
                       std::numeric_limits<double>::quiet_NaN(), true});
    }
    return out;
}

}  // namespace roamsim::device
