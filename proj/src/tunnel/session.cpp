#include "roamsim/tunnel/session.hpp"

#include <cmath>
#include <stdexcept>

namespace roamsim::tunnel {

namespace {

constexpr double kEps = 1e-9;

std::size_t index_of(Rat r) {
    if (r == Rat::Wifi) return 0;
    if (r == Rat::Cbrs) return 1;
    throw std::invalid_argument("tunnel path must be WIFI or CBRS");
}

void update_score(PathState& p, const TunnelConfig& cfg) {
    p.congestion_score = p.measured ? p.rtt_ewma_ms / cfg.rtt_ref_ms(p.rat) + cfg.loss_weight * p.loss_ewma : 1.0;
}

}  // namespace

std::string_view to_string(TunnelMode m) {
    switch (m) {
        case TunnelMode::Single: return "SINGLE";
        case TunnelMode::MakeBeforeBreak: return "MAKE_BEFORE_BREAK";
        case TunnelMode::Duplicate: return "DUPLICATE";
        case TunnelMode::Split: return "SPLIT";
    }
    return "?";
}

TunnelMode parse_tunnel_mode(std::string_view text) {
    if (text == "SINGLE") return TunnelMode::Single;
    if (text == "MAKE_BEFORE_BREAK") return TunnelMode::MakeBeforeBreak;
    if (text == "DUPLICATE") return TunnelMode::Duplicate;
    if (text == "SPLIT") return TunnelMode::Split;
    throw std::invalid_argument("unknown tunnel mode '" + std::string(text) + "'");
}

std::string_view to_string(DedupResult r) {
    switch (r) {
        case DedupResult::Accept: return "accept";
        case DedupResult::Duplicate: return "duplicate";
        case DedupResult::Stale: return "stale";
    }
    return "?";
}

void TunnelConfig::validate() const {
    if (!(probe_interval_s > 0.0)) throw std::invalid_argument("tunnel: probe_interval must be > 0");
    if (dead_after_missed < 1) throw std::invalid_argument("tunnel: dead_after_missed must be >= 1");
    if (!(rtt_base_wifi_ms > 0.0) || !(rtt_base_cbrs_ms > 0.0))
        throw std::invalid_argument("tunnel: base RTTs must be > 0");
    if (!(ewma_alpha > 0.0 && ewma_alpha <= 1.0)) throw std::invalid_argument("tunnel: ewma_alpha must be in (0, 1]");
    if (!(loss_weight >= 0.0)) throw std::invalid_argument("tunnel: loss_weight must be >= 0");
    if (!(congestion_ratio >= 1.0)) throw std::invalid_argument("tunnel: congestion_ratio must be >= 1");
    if (congestion_rounds < 1) throw std::invalid_argument("tunnel: congestion_rounds must be >= 1");
    if (recv_window == 0 || buffer_frames == 0) throw std::invalid_argument("tunnel: window and buffer sizes must be > 0");
    if (inner_address.empty()) throw std::invalid_argument("tunnel: inner_address is empty");
}

void record_ack(PathState& p, double rtt_ms, const TunnelConfig& cfg) {
    if (!p.measured) {
        p.rtt_ewma_ms = rtt_ms;
        p.loss_ewma = 0.0;
        p.measured = true;
    } else {
        p.rtt_ewma_ms = cfg.ewma_alpha * rtt_ms + (1.0 - cfg.ewma_alpha) * p.rtt_ewma_ms;
        p.loss_ewma = (1.0 - cfg.ewma_alpha) * p.loss_ewma;
    }
    update_score(p, cfg);
}

void record_loss(PathState& p, const TunnelConfig& cfg) {
    if (!p.measured) {
        p.rtt_ewma_ms = cfg.rtt_ref_ms(p.rat);
        p.measured = true;
    }
    p.loss_ewma = cfg.ewma_alpha + (1.0 - cfg.ewma_alpha) * p.loss_ewma;
    update_score(p, cfg);
}

RecvWindow::RecvWindow(std::size_t size) : bits_(size, false) {
    if (size == 0) throw std::invalid_argument("receive window size must be > 0");
}

DedupResult RecvWindow::offer(std::uint32_t seq) {
    const std::uint64_t n = bits_.size();
    const std::uint64_t s = seq;
    if (!highest_) {
        highest_ = s;
        bits_[s % n] = true;
        return DedupResult::Accept;
    }
    const std::uint64_t hi = *highest_;
    if (s > hi) {
        if (s - hi >= n) {
            std::fill(bits_.begin(), bits_.end(), false);
        } else {
            for (std::uint64_t k = hi + 1; k <= s; ++k) bits_[k % n] = false;
        }
        highest_ = s;
        bits_[s % n] = true;
        return DedupResult::Accept;
    }
    if (hi - s >= n) return DedupResult::Stale;
    if (bits_[s % n]) return DedupResult::Duplicate;
    bits_[s % n] = true;
    return DedupResult::Accept;
}

SessionState::SessionState(std::uint64_t id, const TunnelConfig& cfg)
    : session_id(id),
      inner_address(cfg.inner_address),
      mode(cfg.mode),
      ul_window(cfg.recv_window),
      dl_window(cfg.recv_window) {
    paths[0].rat = Rat::Wifi;
    paths[1].rat = Rat::Cbrs;
}

PathState& SessionState::path(Rat r) { return paths[index_of(r)]; }
const PathState& SessionState::path(Rat r) const { return paths[index_of(r)]; }

void set_attached(SessionState& s, Rat r, bool attached, double t) {
    PathState& p = s.path(r);
    if (attached == p.attached) return;
    p.attached = attached;
    p.alive = attached;
    // Scores are only meaningful for the current attachment.
    p.measured = false;
    p.rtt_ewma_ms = 0.0;
    p.loss_ewma = 0.0;
    p.missed = 0;
    p.round_trips = 0;
    p.pending_ack_at.reset();
    p.pending_lost = false;
    p.congestion_score = 1.0;
    if (attached) p.next_probe_at = t;  // probe a new path immediately
    if (!attached && s.active_rat == r) s.active_rat = Rat::None;
}

void advance_probes(SessionState& s, const TunnelConfig& cfg, double t, const std::function<ProbeResult(Rat)>& send,
                    const std::function<void(const TunnelFrame&, double)>& trace) {
    for (PathState& p : s.paths) {
        if (!p.attached) continue;
        if (p.pending_ack_at && *p.pending_ack_at <= t + kEps) {
            record_ack(p, p.pending_rtt_ms, cfg);
            p.pending_ack_at.reset();
            p.missed = 0;
            p.alive = true;
            ++p.round_trips;
        }
        if (t + kEps < p.next_probe_at) continue;
        if (p.pending_lost || p.pending_ack_at) {
            // Previous probe timed out.
            p.pending_lost = false;
            p.pending_ack_at.reset();
            ++p.missed;
            record_loss(p, cfg);
            if (p.missed >= cfg.dead_after_missed) p.alive = false;
        }
        TunnelFrame probe;
        probe.direction = FrameDirection::Ul;
        probe.rat = p.rat;
        probe.probe = true;
        probe.session_id = s.session_id;
        probe.timestamp_ms = static_cast<std::uint64_t>(std::llround(t * 1000.0));
        const TunnelFrame wire = decode_frame(encode_frame(probe));
        if (trace) trace(wire, t);
        const ProbeResult r = send(p.rat);
        if (r.delivered) {
            p.pending_ack_at = t + r.rtt_ms / 1000.0;
            p.pending_rtt_ms = r.rtt_ms;
            if (*p.pending_ack_at <= t + kEps) {
                record_ack(p, r.rtt_ms, cfg);
                p.pending_ack_at.reset();
                p.missed = 0;
                p.alive = true;
                ++p.round_trips;
            }
        } else {
            p.pending_lost = true;
        }
        p.last_probe_at = t;
        p.next_probe_at = std::max(p.next_probe_at + cfg.probe_interval_s, t + kEps);
        while (p.next_probe_at <= t + kEps) p.next_probe_at += cfg.probe_interval_s;
    }
}

std::vector<Rat> client_select_path(SessionState& s, Rat preferred, const std::array<double, 2>& rate) {
    const bool wifi_ok = s.paths[0].usable();
    const bool cbrs_ok = s.paths[1].usable();
    auto ok = [&](Rat r) { return r == Rat::Wifi ? wifi_ok : r == Rat::Cbrs ? cbrs_ok : false; };
    switch (s.mode) {
        case TunnelMode::Duplicate: {
            std::vector<Rat> out;
            if (wifi_ok) out.push_back(Rat::Wifi);
            if (cbrs_ok) out.push_back(Rat::Cbrs);
            if (!out.empty()) s.active_rat = ok(preferred) ? preferred : out.front();
            else s.active_rat = Rat::None;
            return out;
        }
        case TunnelMode::Split: {
            const double w0 = wifi_ok ? rate[0] : 0.0;
            const double w1 = cbrs_ok ? rate[1] : 0.0;
            if (w0 <= 0.0 && w1 <= 0.0) {
                s.active_rat = wifi_ok ? Rat::Wifi : cbrs_ok ? Rat::Cbrs : Rat::None;
                return s.active_rat == Rat::None ? std::vector<Rat>{} : std::vector<Rat>{s.active_rat};
            }
            // Smooth weighted round robin.
            s.split_credit[0] += w0;
            s.split_credit[1] += w1;
            const std::size_t pick = (w1 > 0.0 && (w0 <= 0.0 || s.split_credit[1] > s.split_credit[0])) ? 1 : 0;
            s.split_credit[pick] -= w0 + w1;
            s.active_rat = pick == 0 ? Rat::Wifi : Rat::Cbrs;
            return {s.active_rat};
        }
        case TunnelMode::Single:
        case TunnelMode::MakeBeforeBreak: {
            const bool single = s.mode == TunnelMode::Single;
            auto can_switch_to = [&](Rat r) {
                if (r != Rat::Wifi && r != Rat::Cbrs) return false;
                return single ? s.path(r).alive : s.path(r).usable();
            };
            Rat choice = Rat::None;
            if (can_switch_to(preferred)) choice = preferred;
            else if (s.active_rat != Rat::None && s.path(s.active_rat).alive) choice = s.active_rat;
            else if (can_switch_to(other_rat(preferred))) choice = other_rat(preferred);
            else if (preferred == Rat::None && can_switch_to(Rat::Wifi)) choice = Rat::Wifi;
            else if (preferred == Rat::None && can_switch_to(Rat::Cbrs)) choice = Rat::Cbrs;
            s.active_rat = choice;
            return choice == Rat::None ? std::vector<Rat>{} : std::vector<Rat>{choice};
        }
    }
    return {};
}

DedupResult server_receive_ul(SessionState& s, const TunnelFrame& f) {
    if (f.session_id != s.session_id) throw std::invalid_argument("frame for a different session");
    if (f.probe) return DedupResult::Accept;
    s.last_ul_rat = f.rat;
    return s.ul_window.offer(f.seq);
}

std::optional<Rat> server_route_dl(const SessionState& s) {
    if (s.last_ul_rat == Rat::None) return std::nullopt;
    return s.last_ul_rat;
}

DedupResult client_receive_dl(SessionState& s, const TunnelFrame& f) {
    if (f.session_id != s.session_id) throw std::invalid_argument("frame for a different session");
    if (f.probe) return DedupResult::Accept;
    return s.dl_window.offer(f.seq);
}

}  // namespace roamsim::tunnel
