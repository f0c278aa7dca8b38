#include "roamsim/sim.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "roamsim/rng.hpp"
#include "roamsim/tunnel/session.hpp"

namespace roamsim::sim {

namespace {

constexpr double kEps = 1e-9;
constexpr double kRequestBytes = 200.0;

std::uint64_t to_ms(double t) { return static_cast<std::uint64_t>(std::llround(std::max(0.0, t) * 1000.0)); }

bool live_flow(const traffic::FlowSpec& f) { return f.cls == traffic::FlowClass::Live; }

bool active_at(const traffic::FlowSpec& f, double t) { return t + kEps >= f.start_s && t < f.start_s + f.duration_s; }

struct Pending {
    std::size_t record = 0;
    double ready_at = 0.0;
    std::uint32_t frame_seq = 0;
    bool attempted = false;
    bool request = false;  // UL request of an INTERACTIVE transaction
};

struct TunnelFlow {
    std::size_t index = 0;  // into DeviceRun::flows
    std::vector<traffic::PacketPlan> plan;
    std::size_t next = 0;
    tunnel::DropOldestQueue<Pending> ul;
    tunnel::DropOldestQueue<Pending> dl;
    double demand = 0.0;

    TunnelFlow(std::size_t cap) : ul(cap), dl(cap) {}
};

// Data plane of one tunnel session: client and server endpoints driven tick
// by tick. Frames are encoded and decoded on every hop.
class TunnelPlane {
public:
    TunnelPlane(const tunnel::TunnelConfig& cfg, tunnel::SessionState& s, DeviceRun& out, log::EventLog* log)
        : cfg_(cfg), s_(s), out_(out), log_(log) {}

    void add_flow(std::size_t index, const traffic::FlowSpec& spec, std::uint64_t seed) {
        TunnelFlow f(cfg_.buffer_frames);
        f.index = index;
        f.plan = traffic::schedule(spec, seed);
        f.demand = spec.demand_mbps();
        flows_.push_back(std::move(f));
    }

    void tick(double t, double tick, const device::ConnectionState& st, const kernels::TickRadio& radio,
              Rat preferred) {
        rate_ = {st.attached(Rat::Wifi) ? radio.wifi_rate_mbps : 0.0,
                 st.attached(Rat::Cbrs) ? radio.cbrs_rate_mbps : 0.0};
        tunnel::set_attached(s_, Rat::Wifi, st.attached(Rat::Wifi), t);
        tunnel::set_attached(s_, Rat::Cbrs, st.attached(Rat::Cbrs), t);

        load_ = 0.0;
        for (const TunnelFlow& f : flows_)
            if (active_at(out_.flows[f.index].spec, t)) load_ += f.demand;

        tunnel::advance_probes(
            s_, cfg_, t,
            [&](Rat r) {
                const double rate = rate_of(r);
                const double load = r == s_.active_rat ? load_ : 0.0;
                if (rate <= 0.0 || load >= rate) return tunnel::ProbeResult{false, 0.0};
                return tunnel::ProbeResult{true, cfg_.rtt_ref_ms(r) / (1.0 - load / rate)};
            },
            [&](const tunnel::TunnelFrame& f, double at) {
                ++out_.tunnel.probes;
                log_frame(at, f, "");
            });

        if (s_.mode != tunnel::TunnelMode::Split) paths_ = tunnel::client_select_path(s_, preferred, rate_);
        preferred_ = preferred;

        for (TunnelFlow& f : flows_) enqueue(f, t + tick);
        for (TunnelFlow& f : flows_) uplink(f, t);
        for (TunnelFlow& f : flows_) downlink(f, t);
    }

private:
    double rate_of(Rat r) const { return r == Rat::Wifi ? rate_[0] : r == Rat::Cbrs ? rate_[1] : 0.0; }

    double rtt_sample(Rat r) const {
        const double rate = rate_of(r);
        const double base = cfg_.rtt_ref_ms(r);
        if (rate <= 0.0 || load_ >= rate) return 10.0 * base;
        return base / (1.0 - load_ / rate);
    }

    void log_frame(double t, const tunnel::TunnelFrame& f, const std::string& flow) {
        if (!log_) return;
        log::FrameRecord r;
        r.device = out_.device_id;
        r.flow = flow;
        r.direction = f.direction;
        r.rat = f.rat;
        r.duplicate = f.duplicate;
        r.probe = f.probe;
        r.session_id = f.session_id;
        r.seq = f.seq;
        r.timestamp_ms = f.timestamp_ms;
        r.payload_len = static_cast<std::uint16_t>(f.payload.size());
        r.inner_address = s_.inner_address;
        log_->add(t, std::move(r));
    }

    tunnel::TunnelFrame send(tunnel::FrameDirection dir, Rat rat, bool dup, std::uint32_t seq, double at,
                             double bytes) {
        tunnel::TunnelFrame f;
        f.direction = dir;
        f.rat = rat;
        f.duplicate = dup;
        f.session_id = s_.session_id;
        f.seq = seq;
        f.timestamp_ms = to_ms(at);
        f.payload.assign(static_cast<std::size_t>(std::min(bytes, 65535.0)), 0);
        tunnel::encode_frame_into(f, wire_);
        return tunnel::decode_frame(wire_);
    }

    void push(tunnel::DropOldestQueue<Pending>& q, Pending p) {
        if (q.size() == q.capacity()) ++out_.tunnel.buffer_drops;
        q.push(p);
    }

    void enqueue(TunnelFlow& f, double until) {
        const auto& spec = out_.flows[f.index].spec;
        while (f.next < f.plan.size() && f.plan[f.next].sent_at < until - kEps) {
            const traffic::PacketPlan& p = f.plan[f.next];
            Pending item{f.next, p.sent_at, 0, false, false};
            if (spec.cls == traffic::FlowClass::Interactive) {
                item.request = true;
                item.frame_seq = ul_seq_++;
                push(f.ul, item);
            } else if (p.direction == traffic::Direction::Ul) {
                item.frame_seq = ul_seq_++;
                push(f.ul, item);
            } else {
                item.frame_seq = dl_seq_++;
                push(f.dl, item);
            }
            ++f.next;
        }
    }

    bool stale(const traffic::FlowSpec& spec, const traffic::DeliveryRecord& rec, double t) const {
        return live_flow(spec) && t - rec.sent_at > spec.staleness_s + kEps;
    }

    void uplink(TunnelFlow& f, double t) {
        FlowResult& fr = out_.flows[f.index];
        const auto& spec = fr.spec;
        std::deque<Pending> kept;
        for (Pending& p : f.ul.items()) {
            traffic::DeliveryRecord& rec = fr.records[p.record];
            if (stale(spec, rec, t)) continue;
            std::vector<Rat> use = paths_;
            if (s_.mode == tunnel::TunnelMode::Split) use = tunnel::client_select_path(s_, preferred_, rate_);
            if (use.empty()) {
                kept.push_back(p);
                continue;
            }
            const double bytes = p.request ? kRequestBytes : spec.packet_size_bytes;
            const bool dup = use.size() > 1;
            std::optional<double> first_at;
            Rat first_rat = Rat::None;
            bool carried = false;
            for (Rat r : use) {
                const double rate = rate_of(r);
                if (!(rate > 0.0 && rate >= f.demand)) continue;
                carried = true;
                const double at = std::max(p.ready_at, t) + bytes * 8.0 / (rate * 1e6);
                const tunnel::TunnelFrame wire = send(tunnel::FrameDirection::Ul, r, dup, p.frame_seq, at, bytes);
                log_frame(t, wire, spec.id);
                ++out_.tunnel.ul_frames;
                tunnel::record_ack(s_.path(r), rtt_sample(r), cfg_);
                const auto verdict = tunnel::server_receive_ul(s_, wire);
                if (verdict == tunnel::DedupResult::Accept) {
                    if (!first_at) {
                        first_at = at;
                        first_rat = r;
                    } else {
                        ++out_.tunnel.duplicate_deliveries;
                    }
                } else if (verdict == tunnel::DedupResult::Duplicate) {
                    ++out_.tunnel.duplicates_dropped;
                } else {
                    ++out_.tunnel.stale_dropped;
                }
            }
            if (!carried) {
                if (!p.attempted) {
                    tunnel::record_loss(s_.path(use.front()), cfg_);
                    p.attempted = true;
                }
                kept.push_back(p);
                continue;
            }
            if (!first_at) continue;
            if (p.request) {
                push(f.dl, Pending{p.record, *first_at, dl_seq_++, false, false});
            } else if (!(live_flow(spec) && *first_at - rec.sent_at > spec.staleness_s + kEps)) {
                rec.delivered_at = *first_at;
                rec.rat_used = first_rat;
            }
        }
        f.ul.items().swap(kept);
    }

    void downlink(TunnelFlow& f, double t) {
        FlowResult& fr = out_.flows[f.index];
        const auto& spec = fr.spec;
        const auto route = tunnel::server_route_dl(s_);
        std::deque<Pending> kept;
        for (Pending& p : f.dl.items()) {
            traffic::DeliveryRecord& rec = fr.records[p.record];
            if (stale(spec, rec, t)) continue;
            const double rate = route ? rate_of(*route) : 0.0;
            if (!(rate > 0.0 && rate >= f.demand) || p.ready_at > t + sc_tick_guard_) {
                kept.push_back(p);
                continue;
            }
            const double at = std::max(p.ready_at, t) + spec.packet_size_bytes * 8.0 / (rate * 1e6);
            const tunnel::TunnelFrame wire =
                send(tunnel::FrameDirection::Dl, *route, false, p.frame_seq, at, spec.packet_size_bytes);
            log_frame(t, wire, spec.id);
            ++out_.tunnel.dl_frames;
            if (wire.rat != s_.last_ul_rat) ++out_.tunnel.reflection_violations;
            const auto verdict = tunnel::client_receive_dl(s_, wire);
            if (verdict != tunnel::DedupResult::Accept) {
                ++out_.tunnel.duplicates_dropped;
                continue;
            }
            if (live_flow(spec) && at - rec.sent_at > spec.staleness_s + kEps) continue;
            rec.delivered_at = at;
            rec.rat_used = *route;
        }
        f.dl.items().swap(kept);
    }

    const tunnel::TunnelConfig& cfg_;
    tunnel::SessionState& s_;
    DeviceRun& out_;
    log::EventLog* log_;
    std::vector<TunnelFlow> flows_;
    std::array<double, 2> rate_{0.0, 0.0};
    double load_ = 0.0;
    std::vector<Rat> paths_;
    Rat preferred_ = Rat::None;
    std::vector<std::uint8_t> wire_;
    std::uint32_t ul_seq_ = 0;
    std::uint32_t dl_seq_ = 0;
    // A DL response becomes sendable within the tick its request arrived.
    static constexpr double sc_tick_guard_ = 1.0;
};

device::RadioView view_at(const Environment& env, const kernels::TickRadio& r) {
    device::RadioView v;
    if (r.wifi_node >= 0)
        v.wifi = SignalSample{env.nodes[static_cast<std::size_t>(r.wifi_node)].id, SignalMetric::Rssi, r.wifi_dbm, r.position};
    if (r.cbrs_node >= 0)
        v.cbrs = SignalSample{env.nodes[static_cast<std::size_t>(r.cbrs_node)].id, SignalMetric::Rsrp, r.cbrs_dbm, r.position};
    return v;
}

double native_rate(const kernels::TickRadio& r, Rat rat) {
    if (rat == Rat::Wifi) return r.wifi_rate_mbps;
    if (rat == Rat::Cbrs) return r.cbrs_rate_mbps;
    return 0.0;
}

}  // namespace

const FlowResult* DeviceRun::flow(std::string_view id) const {
    for (const auto& f : flows)
        if (f.spec.id == id) return &f;
    return nullptr;
}

std::vector<kernels::RadioTrack> precompute_tracks(const Scenario& sc, bool parallel) {
    std::vector<kernels::RadioTrack> out;
    out.reserve(sc.devices.size());
    const std::size_t n = sc.tick_count();
    for (const auto& d : sc.devices) {
        out.push_back(parallel ? kernels::radio_track_parallel(sc.env, d.trace, sc.tick_s, n)
                               : kernels::radio_track_serial(sc.env, d.trace, sc.tick_s, n));
    }
    return out;
}

DeviceRun run_device(const Scenario& sc, const DeviceConfig& dev, const kernels::RadioTrack& track, std::uint64_t seed,
                     Mode mode, log::EventLog* log, bool signal_samples) {
    const device::DeviceProfile& profile = sc.profile_of(dev);
    const bool tunnel_mode = mode == Mode::Tunnel;
    if (tunnel_mode && !profile.supports_tunnel_client)
        throw std::invalid_argument("device '" + dev.id + "': profile '" + profile.model_name + "' has no tunnel client");
    if (tunnel_mode && !sc.policy) throw std::invalid_argument("tunnel mode needs a policy section");

    DeviceRun out;
    out.device_id = dev.id;
    out.profile_name = dev.profile_name;
    out.mode = mode;
    out.seed = seed;
    for (const auto& f : dev.flows) out.flows.push_back(FlowResult{f, {}, {}, {}});

    auto L = [&](double t, log::Body b) {
        if (log) log->add(t, std::move(b));
    };
    L(0.0, log::RunRecord{dev.id, dev.profile_name, mode, seed, dev.trace_name});
    for (const auto& f : dev.flows) L(0.0, log::FlowRecord{dev.id, f});

    const std::size_t n = track.ticks.size();
    const double tick = sc.tick_s;

    rng::Stream scan(seed, "scan:" + dev.id);
    device::ConnectionState st;
    st.cell_scan_offset_s = scan.uniform() * profile.cell_scan_interval_s;
    st.wifi_scan_offset_s = scan.uniform() * profile.wifi_scan_interval_s;

    std::optional<tunnel::SessionState> session;
    std::optional<TunnelPlane> plane;
    if (tunnel_mode) {
        session.emplace(rng::mix(seed, rng::fnv1a("session:" + dev.id)), sc.tunnel);
        out.inner_address = session->inner_address;
        plane.emplace(sc.tunnel, *session, out, log);
        for (std::size_t k = 0; k < dev.flows.size(); ++k) {
            if (dev.flows[k].criticality != traffic::Criticality::Critical) continue;
            plane->add_flow(k, dev.flows[k], seed);
            out.flows[k].records.clear();
            for (const auto& p : traffic::schedule(dev.flows[k], seed))
                out.flows[k].records.push_back({p.seq, p.sent_at, std::nullopt, p.direction, Rat::None});
        }
    }

    policy::PolicyState pstate;
    std::optional<policy::PolicyDecision> logged_decision;
    std::vector<policy::VisibleNetwork> visible;
    std::vector<traffic::LinkSlot> native(n);
    const auto decimate = static_cast<std::size_t>(std::max(1.0, std::round(0.1 / tick)));
    const std::vector<policy::VisibleCell> no_cells;

    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * tick;
        const kernels::TickRadio& radio = track.ticks[i];
        const device::RadioView view = view_at(sc.env, radio);

        device::StepOptions opt;
        Rat preferred = Rat::None;
        if (tunnel_mode) {
            visible.clear();
            if (radio.wifi_node >= 0)
                visible.push_back({Rat::Wifi, sc.env.nodes[static_cast<std::size_t>(radio.wifi_node)].network, radio.wifi_dbm});
            if (radio.cbrs_node >= 0)
                visible.push_back({Rat::Cbrs, sc.env.nodes[static_cast<std::size_t>(radio.cbrs_node)].network, radio.cbrs_dbm});
            policy::PolicyInputs in;
            in.signals = visible;
            in.congestion = {session->score(Rat::Wifi), session->score(Rat::Cbrs)};
            in.geofence = sc.policy->geofence ? &*sc.policy->geofence : nullptr;
            in.position = radio.position;
            in.macro_cells = track.macro.empty() ? std::span<const policy::VisibleCell>(no_cells)
                                                 : std::span<const policy::VisibleCell>(track.macro[i]);
            auto ev = policy::evaluate(sc.policy->profile, in, pstate, t, sc.policy->hysteresis);
            pstate = std::move(ev.state);
            if (!logged_decision || *logged_decision != ev.decision) {
                L(t, log::PolicyRecord{dev.id, ev.decision});
                logged_decision = ev.decision;
            }
            preferred = ev.decision.preferred_rat;
            opt.policy_hint = preferred;
            opt.dual_active = sc.tunnel.mode == tunnel::TunnelMode::Duplicate || sc.tunnel.mode == tunnel::TunnelMode::Split;
            opt.mbb_overlap_s = sc.tunnel.mode == tunnel::TunnelMode::Single ? 0.0 : sc.mbb_overlap_s;
        }

        std::vector<device::ConnectionEvent> events;
        if (i == 0) {
            // Initial association before traffic starts.
            const bool wifi_ok = view.wifi && view.wifi->value_dbm >= profile.wifi_attach_rssi;
            const bool cbrs_ok = view.cbrs && view.cbrs->value_dbm >= profile.cell_min_rsrp;
            Rat first = Rat::None;
            if (tunnel_mode) {
                if (preferred == Rat::Wifi && wifi_ok) first = Rat::Wifi;
                else if (preferred == Rat::Cbrs && cbrs_ok) first = Rat::Cbrs;
                else first = wifi_ok ? Rat::Wifi : cbrs_ok ? Rat::Cbrs : Rat::None;
            } else if (profile.prefers_wifi && wifi_ok) {
                first = Rat::Wifi;
            } else {
                first = cbrs_ok ? Rat::Cbrs : wifi_ok ? Rat::Wifi : Rat::None;
            }
            if (first != Rat::None) {
                st.current_rat = first;
                st.phase = device::Phase::Connected;
                st.serving_node = view.of(first)->node_id;
                events.push_back({t, device::EventKind::Attached, first, view.of(first)->node_id});
            }
        } else {
            auto res = device::step(st, profile, view, t, tick, opt);
            st = std::move(res.state);
            events = std::move(res.events);
        }
        for (auto& e : events) {
            L(e.t, log::ConnRecord{dev.id, e.kind, e.rat, e.node_id});
            out.events.push_back(std::move(e));
        }

        native[i] = {st.current_rat, native_rate(radio, st.current_rat)};
        if (plane) plane->tick(t, tick, st, radio, preferred);

        if (log && signal_samples && i % decimate == 0) {
            log::SignalRecord s;
            s.device = dev.id;
            s.position = radio.position;
            if (radio.wifi_node >= 0) s.wifi_dbm = radio.wifi_dbm;
            if (radio.cbrs_node >= 0) s.cbrs_dbm = radio.cbrs_dbm;
            s.wifi_rate_mbps = radio.wifi_rate_mbps;
            s.cbrs_rate_mbps = radio.cbrs_rate_mbps;
            s.serving = st.current_rat;
            L(t, std::move(s));
        }
    }

    const traffic::LinkTimeline timeline{0.0, tick, std::move(native)};
    for (auto& fr : out.flows) {
        const bool via_tunnel = tunnel_mode && fr.spec.criticality == traffic::Criticality::Critical;
        if (!via_tunnel) fr.records = traffic::deliver(fr.spec, timeline, seed);
        if (log)
            for (const auto& r : fr.records) L(r.sent_at, log::DeliveryLogRecord{dev.id, fr.spec.id, r});
    }
    derive_metrics(out);
    return out;
}

void derive_metrics(DeviceRun& run) {
    run.transitions = device::switch_intervals(run.events);
    for (auto& fr : run.flows) {
        fr.interruptions = traffic::measure_interruption(fr.spec, fr.records, run.transitions);
        fr.stalls.clear();
        if (fr.spec.cls == traffic::FlowClass::Buffered) fr.stalls = traffic::rebuffer_events(fr.spec, fr.records);
    }
}

RunResult run(const Scenario& sc, std::uint64_t seed, const RunOptions& opts,
              const std::vector<kernels::RadioTrack>& tracks) {
    if (tracks.size() != sc.devices.size()) throw std::invalid_argument("run: one radio track per device required");
    RunResult out;
    out.seed = seed;
    for (std::size_t d = 0; d < sc.devices.size(); ++d) {
        const DeviceConfig& dev = sc.devices[d];
        const Mode mode = opts.mode_override.value_or(dev.mode);
        out.devices.push_back(run_device(sc, dev, tracks[d], seed, mode, opts.keep_log ? &out.log : nullptr,
                                         opts.signal_samples));
    }
    out.log.sort();
    return out;
}

RunResult run(const Scenario& sc, std::uint64_t seed, const RunOptions& opts) {
    return run(sc, seed, opts, precompute_tracks(sc, true));
}

std::vector<std::uint64_t> default_seeds(const Scenario& sc) {
    std::vector<std::uint64_t> seeds;
    for (int k = 0; k < sc.seed_count; ++k) seeds.push_back(sc.seed + static_cast<std::uint64_t>(k));
    return seeds;
}

std::vector<RunResult> run_seeds_serial(const Scenario& sc, std::span<const std::uint64_t> seeds,
                                        const RunOptions& opts) {
    const auto tracks = precompute_tracks(sc, false);
    std::vector<RunResult> out;
    out.reserve(seeds.size());
    for (std::uint64_t s : seeds) out.push_back(run(sc, s, opts, tracks));
    return out;
}

std::vector<RunResult> run_seeds_parallel(const Scenario& sc, std::span<const std::uint64_t> seeds,
                                          const RunOptions& opts) {
    const auto tracks = precompute_tracks(sc, true);
    std::vector<RunResult> out(seeds.size());
    const auto n = static_cast<std::int64_t>(seeds.size());
    std::vector<std::string> errors(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            out[k] = run(sc, seeds[k], opts, tracks);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error(e);
    return out;
}

std::size_t reflection_violations(const log::EventLog& log) {
    std::map<std::pair<std::string, std::uint64_t>, Rat> last_ul;
    std::size_t bad = 0;
    for (const auto& r : log.records) {
        const auto* f = std::get_if<log::FrameRecord>(&r.body);
        if (!f || f->probe) continue;
        const auto key = std::make_pair(f->device, f->session_id);
        if (f->direction == tunnel::FrameDirection::Ul) {
            last_ul[key] = f->rat;
            continue;
        }
        const auto it = last_ul.find(key);
        if (it == last_ul.end() || it->second != f->rat) ++bad;
    }
    return bad;
}

std::size_t inner_address_changes(const log::EventLog& log) {
    std::map<std::string, std::set<std::string>> seen;
    for (const auto& r : log.records)
        if (const auto* f = std::get_if<log::FrameRecord>(&r.body)) seen[f->device].insert(f->inner_address);
    std::size_t changes = 0;
    for (const auto& [dev, addrs] : seen) changes += addrs.size() - 1;
    return changes;
}

}  // namespace roamsim::sim
