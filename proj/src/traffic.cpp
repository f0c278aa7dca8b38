#include "roamsim/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "roamsim/rng.hpp"

namespace roamsim::traffic {

namespace {

constexpr double kEps = 1e-9;

bool interval_overlaps(double a, double b, double lo, double hi) { return b >= lo && a <= hi; }

}  // namespace

std::string_view to_string(FlowClass c) {
    switch (c) {
        case FlowClass::Live: return "LIVE";
        case FlowClass::Interactive: return "INTERACTIVE";
        case FlowClass::Buffered: return "BUFFERED";
    }
    return "?";
}

std::string_view to_string(Criticality c) { return c == Criticality::Critical ? "CRITICAL" : "NON_CRITICAL"; }
std::string_view to_string(Direction d) { return d == Direction::Ul ? "UL" : "DL"; }

FlowClass parse_flow_class(std::string_view text) {
    if (text == "LIVE") return FlowClass::Live;
    if (text == "INTERACTIVE") return FlowClass::Interactive;
    if (text == "BUFFERED") return FlowClass::Buffered;
    throw std::invalid_argument("unknown flow class '" + std::string(text) + "'");
}

Criticality parse_criticality(std::string_view text) {
    if (text == "CRITICAL") return Criticality::Critical;
    if (text == "NON_CRITICAL") return Criticality::NonCritical;
    throw std::invalid_argument("unknown criticality '" + std::string(text) + "'");
}

void FlowSpec::validate() const {
    if (id.empty()) throw std::invalid_argument("flow without id");
    auto positive = [&](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("flow '" + id + "': " + what + " must be > 0");
    };
    positive(packet_size_bytes, "packet_size");
    positive(duration_s, "duration");
    if (cls == FlowClass::Live) {
        positive(packet_interval_s, "packet_interval");
        positive(staleness_s, "staleness");
    }
    if (cls == FlowClass::Interactive) positive(request_interval_s, "request_interval");
    if (cls == FlowClass::Buffered) {
        positive(media_rate_mbps, "media_rate");
        if (!(buffer_depth_s >= 0.0)) throw std::invalid_argument("flow '" + id + "': buffer_depth must be >= 0");
    }
    if (!(start_s >= 0.0)) throw std::invalid_argument("flow '" + id + "': start must be >= 0");
}

double FlowSpec::demand_mbps() const {
    switch (cls) {
        case FlowClass::Live: return packet_size_bytes * 8.0 / packet_interval_s / 1e6;
        case FlowClass::Interactive: return packet_size_bytes * 8.0 / request_interval_s / 1e6;
        case FlowClass::Buffered: return media_rate_mbps;
    }
    return 0.0;
}

double FlowSpec::chunk_seconds() const { return packet_size_bytes * 8.0 / (media_rate_mbps * 1e6); }

double FlowSpec::nominal_interval() const {
    switch (cls) {
        case FlowClass::Live: return packet_interval_s;
        case FlowClass::Interactive: return request_interval_s;
        case FlowClass::Buffered: return chunk_seconds();
    }
    return 0.0;
}

std::size_t LinkTimeline::slot_of(double t) const {
    if (t <= start_s) return 0;
    return static_cast<std::size_t>(std::floor((t - start_s) / tick_s + kEps));
}

std::vector<PacketPlan> schedule(const FlowSpec& flow, std::uint64_t seed) {
    std::vector<PacketPlan> plan;
    const double end = flow.start_s + flow.duration_s;
    rng::Stream stream(seed, "flow-phase:" + flow.id);
    const double u = stream.uniform();
    switch (flow.cls) {
        case FlowClass::Live: {
            const double first = flow.start_s + u * flow.packet_interval_s;
            const auto n = static_cast<std::uint32_t>(std::max(0.0, std::ceil((end - first) / flow.packet_interval_s)));
            plan.reserve(2 * n);
            for (std::uint32_t k = 0; k < n; ++k) {
                const double t = first + k * flow.packet_interval_s;
                plan.push_back({k, t, Direction::Ul});
                plan.push_back({k, t, Direction::Dl});
            }
            break;
        }
        case FlowClass::Interactive: {
            const double first = flow.start_s + u * flow.request_interval_s;
            for (std::uint32_t k = 0;; ++k) {
                const double t = first + k * flow.request_interval_s;
                if (t >= end) break;
                plan.push_back({k, t, Direction::Dl});
            }
            break;
        }
        case FlowClass::Buffered: {
            const double chunk = flow.chunk_seconds();
            const auto n = static_cast<std::uint32_t>(std::floor(flow.duration_s / chunk + kEps));
            for (std::uint32_t k = 0; k < n; ++k) {
                const double t = std::max(flow.start_s, flow.start_s + k * chunk - flow.buffer_depth_s);
                plan.push_back({k, t, Direction::Dl});
            }
            break;
        }
    }
    return plan;
}

std::vector<DeliveryRecord> deliver(const FlowSpec& flow, const LinkTimeline& link, std::uint64_t seed) {
    const double demand = flow.demand_mbps();
    const std::size_t n = link.slots.size();
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    // next_ok[i]: first slot >= i whose link can carry the flow.
    std::vector<std::size_t> next_ok(n + 1, kNone);
    for (std::size_t i = n; i-- > 0;) {
        const LinkSlot& s = link.slots[i];
        next_ok[i] = (s.rat != Rat::None && s.rate_mbps >= demand && s.rate_mbps > 0.0) ? i : next_ok[i + 1];
    }
    const double staleness =
        flow.cls == FlowClass::Live ? flow.staleness_s : std::numeric_limits<double>::infinity();
    const double bits = flow.packet_size_bytes * 8.0;

    std::vector<DeliveryRecord> out;
    const auto plan = schedule(flow, seed);
    out.reserve(plan.size());
    for (const PacketPlan& p : plan) {
        DeliveryRecord r{p.seq, p.sent_at, std::nullopt, p.direction, Rat::None};
        const std::size_t from = link.slot_of(p.sent_at);
        const std::size_t j = from < n ? next_ok[from] : kNone;
        if (j != kNone) {
            const LinkSlot& s = link.slots[j];
            const double begin = std::max(p.sent_at, link.start_s + link.tick_s * static_cast<double>(j));
            const double at = begin + (std::isinf(s.rate_mbps) ? 0.0 : bits / (s.rate_mbps * 1e6));
            if (at - p.sent_at <= staleness + kEps) {
                r.delivered_at = at;
                r.rat_used = s.rat;
            }
        }
        out.push_back(r);
    }
    return out;
}

std::vector<InterruptionRecord> measure_interruption(const FlowSpec& flow, const std::vector<DeliveryRecord>& records,
                                                     const std::vector<device::SwitchInterval>& transitions) {
    std::vector<InterruptionRecord> out;
    if (transitions.empty()) return out;

    // Delivered records per direction, ordered by delivery time.
    std::vector<const DeliveryRecord*> by_dir[2];
    for (const DeliveryRecord& r : records) {
        if (r.delivered_at) by_dir[static_cast<int>(r.direction)].push_back(&r);
    }
    for (auto& v : by_dir) {
        std::stable_sort(v.begin(), v.end(),
                         [](const DeliveryRecord* a, const DeliveryRecord* b) { return *a->delivered_at < *b->delivered_at; });
    }

    for (const device::SwitchInterval& tr : transitions) {
        InterruptionRecord rec;
        rec.flow_id = flow.id;
        rec.from = tr.from;
        rec.to = tr.to;
        rec.t_detach = tr.t_detach;
        rec.t_attach = tr.t_attach;
        if (tr.open) {
            rec.measurable = false;
            out.push_back(rec);
            continue;
        }
        const double lo = std::min(tr.t_detach, tr.t_attach) - kWindowBeforeS;
        const double hi = std::max(tr.t_detach, tr.t_attach) + kWindowAfterS;
        bool any = false;
        double max_gap = 0.0;
        double switch_time = 0.0;

        if (flow.cls == FlowClass::Interactive) {
            for (const DeliveryRecord& r : records) {
                const double done = r.delivered_at.value_or(hi);
                if (!interval_overlaps(r.sent_at, done, lo, hi)) continue;
                any = true;
                max_gap = std::max(max_gap, done - r.sent_at);
            }
            switch_time = max_gap;
        } else {
            for (const auto& dir : by_dir) {
                for (std::size_t i = 0; i + 1 < dir.size(); ++i) {
                    const double a = *dir[i]->delivered_at;
                    const double b = *dir[i + 1]->delivered_at;
                    if (!interval_overlaps(a, b, lo, hi)) continue;
                    any = true;
                    max_gap = std::max(max_gap, b - a);
                }
                // Last delivery on the old RAT before the first on the new one.
                auto first_new = std::find_if(dir.begin(), dir.end(), [&](const DeliveryRecord* r) {
                    return r->rat_used == tr.to && *r->delivered_at >= lo;
                });
                if (first_new == dir.end()) continue;
                for (auto it = first_new; it != dir.begin();) {
                    --it;
                    if ((*it)->rat_used == tr.from) {
                        switch_time = std::max(switch_time, *(*first_new)->delivered_at - *(*it)->delivered_at);
                        break;
                    }
                }
            }
        }
        rec.measurable = any;
        rec.max_gap_s = max_gap;
        rec.switch_time_s = switch_time;
        rec.seamless = any && max_gap < kSeamlessBelowS;
        out.push_back(rec);
    }
    return out;
}

std::vector<Stall> rebuffer_events(const FlowSpec& flow, const std::vector<DeliveryRecord>& records) {
    if (flow.cls != FlowClass::Buffered) throw std::invalid_argument("rebuffer_events: flow is not BUFFERED");
    std::vector<const DeliveryRecord*> chunks;
    for (const DeliveryRecord& r : records) {
        if (r.direction == Direction::Dl) chunks.push_back(&r);
    }
    std::sort(chunks.begin(), chunks.end(),
              [](const DeliveryRecord* a, const DeliveryRecord* b) { return a->seq < b->seq; });
    std::vector<Stall> stalls;
    if (chunks.empty() || !chunks.front()->delivered_at) return stalls;

    const double chunk = flow.chunk_seconds();
    const double flow_end = flow.start_s + flow.duration_s;
    double due = *chunks.front()->delivered_at;
    for (const DeliveryRecord* c : chunks) {
        const double arrival = c->delivered_at.value_or(std::numeric_limits<double>::infinity());
        if (arrival > due + kEps) {
            if (std::isinf(arrival)) {
                if (due < flow_end) stalls.push_back({due, flow_end - due});
                break;
            }
            stalls.push_back({due, arrival - due});
            due = arrival;
        }
        due += chunk;
    }
    return stalls;
}

}  // namespace roamsim::traffic
