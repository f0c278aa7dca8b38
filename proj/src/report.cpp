#include "roamsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

namespace roamsim::report {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fixed(double v, int digits = 3) {
    if (!std::isfinite(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void summarize(Cell& c) {
    auto stats = [](const std::vector<double>& v, double& mean, double& lo, double& hi) {
        if (v.empty()) {
            mean = lo = hi = kNaN;
            return;
        }
        mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        lo = *std::min_element(v.begin(), v.end());
        hi = *std::max_element(v.begin(), v.end());
    };
    stats(c.switch_s, c.mean_switch_s, c.min_switch_s, c.max_switch_s);
    stats(c.max_gap_s, c.mean_gap_s, c.min_gap_s, c.max_gap_max_s);
    c.seamless = !c.max_gap_s.empty() && c.mean_gap_s < traffic::kSeamlessBelowS;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

const Cell* Report::find(std::string_view device, Mode mode, std::string_view flow, Rat from) const {
    for (const auto& c : cells)
        if (c.device == device && c.mode == mode && c.flow == flow && c.from == from) return &c;
    return nullptr;
}

Report build(const std::vector<sim::DeviceRun>& runs) {
    Report r;
    std::map<std::tuple<std::string, Mode, std::string, Rat>, std::size_t> index;
    std::map<std::tuple<std::string, Mode, std::string>, std::size_t> rb_index;
    // Cells are laid out device-major in first-seen order, then mode.
    std::vector<std::string> devices;
    for (const auto& run : runs)
        if (std::find(devices.begin(), devices.end(), run.device_id) == devices.end()) devices.push_back(run.device_id);
    std::vector<const sim::DeviceRun*> ordered;
    for (const auto& d : devices)
        for (Mode m : {Mode::Traditional, Mode::Tunnel})
            for (const auto& run : runs)
                if (run.device_id == d && run.mode == m) ordered.push_back(&run);

    for (const sim::DeviceRun* run : ordered) {
        for (const auto& fr : run->flows) {
            for (const auto& dir : kDirections) {
                const auto key = std::make_tuple(run->device_id, run->mode, fr.spec.id, dir[0]);
                auto it = index.find(key);
                if (it == index.end()) {
                    Cell c;
                    c.device = run->device_id;
                    c.profile = run->profile_name;
                    c.mode = run->mode;
                    c.flow = fr.spec.id;
                    c.from = dir[0];
                    c.to = dir[1];
                    it = index.emplace(key, r.cells.size()).first;
                    r.cells.push_back(std::move(c));
                }
                Cell& c = r.cells[it->second];
                std::optional<double> sw, gap;
                for (const auto& i : fr.interruptions) {
                    if (!i.measurable || i.from != dir[0] || i.to != dir[1]) continue;
                    sw = std::max(sw.value_or(0.0), i.switch_time_s);
                    gap = std::max(gap.value_or(0.0), i.max_gap_s);
                }
                if (gap) {
                    c.switch_s.push_back(*sw);
                    c.max_gap_s.push_back(*gap);
                }
            }
            if (fr.spec.cls != traffic::FlowClass::Buffered) continue;
            const auto key = std::make_tuple(run->device_id, run->mode, fr.spec.id);
            auto it = rb_index.find(key);
            if (it == rb_index.end()) {
                it = rb_index.emplace(key, r.rebuffers.size()).first;
                r.rebuffers.push_back(Rebuffer{run->device_id, run->mode, fr.spec.id, 0, 0, 0.0});
            }
            Rebuffer& rb = r.rebuffers[it->second];
            ++rb.runs;
            rb.events += fr.stalls.size();
            for (const auto& s : fr.stalls) rb.total_s += s.duration_s;
        }
    }
    for (auto& c : r.cells) summarize(c);
    return r;
}

void add_throughput(Report& r, const log::EventLog& log) {
    std::map<std::string, Mode> modes;
    for (const auto& rec : log.records) {
        if (const auto* run = std::get_if<log::RunRecord>(&rec.body)) {
            modes[run->device] = run->mode;
        } else if (const auto* s = std::get_if<log::SignalRecord>(&rec.body)) {
            ThroughputSample t;
            t.device = s->device;
            t.mode = modes.count(s->device) ? modes[s->device] : Mode::Traditional;
            t.t = rec.t;
            t.position = s->position;
            t.wifi_rate_mbps = s->wifi_rate_mbps;
            t.cbrs_rate_mbps = s->cbrs_rate_mbps;
            t.serving = s->serving;
            t.serving_rate_mbps = s->serving == Rat::Wifi ? s->wifi_rate_mbps
                                  : s->serving == Rat::Cbrs ? s->cbrs_rate_mbps
                                                            : 0.0;
            r.throughput.push_back(std::move(t));
        }
    }
}

std::vector<sim::DeviceRun> runs_from_log(const log::EventLog& log) {
    std::vector<sim::DeviceRun> runs;
    std::map<std::string, std::size_t> by_device;
    auto device = [&](const std::string& id) -> sim::DeviceRun& {
        auto it = by_device.find(id);
        if (it == by_device.end()) {
            it = by_device.emplace(id, runs.size()).first;
            runs.emplace_back();
            runs.back().device_id = id;
        }
        return runs[it->second];
    };
    for (const auto& rec : log.records) {
        std::visit(
            [&](const auto& b) {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, log::RunRecord>) {
                    auto& d = device(b.device);
                    d.profile_name = b.profile;
                    d.mode = b.mode;
                    d.seed = b.seed;
                } else if constexpr (std::is_same_v<T, log::FlowRecord>) {
                    device(b.device).flows.push_back(sim::FlowResult{b.spec, {}, {}, {}});
                } else if constexpr (std::is_same_v<T, log::ConnRecord>) {
                    device(b.device).events.push_back({rec.t, b.kind, b.rat, b.node});
                } else if constexpr (std::is_same_v<T, log::DeliveryLogRecord>) {
                    auto& d = device(b.device);
                    for (auto& f : d.flows)
                        if (f.spec.id == b.flow) f.records.push_back(b.record);
                } else if constexpr (std::is_same_v<T, log::FrameRecord>) {
                    auto& d = device(b.device);
                    d.inner_address = b.inner_address;
                    if (b.probe) ++d.tunnel.probes;
                    else if (b.direction == tunnel::FrameDirection::Ul) ++d.tunnel.ul_frames;
                    else ++d.tunnel.dl_frames;
                }
            },
            rec.body);
    }
    for (auto& d : runs) sim::derive_metrics(d);
    return runs;
}

Report from_logs(const std::vector<log::EventLog>& logs, bool throughput) {
    std::vector<sim::DeviceRun> runs;
    for (const auto& l : logs) {
        auto part = runs_from_log(l);
        std::move(part.begin(), part.end(), std::back_inserter(runs));
    }
    Report r = build(runs);
    if (throughput && !logs.empty()) add_throughput(r, logs.front());
    return r;
}

std::string cells_csv(const Report& r) {
    std::string out =
        "device,profile,mode,flow,"
        "wc_seeds,wc_mean_switch_s,wc_min_switch_s,wc_max_switch_s,wc_mean_gap_s,wc_min_gap_s,wc_max_gap_s,wc_seamless,"
        "cw_seeds,cw_mean_switch_s,cw_min_switch_s,cw_max_switch_s,cw_mean_gap_s,cw_min_gap_s,cw_max_gap_s,cw_seamless\n";
    for (const auto& c : r.cells) {
        if (c.from != Rat::Wifi) continue;
        const Cell* back = r.find(c.device, c.mode, c.flow, Rat::Cbrs);
        out += csv_field(c.device) + "," + csv_field(c.profile) + "," + std::string(to_string(c.mode)) + "," +
               csv_field(c.flow);
        for (const Cell* x : {&c, back}) {
            if (!x) {
                out += ",0,,,,,,,";
                continue;
            }
            out += "," + std::to_string(x->seeds()) + "," + fixed(x->mean_switch_s) + "," + fixed(x->min_switch_s) +
                   "," + fixed(x->max_switch_s) + "," + fixed(x->mean_gap_s) + "," + fixed(x->min_gap_s) + "," +
                   fixed(x->max_gap_max_s) + "," + (x->seamless ? "true" : "false");
        }
        out += "\n";
    }
    return out;
}

std::string rebuffer_csv(const Report& r) {
    std::string out = "device,mode,flow,runs,rebuffer_events,rebuffer_total_s\n";
    for (const auto& b : r.rebuffers)
        out += csv_field(b.device) + "," + std::string(to_string(b.mode)) + "," + csv_field(b.flow) + "," +
               std::to_string(b.runs) + "," + std::to_string(b.events) + "," + fixed(b.total_s) + "\n";
    return out;
}

std::string throughput_csv(const Report& r) {
    std::string out = "device,mode,t_s,x_m,y_m,wifi_rate_mbps,cbrs_rate_mbps,serving,serving_rate_mbps\n";
    for (const auto& s : r.throughput)
        out += csv_field(s.device) + "," + std::string(to_string(s.mode)) + "," + fixed(s.t, 2) + "," +
               fixed(s.position.x, 2) + "," + fixed(s.position.y, 2) + "," + fixed(s.wifi_rate_mbps, 2) + "," +
               fixed(s.cbrs_rate_mbps, 2) + "," + std::string(to_string(s.serving)) + "," +
               fixed(s.serving_rate_mbps, 2) + "\n";
    return out;
}

std::string format_cell(const Cell* c) {
    if (!c || c->seeds() == 0) return "n/a";
    if (c->seamless) return "Seamless";
    return fixed(c->mean_gap_s, 1) + " S";
}

std::string human_table(const Report& r, std::string_view flow, Mode mode) {
    std::vector<std::array<std::string, 4>> rows;
    rows.push_back({"Device", "Profile", "Wi-Fi -> Private", "Private -> Wi-Fi"});
    for (const auto& c : r.cells) {
        if (c.flow != flow || c.mode != mode || c.from != Rat::Wifi) continue;
        rows.push_back({c.device, c.profile, format_cell(&c), format_cell(r.find(c.device, mode, flow, Rat::Cbrs))});
    }
    std::array<std::size_t, 4> w{};
    for (const auto& row : rows)
        for (std::size_t i = 0; i < 4; ++i) w[i] = std::max(w[i], row[i].size());
    std::string out;
    auto line = [&](const std::array<std::string, 4>& row) {
        for (std::size_t i = 0; i < 4; ++i) {
            out += row[i];
            if (i + 1 < 4) out += std::string(w[i] - row[i].size() + 2, ' ');
        }
        out += "\n";
    };
    line(rows[0]);
    std::size_t total = 0;
    for (auto x : w) total += x;
    out += std::string(total + 6, '-') + "\n";
    for (std::size_t i = 1; i < rows.size(); ++i) line(rows[i]);
    return out;
}

}  // namespace roamsim::report
