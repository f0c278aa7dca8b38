#include "roamsim/event_log.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

namespace roamsim::log {

namespace {

using nlohmann::json;

// Shortest round-trip form; JSON has no inf/nan so those become null.
void put_num(std::string& out, double v) {
    if (!std::isfinite(v)) {
        out += "null";
        return;
    }
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

void put_str(std::string& out, const std::string& s) { out += json(s).dump(); }

class Line {
public:
    explicit Line(double t, std::string_view type) {
        out_ = "{\"t\":";
        put_num(out_, t);
        out_ += ",\"type\":\"";
        out_ += type;
        out_ += '"';
    }
    Line& str(std::string_view key, const std::string& v) {
        this->key(key);
        put_str(out_, v);
        return *this;
    }
    Line& sym(std::string_view key, std::string_view v) {
        this->key(key);
        out_ += '"';
        out_ += v;
        out_ += '"';
        return *this;
    }
    Line& num(std::string_view key, double v) {
        this->key(key);
        put_num(out_, v);
        return *this;
    }
    Line& opt(std::string_view key, const std::optional<double>& v) {
        this->key(key);
        if (v) put_num(out_, *v);
        else out_ += "null";
        return *this;
    }
    Line& uint(std::string_view key, std::uint64_t v) {
        this->key(key);
        out_ += std::to_string(v);
        return *this;
    }
    Line& boolean(std::string_view key, bool v) {
        this->key(key);
        out_ += v ? "true" : "false";
        return *this;
    }
    std::string done() {
        out_ += '}';
        return std::move(out_);
    }

private:
    void key(std::string_view k) {
        out_ += ",\"";
        out_ += k;
        out_ += "\":";
    }
    std::string out_;
};

std::optional<double> opt_num(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

traffic::Direction parse_direction(const std::string& s) {
    if (s == "UL") return traffic::Direction::Ul;
    if (s == "DL") return traffic::Direction::Dl;
    throw std::invalid_argument("bad direction '" + s + "'");
}

device::EventKind parse_event_kind(const std::string& s) {
    if (s == "ATTACHED") return device::EventKind::Attached;
    if (s == "DETACHED") return device::EventKind::Detached;
    if (s == "SCAN_STARTED") return device::EventKind::ScanStarted;
    throw std::invalid_argument("bad connection event '" + s + "'");
}

policy::Reason parse_reason(const std::string& s) {
    using policy::Reason;
    for (Reason r : {Reason::PriorityList, Reason::SignalFloor, Reason::Geofence, Reason::FootprintScan,
                     Reason::AppPreference, Reason::Congestion})
        if (policy::to_string(r) == s) return r;
    throw std::invalid_argument("bad policy reason '" + s + "'");
}

struct Writer {
    double t;
    std::string operator()(const RunRecord& r) const {
        return Line(t, "run")
            .str("device", r.device)
            .str("profile", r.profile)
            .sym("mode", to_string(r.mode))
            .uint("seed", r.seed)
            .str("trace", r.trace)
            .done();
    }
    std::string operator()(const FlowRecord& r) const {
        const auto& f = r.spec;
        return Line(t, "flow")
            .str("device", r.device)
            .str("flow", f.id)
            .sym("class", traffic::to_string(f.cls))
            .num("packet_interval_s", f.packet_interval_s)
            .num("packet_size_bytes", f.packet_size_bytes)
            .num("request_interval_s", f.request_interval_s)
            .num("buffer_depth_s", f.buffer_depth_s)
            .num("media_rate_mbps", f.media_rate_mbps)
            .num("start_s", f.start_s)
            .num("duration_s", f.duration_s)
            .sym("criticality", traffic::to_string(f.criticality))
            .num("staleness_s", f.staleness_s)
            .done();
    }
    std::string operator()(const ConnRecord& r) const {
        Line l(t, "conn");
        l.str("device", r.device).sym("event", device::to_string(r.kind)).sym("rat", to_string(r.rat));
        if (r.node) l.str("node", *r.node);
        return l.done();
    }
    std::string operator()(const PolicyRecord& r) const {
        return Line(t, "policy")
            .str("device", r.device)
            .sym("rat", to_string(r.decision.preferred_rat))
            .sym("reason", policy::to_string(r.decision.reason))
            .boolean("scan_request", r.decision.scan_request)
            .str("entry", r.decision.entry)
            .done();
    }
    std::string operator()(const FrameRecord& r) const {
        return Line(t, "frame")
            .str("device", r.device)
            .str("flow", r.flow)
            .sym("dir", r.direction == tunnel::FrameDirection::Ul ? "UL" : "DL")
            .sym("rat", to_string(r.rat))
            .boolean("dup", r.duplicate)
            .boolean("probe", r.probe)
            .uint("session", r.session_id)
            .uint("seq", r.seq)
            .uint("ts_ms", r.timestamp_ms)
            .uint("len", r.payload_len)
            .str("inner", r.inner_address)
            .done();
    }
    std::string operator()(const DeliveryLogRecord& r) const {
        const auto& d = r.record;
        return Line(t, "delivery")
            .str("device", r.device)
            .str("flow", r.flow)
            .uint("seq", d.seq)
            .sym("dir", traffic::to_string(d.direction))
            .num("sent_at", d.sent_at)
            .opt("delivered_at", d.delivered_at)
            .sym("rat", to_string(d.rat_used))
            .done();
    }
    std::string operator()(const SignalRecord& r) const {
        return Line(t, "signal")
            .str("device", r.device)
            .num("x", r.position.x)
            .num("y", r.position.y)
            .opt("wifi_dbm", r.wifi_dbm)
            .opt("cbrs_dbm", r.cbrs_dbm)
            .num("wifi_rate_mbps", r.wifi_rate_mbps)
            .num("cbrs_rate_mbps", r.cbrs_rate_mbps)
            .sym("serving", to_string(r.serving))
            .done();
    }
};

}  // namespace

void EventLog::append(const EventLog& other) {
    records.insert(records.end(), other.records.begin(), other.records.end());
}

void EventLog::sort() {
    std::stable_sort(records.begin(), records.end(), [](const Record& a, const Record& b) { return a.t < b.t; });
}

std::string to_json_line(const Record& r) { return std::visit(Writer{r.t}, r.body); }

std::string EventLog::to_jsonl() const {
    std::string out;
    out.reserve(records.size() * 160);
    for (const Record& r : records) {
        out += to_json_line(r);
        out += '\n';
    }
    return out;
}

Record parse_json_line(const std::string& line) {
    const json j = json::parse(line);
    Record rec;
    rec.t = j.at("t").get<double>();
    const std::string type = j.at("type").get<std::string>();
    const std::string dev = j.at("device").get<std::string>();
    if (type == "run") {
        rec.body = RunRecord{dev, j.at("profile").get<std::string>(), parse_mode(j.at("mode").get<std::string>()),
                             j.at("seed").get<std::uint64_t>(), j.at("trace").get<std::string>()};
    } else if (type == "flow") {
        traffic::FlowSpec f;
        f.id = j.at("flow").get<std::string>();
        f.cls = traffic::parse_flow_class(j.at("class").get<std::string>());
        f.packet_interval_s = j.at("packet_interval_s").get<double>();
        f.packet_size_bytes = j.at("packet_size_bytes").get<double>();
        f.request_interval_s = j.at("request_interval_s").get<double>();
        f.buffer_depth_s = j.at("buffer_depth_s").get<double>();
        f.media_rate_mbps = j.at("media_rate_mbps").get<double>();
        f.start_s = j.at("start_s").get<double>();
        f.duration_s = j.at("duration_s").get<double>();
        f.criticality = traffic::parse_criticality(j.at("criticality").get<std::string>());
        f.staleness_s = j.at("staleness_s").get<double>();
        rec.body = FlowRecord{dev, f};
    } else if (type == "conn") {
        ConnRecord c{dev, parse_event_kind(j.at("event").get<std::string>()), parse_rat(j.at("rat").get<std::string>()),
                     std::nullopt};
        if (j.contains("node")) c.node = j["node"].get<std::string>();
        rec.body = c;
    } else if (type == "policy") {
        policy::PolicyDecision d;
        d.preferred_rat = parse_rat(j.at("rat").get<std::string>());
        d.reason = parse_reason(j.at("reason").get<std::string>());
        d.scan_request = j.at("scan_request").get<bool>();
        d.entry = j.at("entry").get<std::string>();
        rec.body = PolicyRecord{dev, d};
    } else if (type == "frame") {
        FrameRecord f;
        f.device = dev;
        f.flow = j.at("flow").get<std::string>();
        f.direction = j.at("dir").get<std::string>() == "UL" ? tunnel::FrameDirection::Ul : tunnel::FrameDirection::Dl;
        f.rat = parse_rat(j.at("rat").get<std::string>());
        f.duplicate = j.at("dup").get<bool>();
        f.probe = j.at("probe").get<bool>();
        f.session_id = j.at("session").get<std::uint64_t>();
        f.seq = j.at("seq").get<std::uint32_t>();
        f.timestamp_ms = j.at("ts_ms").get<std::uint64_t>();
        f.payload_len = j.at("len").get<std::uint16_t>();
        f.inner_address = j.at("inner").get<std::string>();
        rec.body = f;
    } else if (type == "delivery") {
        traffic::DeliveryRecord d;
        d.seq = j.at("seq").get<std::uint32_t>();
        d.direction = parse_direction(j.at("dir").get<std::string>());
        d.sent_at = j.at("sent_at").get<double>();
        d.delivered_at = opt_num(j, "delivered_at");
        d.rat_used = parse_rat(j.at("rat").get<std::string>());
        rec.body = DeliveryLogRecord{dev, j.at("flow").get<std::string>(), d};
    } else if (type == "signal") {
        SignalRecord s;
        s.device = dev;
        s.position = {j.at("x").get<double>(), j.at("y").get<double>()};
        s.wifi_dbm = opt_num(j, "wifi_dbm");
        s.cbrs_dbm = opt_num(j, "cbrs_dbm");
        s.wifi_rate_mbps = j.at("wifi_rate_mbps").get<double>();
        s.cbrs_rate_mbps = j.at("cbrs_rate_mbps").get<double>();
        s.serving = parse_rat(j.at("serving").get<std::string>());
        rec.body = s;
    } else {
        throw std::invalid_argument("unknown record type '" + type + "'");
    }
    return rec;
}

EventLog parse_jsonl(const std::string& text) {
    EventLog log;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            log.records.push_back(parse_json_line(line));
        } catch (const std::exception& e) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return log;
}

}  // namespace roamsim::log
