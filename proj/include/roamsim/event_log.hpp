#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "roamsim/device.hpp"
#include "roamsim/policy/engine.hpp"
#include "roamsim/scenario.hpp"
#include "roamsim/traffic.hpp"
#include "roamsim/tunnel/frame.hpp"

namespace roamsim::log {

struct RunRecord {
    std::string device;
    std::string profile;
    Mode mode = Mode::Traditional;
    std::uint64_t seed = 0;
    std::string trace;
};

struct FlowRecord {
    std::string device;
    traffic::FlowSpec spec;
};

struct ConnRecord {
    std::string device;
    device::EventKind kind = device::EventKind::Attached;
    Rat rat = Rat::None;
    std::optional<std::string> node;
};

struct PolicyRecord {
    std::string device;
    policy::PolicyDecision decision;
};

struct FrameRecord {
    std::string device;
    std::string flow;  // empty for probes
    tunnel::FrameDirection direction = tunnel::FrameDirection::Ul;
    Rat rat = Rat::Wifi;
    bool duplicate = false;
    bool probe = false;
    std::uint64_t session_id = 0;
    std::uint32_t seq = 0;
    std::uint64_t timestamp_ms = 0;
    std::uint16_t payload_len = 0;
    std::string inner_address;
};

struct DeliveryLogRecord {
    std::string device;
    std::string flow;
    traffic::DeliveryRecord record;
};

struct SignalRecord {
    std::string device;
    Vec2 position;
    std::optional<double> wifi_dbm;
    std::optional<double> cbrs_dbm;
    double wifi_rate_mbps = 0.0;
    double cbrs_rate_mbps = 0.0;
    Rat serving = Rat::None;
};

using Body = std::variant<RunRecord, FlowRecord, ConnRecord, PolicyRecord, FrameRecord, DeliveryLogRecord, SignalRecord>;

struct Record {
    double t = 0.0;
    Body body;
};

// Records in non-decreasing time order; ties keep insertion order.
struct EventLog {
    std::vector<Record> records;

    void add(double t, Body body) { records.push_back({t, std::move(body)}); }
    void append(const EventLog& other);
    void sort();
    std::string to_jsonl() const;
};

std::string to_json_line(const Record& r);
Record parse_json_line(const std::string& line);
EventLog parse_jsonl(const std::string& text);

}  // namespace roamsim::log
