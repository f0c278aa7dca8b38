#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roamsim/device.hpp"
#include "roamsim/types.hpp"

namespace roamsim::traffic {

enum class FlowClass { Live, Interactive, Buffered };
enum class Criticality { Critical, NonCritical };
enum class Direction : std::uint8_t { Ul = 0, Dl = 1 };

std::string_view to_string(FlowClass c);
std::string_view to_string(Criticality c);
std::string_view to_string(Direction d);
FlowClass parse_flow_class(std::string_view text);
Criticality parse_criticality(std::string_view text);

// Synthetic application flow. LIVE is conversational audio/video (both
// directions), INTERACTIVE is click-driven request/response (one DL
// transaction per click), BUFFERED is chunked streaming with fetch-ahead.
struct FlowSpec {
    std::string id;
    FlowClass cls = FlowClass::Live;
    double packet_interval_s = 0.02;
    double packet_size_bytes = 2500.0;
    double request_interval_s = 1.0;
    double buffer_depth_s = 10.0;
    double media_rate_mbps = 0.4;
    double start_s = 0.0;
    double duration_s = 60.0;
    Criticality criticality = Criticality::Critical;
    double staleness_s = 2.0;  // LIVE only

    void validate() const;
    // Link rate this flow needs to make progress.
    double demand_mbps() const;
    // Seconds of media per BUFFERED chunk.
    double chunk_seconds() const;
    // Nominal spacing of deliveries.
    double nominal_interval() const;
};

struct DeliveryRecord {
    std::uint32_t seq = 0;
    double sent_at = 0.0;
    std::optional<double> delivered_at;
    Direction direction = Direction::Dl;
    Rat rat_used = Rat::None;
};

// Piecewise-constant link: slot i covers [start + i*tick, start + (i+1)*tick).
struct LinkSlot {
    Rat rat = Rat::None;
    double rate_mbps = 0.0;
};

struct LinkTimeline {
    double start_s = 0.0;
    double tick_s = 0.01;
    std::vector<LinkSlot> slots;

    double end_s() const { return start_s + tick_s * static_cast<double>(slots.size()); }
    std::size_t slot_of(double t) const;
};

// Send times of a flow, per direction, with the seed-dependent phase applied.
struct PacketPlan {
    std::uint32_t seq;
    double sent_at;
    Direction direction;
};
std::vector<PacketPlan> schedule(const FlowSpec& flow, std::uint64_t seed);

std::vector<DeliveryRecord> deliver(const FlowSpec& flow, const LinkTimeline& link, std::uint64_t seed);

struct InterruptionRecord {
    std::string flow_id;
    Rat from = Rat::None;
    Rat to = Rat::None;
    double t_detach = 0.0;
    double t_attach = 0.0;
    double switch_time_s = 0.0;
    double max_gap_s = 0.0;
    bool seamless = false;
    bool measurable = true;
};

inline constexpr double kSeamlessBelowS = 0.5;
inline constexpr double kWindowBeforeS = 1.0;
inline constexpr double kWindowAfterS = 5.0;

std::vector<InterruptionRecord> measure_interruption(const FlowSpec& flow, const std::vector<DeliveryRecord>& records,
                                                     const std::vector<device::SwitchInterval>& transitions);

struct Stall {
    double start_s = 0.0;
    double duration_s = 0.0;
};

// Playout of a BUFFERED flow: playback starts at the first chunk and each
// chunk is due chunk_seconds() after the previous one, shifted by stalls.
std::vector<Stall> rebuffer_events(const FlowSpec& flow, const std::vector<DeliveryRecord>& records);

}  // namespace roamsim::traffic
