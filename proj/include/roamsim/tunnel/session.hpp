#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "roamsim/tunnel/frame.hpp"
#include "roamsim/types.hpp"

namespace roamsim::tunnel {

enum class TunnelMode { Single, MakeBeforeBreak, Duplicate, Split };

std::string_view to_string(TunnelMode m);
TunnelMode parse_tunnel_mode(std::string_view text);

struct TunnelConfig {
    TunnelMode mode = TunnelMode::MakeBeforeBreak;
    double probe_interval_s = 0.25;
    int dead_after_missed = 3;
    double rtt_base_wifi_ms = 20.0;
    double rtt_base_cbrs_ms = 40.0;
    double loss_weight = 2.0;
    double ewma_alpha = 0.7;
    // Switch away when serving score > ratio * other score for this many
    // consecutive probe rounds.
    double congestion_ratio = 1.5;
    int congestion_rounds = 2;
    std::size_t recv_window = 1024;
    std::size_t buffer_frames = 64;
    std::string inner_address = "10.77.0.2";

    void validate() const;
    double rtt_ref_ms(Rat r) const { return r == Rat::Wifi ? rtt_base_wifi_ms : rtt_base_cbrs_ms; }
    // Time the congestion condition must persist: rounds beyond the first.
    double congestion_dwell_s() const { return probe_interval_s * (congestion_rounds - 1); }
};

struct PathState {
    Rat rat = Rat::None;
    bool attached = false;  // outer interface present
    bool alive = false;
    double rtt_ewma_ms = 0.0;
    double loss_ewma = 0.0;
    bool measured = false;
    std::optional<double> last_probe_at;
    double next_probe_at = 0.0;
    int missed = 0;
    int round_trips = 0;  // completed since the path came up
    std::optional<double> pending_ack_at;
    double pending_rtt_ms = 0.0;
    bool pending_lost = false;
    double congestion_score = 1.0;

    // Carries data: alive and at least one probe round trip completed.
    bool usable() const { return alive && round_trips >= 1; }
};

void record_ack(PathState& path, double rtt_ms, const TunnelConfig& cfg);
void record_loss(PathState& path, const TunnelConfig& cfg);

enum class DedupResult { Accept, Duplicate, Stale };

std::string_view to_string(DedupResult r);

// Sliding window over the highest `size` sequence numbers seen.
class RecvWindow {
public:
    explicit RecvWindow(std::size_t size = 1024);
    DedupResult offer(std::uint32_t seq);
    std::size_t size() const { return bits_.size(); }

private:
    std::vector<bool> bits_;
    std::optional<std::uint64_t> highest_;
};

// Bounded FIFO that drops its oldest element when full.
template <typename T>
class DropOldestQueue {
public:
    explicit DropOldestQueue(std::size_t capacity) : capacity_(capacity) {}
    // Returns the number of dropped elements (0 or 1).
    std::size_t push(T v) {
        std::size_t dropped = 0;
        if (items_.size() == capacity_) {
            items_.pop_front();
            dropped = 1;
        }
        items_.push_back(std::move(v));
        return dropped;
    }
    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::deque<T>& items() { return items_; }
    const std::deque<T>& items() const { return items_; }

private:
    std::size_t capacity_;
    std::deque<T> items_;
};

struct SessionState {
    std::uint64_t session_id = 0;
    std::string inner_address;
    TunnelMode mode = TunnelMode::MakeBeforeBreak;
    std::array<PathState, 2> paths;  // WIFI, CBRS
    Rat active_rat = Rat::None;       // client's current UL path
    Rat last_ul_rat = Rat::None;      // server's reflection state
    RecvWindow ul_window;
    RecvWindow dl_window;
    std::array<double, 2> split_credit{0.0, 0.0};

    SessionState(std::uint64_t id, const TunnelConfig& cfg);

    PathState& path(Rat r);
    const PathState& path(Rat r) const;
    double score(Rat r) const { return path(r).congestion_score; }
};

// Attach / detach of the outer interface for one RAT.
void set_attached(SessionState& s, Rat r, bool attached, double t);

struct ProbeResult {
    bool delivered = false;
    double rtt_ms = 0.0;
};

// Resolves due acks and sends probes that are due at time t. `send` is asked
// for the fate of each probe sent; every probe is passed through the codec
// and reported to `trace` when given.
void advance_probes(SessionState& s, const TunnelConfig& cfg, double t, const std::function<ProbeResult(Rat)>& send,
                    const std::function<void(const TunnelFrame&, double)>& trace = {});

// Paths to send the next UL data frame on; empty means tunnel down.
std::vector<Rat> client_select_path(SessionState& s, Rat preferred, const std::array<double, 2>& link_rate_mbps);

// Server side: record a received UL frame. Data frames update reflection.
DedupResult server_receive_ul(SessionState& s, const TunnelFrame& frame);

// DL reflection: the RAT of the most recent UL data frame.
std::optional<Rat> server_route_dl(const SessionState& s);

DedupResult client_receive_dl(SessionState& s, const TunnelFrame& frame);

}  // namespace roamsim::tunnel
