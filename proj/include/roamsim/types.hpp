#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace roamsim {

// Planar coordinates in meters.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline bool is_finite(Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

enum class Rat : std::uint8_t { None, Wifi, Cbrs, Macro };

std::string_view to_string(Rat rat);
Rat parse_rat(std::string_view text);

// The other access technology of the Wi-Fi / CBRS pair.
inline Rat other_rat(Rat r) {
    if (r == Rat::Wifi) return Rat::Cbrs;
    if (r == Rat::Cbrs) return Rat::Wifi;
    return Rat::None;
}

enum class SignalMetric : std::uint8_t { Rssi, Rsrp };

struct SignalSample {
    std::string node_id;
    SignalMetric metric = SignalMetric::Rssi;
    double value_dbm = 0.0;
    Vec2 at;
};

}  // namespace roamsim
