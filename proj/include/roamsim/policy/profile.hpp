#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "roamsim/types.hpp"

namespace roamsim::policy {

inline constexpr double kMinRsrp = -156.0;
inline constexpr double kMaxRsrp = -31.0;
inline constexpr double kMinRssi = -90.0;
inline constexpr double kMaxRssi = -30.0;

struct PreferenceEntry {
    std::string name;  // network name (WWAN) or SSID (WLAN)
    double threshold_dbm = 0.0;

    friend bool operator==(const PreferenceEntry&, const PreferenceEntry&) = default;
};

// Prioritized network lists. WWAN entries map to the private cellular RAT,
// WLAN entries to Wi-Fi. rat_order follows the section order of the file.
struct RadioPreferenceProfile {
    std::vector<PreferenceEntry> wwan;
    std::vector<PreferenceEntry> wlan;
    double wlan_scan_interval_s = 10.0;
    std::vector<Rat> rat_order;

    const std::vector<PreferenceEntry>& entries(Rat r) const { return r == Rat::Wifi ? wlan : wwan; }
    friend bool operator==(const RadioPreferenceProfile&, const RadioPreferenceProfile&) = default;
};

class ProfileError : public std::runtime_error {
public:
    ProfileError(int line, const std::string& msg)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line), message_(msg) {}
    int line() const { return line_; }
    const std::string& message() const { return message_; }

private:
    int line_;
    std::string message_;
};

// Text grammar:
//   # comment
//   [WWAN] | [WLAN]
//   name,threshold_dbm
//   scan_interval_s=<seconds>      (WLAN only)
RadioPreferenceProfile parse_profile(std::string_view text);
void validate_profile(const RadioPreferenceProfile& profile);
std::string emit_profile_text(const RadioPreferenceProfile& profile);

// Canonical single-line form, e.g.
//   RPP/1;ORDER=WWAN,WLAN;SCAN=10;WWAN=CelonaPrivate:-110;WLAN=Celona:-90
std::string emit_profile_payload(const RadioPreferenceProfile& profile);
RadioPreferenceProfile parse_profile_payload(std::string_view payload);

}  // namespace roamsim::policy
