#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "roamsim/device.hpp"
#include "roamsim/mobility.hpp"
#include "roamsim/policy/engine.hpp"
#include "roamsim/rf_env.hpp"
#include "roamsim/traffic.hpp"
#include "roamsim/tunnel/session.hpp"

namespace roamsim {

enum class Mode { Traditional, Tunnel };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view text);

// Validation failure with a source position; what() is "file:line: message".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string file, int line, const std::string& message);
    const std::string& file() const { return file_; }
    int line() const { return line_; }
    const std::string& message() const { return message_; }

private:
    std::string file_;
    int line_;
    std::string message_;
};

struct Environment {
    std::vector<rf::RadioNode> nodes;
    rf::PathLossModel path_loss;
    rf::RateTables rates = rf::RateTables::defaults();
    // Macro SINR is RSRP minus this noise floor.
    double macro_noise_floor_dbm = -125.0;
};

struct PolicyConfig {
    policy::RadioPreferenceProfile profile;
    std::optional<policy::GeofenceSpec> geofence;
    policy::Hysteresis hysteresis;
};

struct DeviceConfig {
    std::string id;
    std::string profile_name;
    std::string trace_name;
    MobilityTrace trace;
    std::vector<traffic::FlowSpec> flows;
    Mode mode = Mode::Traditional;
};

struct Scenario {
    Environment env;
    std::map<std::string, device::DeviceProfile> profiles;
    std::vector<DeviceConfig> devices;
    tunnel::TunnelConfig tunnel;
    std::optional<PolicyConfig> policy;
    double tick_s = 0.01;
    double duration_s = 0.0;
    std::uint64_t seed = 1;
    int seed_count = 20;
    double mbb_overlap_s = 0.5;
    // Declared parking-lot edge on the reference walk, if any.
    std::optional<Vec2> reference_edge;

    // Throws ConfigError (line 0) for cross-reference problems.
    void validate() const;
    std::size_t tick_count() const;
    const device::DeviceProfile& profile_of(const DeviceConfig& d) const;
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text, const std::string& file_name,
                        const std::filesystem::path& base_dir);

std::map<std::string, device::DeviceProfile> load_profile_library(const std::filesystem::path& path);
std::map<std::string, device::DeviceProfile> parse_profile_library(const std::string& text,
                                                                   const std::string& file_name);
// Stable, byte-reproducible text form.
std::string emit_profile_library(const std::vector<device::DeviceProfile>& profiles);

policy::RadioPreferenceProfile load_policy_profile(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Write to a temporary sibling, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace roamsim
