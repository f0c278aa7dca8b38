#include "roamsim/rf_env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "roamsim/rng.hpp"

namespace roamsim::rf {

namespace {

constexpr double kMinDistanceM = 0.1;

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " is not finite");
}

void validate_table(const std::vector<RateStep>& table, const char* name) {
    if (table.empty()) throw std::invalid_argument(std::string(name) + " rate table is empty");
    for (std::size_t i = 0; i < table.size(); ++i) {
        require_finite(table[i].threshold_dbm, "rate threshold");
        require_finite(table[i].mbps_per_20mhz, "rate value");
        if (table[i].mbps_per_20mhz < 0.0) throw std::invalid_argument("negative rate in table");
        if (i > 0 && (table[i].threshold_dbm <= table[i - 1].threshold_dbm ||
                      table[i].mbps_per_20mhz < table[i - 1].mbps_per_20mhz))
            throw std::invalid_argument(std::string(name) + " rate table must be strictly increasing in signal "
                                                            "and non-decreasing in rate");
    }
}

}  // namespace

void PathLossModel::validate() const {
    require_finite(reference_loss_db, "reference loss");
    require_finite(wall_penetration_db, "wall penetration");
    if (!(exponent >= 1.5 && exponent <= 6.0)) throw std::invalid_argument("path-loss exponent outside [1.5, 6]");
    if (!(shadowing_sigma_db >= 0.0) || !std::isfinite(shadowing_sigma_db))
        throw std::invalid_argument("shadowing sigma must be >= 0");
    for (const auto& b : buildings) {
        if (geometry::distinct_vertex_count(b) < 3) throw std::invalid_argument("building polygon is degenerate");
    }
}

RateTables RateTables::defaults() {
    // Anchored on the measured Wi-Fi edge (~0.5 Mbps around -89 dBm RSSI) and
    // private-network edge (8 Mbps over 40 MHz around -104 dBm RSRP).
    RateTables t;
    t.wifi = {{-91.0, 0.5}, {-87.5, 6.5}, {-82.0, 13.0}, {-76.0, 26.0}, {-70.0, 52.0}, {-64.0, 86.7}};
    t.cellular = {{-120.0, 0.5}, {-112.0, 2.0}, {-106.0, 4.0}, {-98.0, 10.0}, {-90.0, 20.0}, {-80.0, 40.0}};
    return t;
}

void RateTables::validate() const {
    validate_table(wifi, "wifi");
    validate_table(cellular, "cellular");
}

void validate_nodes(std::span<const RadioNode> nodes) {
    std::set<std::string> ids;
    std::set<int> pcis;
    for (const RadioNode& n : nodes) {
        if (n.id.empty()) throw std::invalid_argument("radio node without id");
        if (!ids.insert(n.id).second) throw std::invalid_argument("duplicate radio node id '" + n.id + "'");
        if (!is_finite(n.position)) throw std::invalid_argument("node '" + n.id + "' position is not finite");
        require_finite(n.tx_power_dbm, "tx power");
        if (n.rat == Rat::None) throw std::invalid_argument("node '" + n.id + "' has no RAT");
        if (!(n.bandwidth_mhz > 0.0)) throw std::invalid_argument("node '" + n.id + "' bandwidth must be > 0");
        if (n.rat == Rat::Cbrs) {
            if (n.carriers != 1 && n.carriers != 2)
                throw std::invalid_argument("CBRS node '" + n.id + "' carrier count must be 1 or 2");
            if (n.pci) {
                if (!pcis.insert(*n.pci).second)
                    throw std::invalid_argument("CBRS node '" + n.id + "' reuses PCI " + std::to_string(*n.pci));
            }
        } else if (n.carriers != 1) {
            throw std::invalid_argument("node '" + n.id + "' carrier aggregation is CBRS-only");
        }
    }
}

SignalMetric metric_for(Rat rat) { return rat == Rat::Wifi ? SignalMetric::Rssi : SignalMetric::Rsrp; }

double shadow_db(const PathLossModel& model, const std::string& node_id, Vec2 pos) {
    if (model.shadowing_sigma_db == 0.0) return 0.0;
    const auto ix = static_cast<std::int64_t>(std::floor(pos.x));
    const auto iy = static_cast<std::int64_t>(std::floor(pos.y));
    std::uint64_t key = rng::mix(model.seed, rng::fnv1a(node_id));
    key = rng::mix(key, static_cast<std::uint64_t>(ix));
    key = rng::mix(key, static_cast<std::uint64_t>(iy));
    const std::uint64_t a = rng::splitmix64(key);
    const std::uint64_t b = rng::splitmix64(a);
    // Box-Muller; u1 in (0, 1].
    const double u1 = 1.0 - rng::to_unit(a);
    const double u2 = rng::to_unit(b);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return model.shadowing_sigma_db * z;
}

SignalSample signal_at(const RadioNode& node, Vec2 pos, const PathLossModel& model) {
    if (!is_finite(pos) || !is_finite(node.position) || !std::isfinite(node.tx_power_dbm))
        throw std::invalid_argument("signal_at: non-finite input");
    const double d = std::max(distance(node.position, pos), kMinDistanceM);
    int walls = 0;
    for (const auto& building : model.buildings) walls += geometry::edge_crossings(building, node.position, pos);
    double value = node.tx_power_dbm - model.reference_loss_db - 10.0 * model.exponent * std::log10(d) -
                   model.wall_penetration_db * walls - shadow_db(model, node.id, pos);
    value = std::min(value, node.tx_power_dbm);
    return SignalSample{node.id, metric_for(node.rat), value, pos};
}

std::optional<ServerPick> best_server(std::span<const RadioNode> nodes, Vec2 pos, Rat rat,
                                      const PathLossModel& model) {
    std::optional<ServerPick> best;
    for (const RadioNode& n : nodes) {
        if (n.rat != rat) continue;
        SignalSample s = signal_at(n, pos, model);
        if (!best || s.value_dbm > best->sample.value_dbm ||
            (s.value_dbm == best->sample.value_dbm && n.id < best->node->id)) {
            best = ServerPick{&n, std::move(s)};
        }
    }
    return best;
}

double link_rate(const SignalSample& sample, double bandwidth_mhz, const RateTables& tables) {
    const auto& table = sample.metric == SignalMetric::Rssi ? tables.wifi : tables.cellular;
    double per20 = 0.0;
    for (const RateStep& step : table) {
        if (sample.value_dbm >= step.threshold_dbm) per20 = step.mbps_per_20mhz;
        else break;
    }
    return per20 * bandwidth_mhz / 20.0;
}

double coverage_edge(std::span<const RadioNode> nodes, const MobilityTrace& path, Rat rat, double threshold_dbm,
                     const PathLossModel& model, double step_m) {
    if (path.waypoints.empty()) throw std::invalid_argument("coverage_edge: empty path");
    if (!(step_m > 0.0 && step_m <= 1.0)) throw std::invalid_argument("coverage_edge: step must be in (0, 1] m");
    const double length = path.path_length();
    const auto samples = static_cast<std::size_t>(std::ceil(length / step_m));
    auto arclength = [&](std::size_t i) { return std::min(static_cast<double>(i) * step_m, length); };
    auto covered = [&](std::size_t i) {
        const auto pick = best_server(nodes, path.position_at_arclength(arclength(i)), rat, model);
        return pick && pick->sample.value_dbm >= threshold_dbm;
    };
    // Walk backwards to the last covered sample.
    for (std::size_t i = samples + 1; i-- > 0;) {
        if (covered(i)) {
            if (i == samples) return kBeyondPathEnd;
            return arclength(i + 1);
        }
    }
    return 0.0;
}

}  // namespace roamsim::rf
