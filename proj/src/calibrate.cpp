#include "roamsim/calibrate.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "roamsim/sim.hpp"

namespace roamsim::calibrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Stand-in for a direction with no measurable transition in a run.
constexpr double kMissingS = 60.0;
// Aim well inside the seamless bound.
constexpr double kSeamlessAimS = 0.25;
// Zoom targets are range assignments, the shopping cells are table values.
constexpr double kZoomWeight = 0.25;

CellTarget cell(const YAML::Node& n, const std::string& file, const std::string& what) {
    if (!n) throw ConfigError(file, 0, "missing '" + what + "'");
    const auto text = n.as<std::string>();
    if (text == "Seamless" || text == "seamless") return {true, 0.0};
    try {
        const double v = n.as<double>();
        if (!(v >= 0.0) || !std::isfinite(v)) throw YAML::Exception(n.Mark(), "");
        return {false, v};
    } catch (const YAML::Exception&) {
        throw ConfigError(file, n.Mark().line + 1, what + ": expected seconds or Seamless, got '" + text + "'");
    }
}

struct Param {
    const char* name;
    double device::DeviceProfile::*field;
    std::vector<double> grid;
};

const std::vector<Param>& params() {
    static const std::vector<Param> p = {
        {"cell_scan_interval_s", &device::DeviceProfile::cell_scan_interval_s, {0.5, 1, 1.5, 2, 3, 4, 5, 6}},
        {"cell_attach_delay_s", &device::DeviceProfile::cell_attach_delay_s, {0, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0}},
        {"wifi_disconnect_rssi", &device::DeviceProfile::wifi_disconnect_rssi,
         {-91, -90.5, -90, -89.5, -89, -88.5, -88, -87.5, -87}},
        {"wifi_disconnect_hold_s", &device::DeviceProfile::wifi_disconnect_hold_s,
         {0, 0.5, 1, 1.5, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12}},
        {"wifi_scan_interval_s", &device::DeviceProfile::wifi_scan_interval_s, {0.5, 1, 2, 3, 4, 5}},
        {"wifi_attach_delay_s", &device::DeviceProfile::wifi_attach_delay_s, {0, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2}},
        {"wifi_attach_rssi", &device::DeviceProfile::wifi_attach_rssi, {-87, -85, -82, -80}},
    };
    return p;
}

// Indices into params(): Wi-Fi -> cell stall, detach point, cell -> Wi-Fi stall.
const std::vector<std::vector<std::size_t>>& blocks() {
    static const std::vector<std::vector<std::size_t>> b = {{0, 1}, {2, 3}, {4, 5}};
    return b;
}

double objective(const Target& t, const Measured& m) {
    if (!m.detach_after_edge) return kInf;
    auto err = [](const CellTarget& c, double v) {
        const double e = c.seamless ? std::max(0.0, v - kSeamlessAimS) : std::abs(v - c.seconds);
        return e * e;
    };
    double sum = err(t.wifi_to_cell, m.wifi_to_cell) + err(t.cell_to_wifi, m.cell_to_wifi);
    if (t.zoom_wifi_to_cell) sum += kZoomWeight * err(*t.zoom_wifi_to_cell, m.zoom_wifi_to_cell);
    return sum;
}

std::string seconds_text(const CellTarget& c) {
    if (c.seamless) return "Seamless";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f S", c.seconds);
    return buf;
}

}  // namespace

Targets parse_targets(const std::string& text, const std::string& file_name) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(file_name, e.mark.line + 1, e.msg);
    }
    Targets out;
    if (!root || root.IsNull()) return out;
    if (!root.IsMap()) throw ConfigError(file_name, 1, "targets file must be a mapping");
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (key != "tolerance_s" && key != "targets")
            throw ConfigError(file_name, kv.first.Mark().line + 1, "unknown key '" + key + "' in targets");
    }
    if (root["tolerance_s"]) {
        out.tolerance_s = root["tolerance_s"].as<double>();
        if (!(out.tolerance_s > 0.0))
            throw ConfigError(file_name, root["tolerance_s"].Mark().line + 1, "tolerance_s must be > 0");
    }
    const auto list = root["targets"];
    if (!list || list.IsNull()) return out;
    if (!list.IsSequence()) throw ConfigError(file_name, list.Mark().line + 1, "targets must be a list");
    for (const auto& n : list) {
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (key != "model_name" && key != "wifi_to_cell" && key != "cell_to_wifi" && key != "zoom_wifi_to_cell" &&
                key != "tunnel_wifi_to_cell" && key != "supports_tunnel_client")
                throw ConfigError(file_name, kv.first.Mark().line + 1, "unknown key '" + key + "' in target");
        }
        Target t;
        if (!n["model_name"]) throw ConfigError(file_name, n.Mark().line + 1, "target without model_name");
        t.model_name = n["model_name"].as<std::string>();
        t.wifi_to_cell = cell(n["wifi_to_cell"], file_name, "wifi_to_cell");
        t.cell_to_wifi = cell(n["cell_to_wifi"], file_name, "cell_to_wifi");
        if (n["zoom_wifi_to_cell"]) t.zoom_wifi_to_cell = cell(n["zoom_wifi_to_cell"], file_name, "zoom_wifi_to_cell");
        if (n["supports_tunnel_client"]) t.supports_tunnel_client = n["supports_tunnel_client"].as<bool>();
        if (n["tunnel_wifi_to_cell"]) {
            if (!t.supports_tunnel_client)
                throw ConfigError(file_name, n["tunnel_wifi_to_cell"].Mark().line + 1,
                                  "tunnel_wifi_to_cell on a model without tunnel client");
            t.tunnel_wifi_to_cell = cell(n["tunnel_wifi_to_cell"], file_name, "tunnel_wifi_to_cell");
        }
        out.targets.push_back(std::move(t));
    }
    return out;
}

Targets load_targets(const std::filesystem::path& path) { return parse_targets(read_file(path), path.string()); }

Reference make_reference(const Scenario& sc, std::vector<std::uint64_t> seeds) {
    if (sc.devices.empty()) throw std::invalid_argument("calibration needs a scenario with at least one device");
    Reference ref;
    ref.scenario = sc;
    ref.device = sc.devices.front();
    ref.device.mode = Mode::Traditional;
    ref.device.flows.clear();
    for (const auto& f : sc.devices.front().flows) {
        if (f.cls == traffic::FlowClass::Interactive && ref.interactive_flow.empty()) {
            ref.interactive_flow = f.id;
            ref.device.flows.push_back(f);
        } else if (f.cls == traffic::FlowClass::Live && ref.live_flow.empty()) {
            ref.live_flow = f.id;
            ref.device.flows.push_back(f);
        }
    }
    if (ref.interactive_flow.empty())
        throw std::invalid_argument("calibration needs an INTERACTIVE flow on the first device");
    ref.device.profile_name = "__candidate__";
    ref.scenario.devices = {ref.device};
    ref.track = kernels::radio_track_serial(sc.env, ref.device.trace, sc.tick_s, sc.tick_count());
    ref.seeds = seeds.empty() ? sim::default_seeds(sc) : std::move(seeds);

    ref.live_edge_s = std::numeric_limits<double>::quiet_NaN();
    for (const auto& f : ref.device.flows) {
        if (f.id != ref.live_flow) continue;
        const double demand = f.demand_mbps();
        for (std::size_t i = 0; i < ref.track.ticks.size(); ++i) {
            const double t = static_cast<double>(i) * sc.tick_s;
            if (t >= f.start_s && ref.track.ticks[i].wifi_rate_mbps < demand) {
                ref.live_edge_s = t;
                break;
            }
        }
    }
    return ref;
}

Measured measure(const Reference& ref, const device::DeviceProfile& profile) {
    Scenario sc = ref.scenario;
    sc.profiles[ref.device.profile_name] = profile;
    double wc = 0.0, cw = 0.0, zoom = 0.0;
    bool ok = true;
    for (std::uint64_t seed : ref.seeds) {
        const sim::DeviceRun run = sim::run_device(sc, ref.device, ref.track, seed, Mode::Traditional, nullptr, false);
        auto worst = [&](const std::string& flow, Rat from) {
            std::optional<double> v;
            if (const auto* f = run.flow(flow))
                for (const auto& i : f->interruptions)
                    if (i.measurable && i.from == from && i.to == other_rat(from)) v = std::max(v.value_or(0.0), i.max_gap_s);
            return v.value_or(kMissingS);
        };
        wc += worst(ref.interactive_flow, Rat::Wifi);
        cw += worst(ref.interactive_flow, Rat::Cbrs);
        if (!ref.live_flow.empty()) zoom += worst(ref.live_flow, Rat::Wifi);
        if (std::isfinite(ref.live_edge_s)) {
            for (const auto& tr : run.transitions) {
                if (tr.from != Rat::Wifi) continue;
                if (tr.t_detach < ref.live_edge_s + ref.detach_margin_s - 1e-9) ok = false;
                break;
            }
        }
    }
    const auto n = static_cast<double>(ref.seeds.size());
    return Measured{wc / n, cw / n, zoom / n, ok};
}

double measure_tunnel(const Reference& ref, const device::DeviceProfile& profile) {
    if (ref.live_flow.empty()) throw std::invalid_argument("tunnel calibration needs a LIVE flow");
    if (!ref.scenario.policy) throw std::invalid_argument("tunnel calibration needs a policy section");
    Scenario sc = ref.scenario;
    sc.profiles[ref.device.profile_name] = profile;
    double sum = 0.0;
    for (std::uint64_t seed : ref.seeds) {
        const sim::DeviceRun run = sim::run_device(sc, ref.device, ref.track, seed, Mode::Tunnel, nullptr, false);
        std::optional<double> v;
        for (const auto& i : run.flow(ref.live_flow)->interruptions)
            if (i.measurable && i.from == Rat::Wifi && i.to == Rat::Cbrs) v = std::max(v.value_or(0.0), i.max_gap_s);
        sum += v.value_or(kMissingS);
    }
    return sum / static_cast<double>(ref.seeds.size());
}

std::vector<Residual> residuals(const Target& target, const Measured& m, double tolerance_s) {
    std::vector<Residual> out;
    auto add = [&](const char* name, const CellTarget& c, double v) {
        Residual r{name, c, v, 0.0, false};
        if (c.seamless) {
            r.residual = std::max(0.0, v - traffic::kSeamlessBelowS);
            r.ok = v < traffic::kSeamlessBelowS;
        } else {
            r.residual = std::abs(v - c.seconds);
            r.ok = r.residual <= tolerance_s;
        }
        out.push_back(r);
    };
    add("shopping wifi->cell", target.wifi_to_cell, m.wifi_to_cell);
    add("shopping cell->wifi", target.cell_to_wifi, m.cell_to_wifi);
    if (target.zoom_wifi_to_cell) add("zoom wifi->cell", *target.zoom_wifi_to_cell, m.zoom_wifi_to_cell);
    if (target.tunnel_wifi_to_cell)
        add("tunnel zoom wifi->cell", *target.tunnel_wifi_to_cell, m.tunnel_wifi_to_cell.value_or(kMissingS));
    return out;
}

CalibrationError::CalibrationError(CalibrationResult best)
    : std::runtime_error([&] {
          std::string msg = "calibration failed for '" + best.profile.model_name + "':";
          for (const auto& r : best.residuals) {
              char buf[160];
              std::snprintf(buf, sizeof buf, " %s residual %.3f s%s;", r.cell.c_str(), r.residual, r.ok ? "" : " (out of tolerance)");
              msg += buf;
          }
          return msg;
      }()),
      best_(std::move(best)) {}

CalibrationResult calibrate_profile(const Target& target, const Reference& ref, double tolerance_s) {
    if (!(tolerance_s > 0.0)) throw std::invalid_argument("tolerance must be > 0");
    device::DeviceProfile p;
    p.model_name = target.model_name;
    p.wifi_disconnect_rssi = -89.0;
    p.wifi_disconnect_hold_s = 0.0;
    p.wifi_attach_rssi = -85.0;
    p.cell_scan_interval_s = 1.0;
    p.wifi_scan_interval_s = 2.0;
    p.cell_attach_delay_s = 0.3;
    p.wifi_attach_delay_s = 0.3;
    p.cell_min_rsrp = -110.0;
    p.prefers_wifi = true;
    p.supports_tunnel_client = target.supports_tunnel_client;

    std::map<std::vector<double>, std::pair<double, Measured>> cache;
    std::size_t evaluations = 0;
    auto key_of = [](const device::DeviceProfile& q) {
        std::vector<double> k;
        for (const auto& prm : params()) k.push_back(q.*(prm.field));
        return k;
    };
    auto score = [&](const device::DeviceProfile& q) -> std::pair<double, Measured> {
        const auto k = key_of(q);
        if (auto it = cache.find(k); it != cache.end()) return it->second;
        std::pair<double, Measured> v{kInf, Measured{}};
        try {
            q.validate();
            ++evaluations;
            const Measured m = measure(ref, q);
            v = {objective(target, m), m};
        } catch (const std::invalid_argument&) {
        }
        cache.emplace(k, v);
        return v;
    };

    auto best = score(p);
    // The tunnel cell is only checked for candidates that would become the
    // new best; a miss disqualifies the candidate.
    std::map<std::vector<double>, double> tunnel_cache;
    auto tunnel_ok = [&](const device::DeviceProfile& q, Measured& m) {
        if (!target.tunnel_wifi_to_cell) return true;
        const auto k = key_of(q);
        auto it = tunnel_cache.find(k);
        if (it == tunnel_cache.end()) it = tunnel_cache.emplace(k, measure_tunnel(ref, q)).first;
        m.tunnel_wifi_to_cell = it->second;
        const CellTarget& c = *target.tunnel_wifi_to_cell;
        return c.seamless ? it->second < traffic::kSeamlessBelowS : std::abs(it->second - c.seconds) <= tolerance_s;
    };
    if (!tunnel_ok(p, best.second)) best.first = kInf;
    auto consider = [&](const device::DeviceProfile& q) {
        auto s = score(q);
        if (s.first < best.first - 1e-12 && tunnel_ok(q, s.second)) {
            best = s;
            p = q;
            return true;
        }
        return false;
    };
    // Joint grid per block of coupled parameters, then single-axis polish.
    for (int round = 0; round < 3; ++round) {
        const double before = best.first;
        for (const auto& block : blocks()) {
            const device::DeviceProfile base = p;
        std::vector<std::size_t> idx(block.size(), 0);
        while (true) {
            device::DeviceProfile q = base;
            for (std::size_t b = 0; b < block.size(); ++b) q.*(params()[block[b]].field) = params()[block[b]].grid[idx[b]];
            consider(q);
            std::size_t b = 0;
            while (b < block.size() && ++idx[b] == params()[block[b]].grid.size()) idx[b++] = 0;
            if (b == block.size()) break;
        }
        }
        if (!(best.first < before - 1e-12)) break;
    }
    for (int sweep = 0; sweep < 6; ++sweep) {
        bool improved = false;
        for (const auto& prm : params()) {
            for (double v : prm.grid) {
                device::DeviceProfile q = p;
                q.*(prm.field) = v;
                improved = consider(q) || improved;
            }
        }
        if (!improved) break;
    }

    CalibrationResult res;
    res.profile = p;
    res.measured = best.second;
    res.residuals = residuals(target, best.second, tolerance_s);
    res.within_tolerance = best.second.detach_after_edge &&
                           std::all_of(res.residuals.begin(), res.residuals.end(), [](const Residual& r) { return r.ok; });
    res.evaluations = evaluations;
    if (!res.within_tolerance) throw CalibrationError(res);
    return res;
}

std::vector<device::DeviceProfile> Library::profiles() const {
    std::vector<device::DeviceProfile> out;
    for (const auto& r : results) out.push_back(r.profile);
    return out;
}

Library calibrate_all(const Targets& targets, const Reference& ref) {
    Library lib;
    for (const auto& t : targets.targets) {
        try {
            lib.results.push_back(calibrate_profile(t, ref, targets.tolerance_s));
        } catch (const CalibrationError& e) {
            lib.results.push_back(e.best());
            lib.ok = false;
        }
    }
    return lib;
}

std::string residual_report(const Library& lib) {
    std::string out = "model,cell,target,measured_s,residual_s,ok\n";
    for (const auto& r : lib.results) {
        for (const auto& x : r.residuals) {
            char buf[256];
            std::snprintf(buf, sizeof buf, "%s,%s,%s,%.3f,%.3f,%s\n", r.profile.model_name.c_str(), x.cell.c_str(),
                          seconds_text(x.target).c_str(), x.measured, x.residual, x.ok ? "true" : "false");
            out += buf;
        }
    }
    return out;
}

}  // namespace roamsim::calibrate
