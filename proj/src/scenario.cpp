#include "roamsim/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace roamsim {

namespace {

namespace fs = std::filesystem;

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

class Reader {
public:
    explicit Reader(std::string file) : file_(std::move(file)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
        throw ConfigError(file_, line_of(at), msg);
    }

    void require_map(const YAML::Node& n, const std::string& what) const {
        if (!n.IsMap()) fail(n, what + " must be a mapping");
    }

    void allow_keys(const YAML::Node& n, std::initializer_list<std::string_view> keys, const std::string& what) const {
        require_map(n, what);
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (std::find(keys.begin(), keys.end(), key) == keys.end())
                fail(kv.first, "unknown key '" + key + "' in " + what);
        }
    }

    double num(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be a number");
        try {
            const double v = n.as<double>();
            if (!std::isfinite(v)) fail(n, what + " must be finite");
            return v;
        } catch (const YAML::Exception&) {
            fail(n, what + " must be a number");
        }
    }

    double num(const YAML::Node& parent, const char* key, double fallback) const {
        const YAML::Node n = parent[key];
        return n ? num(n, key) : fallback;
    }

    double req_num(const YAML::Node& parent, const char* key, const std::string& what) const {
        const YAML::Node n = parent[key];
        if (!n) fail(parent, what + ": missing '" + key + "'");
        return num(n, key);
    }

    std::int64_t integer(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be an integer");
        try {
            return n.as<std::int64_t>();
        } catch (const YAML::Exception&) {
            fail(n, what + " must be an integer");
        }
    }

    std::string str(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be a string");
        return n.as<std::string>();
    }

    std::string req_str(const YAML::Node& parent, const char* key, const std::string& what) const {
        const YAML::Node n = parent[key];
        if (!n) fail(parent, what + ": missing '" + key + "'");
        return str(n, key);
    }

    bool boolean(const YAML::Node& parent, const char* key, bool fallback) const {
        const YAML::Node n = parent[key];
        if (!n) return fallback;
        try {
            return n.as<bool>();
        } catch (const YAML::Exception&) {
            fail(n, std::string(key) + " must be true or false");
        }
    }

    Vec2 point(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence() || n.size() != 2) fail(n, what + " must be [x, y]");
        return {num(n[0], what + ".x"), num(n[1], what + ".y")};
    }

    geometry::Polygon polygon(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence()) fail(n, what + " must be a list of [x, y] points");
        geometry::Polygon poly;
        for (const auto& p : n) poly.push_back(point(p, what + " vertex"));
        return poly;
    }

    // Runs `f`, turning std::invalid_argument into a positioned error.
    template <typename F>
    void checked(const YAML::Node& at, F&& f) const {
        try {
            f();
        } catch (const std::invalid_argument& e) {
            fail(at, e.what());
        }
    }

    const std::string& file() const { return file_; }

private:
    std::string file_;
};

std::vector<rf::RateStep> rate_table(const Reader& r, const YAML::Node& n, const std::string& what) {
    if (!n.IsSequence()) r.fail(n, what + " must be a list of [threshold_dbm, mbps_per_20mhz]");
    std::vector<rf::RateStep> out;
    for (const auto& row : n) {
        if (!row.IsSequence() || row.size() != 2) r.fail(row, what + " row must be [threshold_dbm, mbps_per_20mhz]");
        out.push_back({r.num(row[0], "threshold"), r.num(row[1], "rate")});
    }
    return out;
}

rf::RadioNode radio_node(const Reader& r, const YAML::Node& n) {
    r.allow_keys(n,
                 {"id", "rat", "x", "y", "tx_power_dbm", "center_freq_mhz", "bandwidth_mhz", "carriers", "channel",
                  "network", "cell_id", "pci", "earfcn"},
                 "node");
    rf::RadioNode node;
    node.id = r.req_str(n, "id", "node");
    const std::string rat = r.req_str(n, "rat", "node '" + node.id + "'");
    r.checked(n["rat"], [&] { node.rat = parse_rat(rat); });
    node.position = {r.req_num(n, "x", "node"), r.req_num(n, "y", "node")};
    node.tx_power_dbm = r.req_num(n, "tx_power_dbm", "node");
    node.center_freq_mhz = r.num(n, "center_freq_mhz", 0.0);
    node.bandwidth_mhz = r.num(n, "bandwidth_mhz", 20.0);
    if (n["carriers"]) node.carriers = static_cast<int>(r.integer(n["carriers"], "carriers"));
    if (n["channel"]) node.channel_label = r.str(n["channel"], "channel");
    if (n["earfcn"] && node.channel_label.empty()) node.channel_label = r.str(n["earfcn"], "earfcn");
    if (n["network"]) node.network = r.str(n["network"], "network");
    if (n["cell_id"]) node.cell_id = r.integer(n["cell_id"], "cell_id");
    if (n["pci"]) node.pci = static_cast<int>(r.integer(n["pci"], "pci"));
    return node;
}

Environment environment(const Reader& r, const YAML::Node& n) {
    r.allow_keys(n, {"path_loss", "buildings", "rate_tables", "nodes", "macro_noise_floor_dbm"}, "environment");
    Environment env;
    if (const auto pl = n["path_loss"]) {
        r.allow_keys(pl, {"reference_loss_db", "exponent", "shadowing_sigma_db", "wall_penetration_db", "seed"},
                     "path_loss");
        env.path_loss.reference_loss_db = r.num(pl, "reference_loss_db", env.path_loss.reference_loss_db);
        env.path_loss.exponent = r.num(pl, "exponent", env.path_loss.exponent);
        env.path_loss.shadowing_sigma_db = r.num(pl, "shadowing_sigma_db", env.path_loss.shadowing_sigma_db);
        env.path_loss.wall_penetration_db = r.num(pl, "wall_penetration_db", env.path_loss.wall_penetration_db);
        if (pl["seed"]) env.path_loss.seed = static_cast<std::uint64_t>(r.integer(pl["seed"], "seed"));
    }
    if (const auto b = n["buildings"]) {
        if (!b.IsSequence()) r.fail(b, "buildings must be a list of polygons");
        for (const auto& poly : b) env.path_loss.buildings.push_back(r.polygon(poly, "building"));
    }
    r.checked(n["path_loss"] ? n["path_loss"] : n, [&] { env.path_loss.validate(); });
    if (const auto rt = n["rate_tables"]) {
        r.allow_keys(rt, {"wifi", "cellular"}, "rate_tables");
        if (rt["wifi"]) env.rates.wifi = rate_table(r, rt["wifi"], "rate_tables.wifi");
        if (rt["cellular"]) env.rates.cellular = rate_table(r, rt["cellular"], "rate_tables.cellular");
        r.checked(rt, [&] { env.rates.validate(); });
    }
    env.macro_noise_floor_dbm = r.num(n, "macro_noise_floor_dbm", env.macro_noise_floor_dbm);
    const auto nodes = n["nodes"];
    if (!nodes || !nodes.IsSequence()) r.fail(n, "environment: 'nodes' must be a list");
    std::set<std::string> ids;
    for (const auto& item : nodes) {
        env.nodes.push_back(radio_node(r, item));
        std::vector<rf::RadioNode> so_far = env.nodes;
        r.checked(item, [&] { rf::validate_nodes(so_far); });
    }
    return env;
}

MobilityTrace trace(const Reader& r, const YAML::Node& n, const std::string& name) {
    r.allow_keys(n, {"speed_mps", "start_s", "waypoints", "pauses_s"}, "trace '" + name + "'");
    MobilityTrace t;
    t.speed_mps = r.num(n, "speed_mps", t.speed_mps);
    t.start_time_s = r.num(n, "start_s", 0.0);
    const auto wps = n["waypoints"];
    if (!wps || !wps.IsSequence()) r.fail(n, "trace '" + name + "': 'waypoints' must be a list");
    for (const auto& p : wps) t.waypoints.push_back(r.point(p, "waypoint"));
    if (const auto ps = n["pauses_s"]) {
        if (!ps.IsSequence()) r.fail(ps, "pauses_s must be a list");
        for (const auto& p : ps) t.pauses_s.push_back(r.num(p, "pause"));
    }
    r.checked(n, [&] { t.validate(); });
    return t;
}

traffic::FlowSpec flow(const Reader& r, const YAML::Node& n, const std::string& id) {
    r.allow_keys(n,
                 {"class", "packet_interval_s", "packet_size_bytes", "request_interval_s", "buffer_depth_s",
                  "media_rate_mbps", "start_s", "duration_s", "criticality", "staleness_s"},
                 "flow '" + id + "'");
    traffic::FlowSpec f;
    f.id = id;
    const auto cls = n["class"];
    if (!cls) r.fail(n, "flow '" + id + "': missing 'class'");
    r.checked(cls, [&] { f.cls = traffic::parse_flow_class(r.str(cls, "class")); });
    f.packet_interval_s = r.num(n, "packet_interval_s", f.packet_interval_s);
    f.packet_size_bytes = r.num(n, "packet_size_bytes", f.packet_size_bytes);
    f.request_interval_s = r.num(n, "request_interval_s", f.request_interval_s);
    f.buffer_depth_s = r.num(n, "buffer_depth_s", f.buffer_depth_s);
    f.media_rate_mbps = r.num(n, "media_rate_mbps", f.media_rate_mbps);
    f.start_s = r.num(n, "start_s", f.start_s);
    f.duration_s = r.num(n, "duration_s", f.duration_s);
    f.staleness_s = r.num(n, "staleness_s", f.staleness_s);
    if (const auto c = n["criticality"])
        r.checked(c, [&] { f.criticality = traffic::parse_criticality(r.str(c, "criticality")); });
    r.checked(n, [&] { f.validate(); });
    return f;
}

tunnel::TunnelConfig tunnel_config(const Reader& r, const YAML::Node& n) {
    r.allow_keys(n,
                 {"mode", "probe_interval_s", "dead_after_missed", "rtt_base_wifi_ms", "rtt_base_cbrs_ms",
                  "loss_weight", "ewma_alpha", "congestion_ratio", "congestion_rounds", "recv_window",
                  "buffer_frames", "inner_address"},
                 "tunnel");
    tunnel::TunnelConfig c;
    if (const auto m = n["mode"]) r.checked(m, [&] { c.mode = tunnel::parse_tunnel_mode(r.str(m, "mode")); });
    c.probe_interval_s = r.num(n, "probe_interval_s", c.probe_interval_s);
    if (n["dead_after_missed"]) c.dead_after_missed = static_cast<int>(r.integer(n["dead_after_missed"], "dead_after_missed"));
    c.rtt_base_wifi_ms = r.num(n, "rtt_base_wifi_ms", c.rtt_base_wifi_ms);
    c.rtt_base_cbrs_ms = r.num(n, "rtt_base_cbrs_ms", c.rtt_base_cbrs_ms);
    c.loss_weight = r.num(n, "loss_weight", c.loss_weight);
    c.ewma_alpha = r.num(n, "ewma_alpha", c.ewma_alpha);
    c.congestion_ratio = r.num(n, "congestion_ratio", c.congestion_ratio);
    if (n["congestion_rounds"]) c.congestion_rounds = static_cast<int>(r.integer(n["congestion_rounds"], "congestion_rounds"));
    if (n["recv_window"]) c.recv_window = static_cast<std::size_t>(r.integer(n["recv_window"], "recv_window"));
    if (n["buffer_frames"]) c.buffer_frames = static_cast<std::size_t>(r.integer(n["buffer_frames"], "buffer_frames"));
    if (n["inner_address"]) c.inner_address = r.str(n["inner_address"], "inner_address");
    r.checked(n, [&] { c.validate(); });
    return c;
}

policy::GeofenceSpec geofence(const Reader& r, const YAML::Node& n) {
    r.allow_keys(n, {"campus_name", "shapes", "footprint_cells"}, "geofence");
    policy::GeofenceSpec g;
    if (n["campus_name"]) g.campus_name = r.str(n["campus_name"], "campus_name");
    if (const auto shapes = n["shapes"]) {
        if (!shapes.IsSequence()) r.fail(shapes, "shapes must be a list");
        for (const auto& s : shapes) {
            r.allow_keys(s, {"polygon", "circle"}, "shape");
            if (s["polygon"]) {
                g.shapes.emplace_back(r.polygon(s["polygon"], "polygon"));
            } else if (const auto c = s["circle"]) {
                r.allow_keys(c, {"center", "radius_m"}, "circle");
                if (!c["center"]) r.fail(c, "circle: missing 'center'");
                g.shapes.emplace_back(policy::Circle{r.point(c["center"], "center"), r.req_num(c, "radius_m", "circle")});
            } else {
                r.fail(s, "shape needs 'polygon' or 'circle'");
            }
            policy::GeofenceSpec one;
            one.shapes.push_back(g.shapes.back());
            r.checked(s, [&] { one.validate(); });
        }
    }
    if (const auto cells = n["footprint_cells"]) {
        if (!cells.IsSequence()) r.fail(cells, "footprint_cells must be a list");
        for (const auto& c : cells) {
            r.allow_keys(c, {"cell_id", "min_sinr_db", "min_cqi"}, "footprint cell");
            policy::FootprintCell fc;
            if (!c["cell_id"]) r.fail(c, "footprint cell: missing 'cell_id'");
            fc.cell_id = r.integer(c["cell_id"], "cell_id");
            if (c["min_sinr_db"]) fc.min_sinr_db = r.num(c["min_sinr_db"], "min_sinr_db");
            if (c["min_cqi"]) fc.min_cqi = static_cast<int>(r.integer(c["min_cqi"], "min_cqi"));
            g.footprint_cells.push_back(fc);
            r.checked(c, [&] { g.validate(); });
        }
    }
    return g;
}

PolicyConfig policy_config(const Reader& r, const YAML::Node& n, const fs::path& base,
                           const tunnel::TunnelConfig& tc) {
    r.allow_keys(n, {"profile", "dwell_s", "margin_db", "congestion_dwell_s", "geofence"}, "policy");
    PolicyConfig pc;
    const auto prof = n["profile"];
    if (!prof) r.fail(n, "policy: missing 'profile'");
    const fs::path path = base / r.str(prof, "profile");
    try {
        pc.profile = load_policy_profile(path);
    } catch (const policy::ProfileError& e) {
        throw ConfigError(path.string(), e.line(), e.message());
    } catch (const std::runtime_error& e) {
        r.fail(prof, e.what());
    }
    pc.hysteresis.dwell_s = r.num(n, "dwell_s", pc.hysteresis.dwell_s);
    pc.hysteresis.margin_db = r.num(n, "margin_db", pc.hysteresis.margin_db);
    pc.hysteresis.congestion_dwell_s = r.num(n, "congestion_dwell_s", tc.congestion_dwell_s());
    pc.hysteresis.congestion_ratio = tc.congestion_ratio;
    if (pc.hysteresis.dwell_s < 0 || pc.hysteresis.margin_db < 0 || pc.hysteresis.congestion_dwell_s < 0)
        r.fail(n, "policy: dwell and margin must be >= 0");
    if (const auto g = n["geofence"]) pc.geofence = geofence(r, g);
    return pc;
}

std::string fmt(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::Traditional ? "TRADITIONAL" : "TUNNEL"; }

Mode parse_mode(std::string_view text) {
    if (text == "TRADITIONAL") return Mode::Traditional;
    if (text == "TUNNEL") return Mode::Tunnel;
    throw std::invalid_argument("unknown mode '" + std::string(text) + "'");
}

ConfigError::ConfigError(std::string file, int line, const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + message),
      file_(std::move(file)),
      line_(line),
      message_(message) {}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

policy::RadioPreferenceProfile load_policy_profile(const fs::path& path) {
    return policy::parse_profile(read_file(path));
}

std::map<std::string, device::DeviceProfile> parse_profile_library(const std::string& text,
                                                                   const std::string& file_name) {
    Reader r(file_name);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(file_name, e.mark.line + 1, e.msg);
    }
    std::map<std::string, device::DeviceProfile> out;
    if (!root || root.IsNull()) return out;
    r.allow_keys(root, {"profiles"}, "profile library");
    const auto list = root["profiles"];
    if (!list || list.IsNull()) return out;
    if (!list.IsSequence()) r.fail(list, "profiles must be a list");
    for (const auto& n : list) {
        r.allow_keys(n,
                     {"model_name", "wifi_disconnect_rssi", "wifi_disconnect_hold_s", "wifi_attach_rssi",
                      "cell_scan_interval_s", "wifi_scan_interval_s", "cell_attach_delay_s", "wifi_attach_delay_s",
                      "cell_min_rsrp", "prefers_wifi", "supports_tunnel_client"},
                     "profile");
        device::DeviceProfile p;
        p.model_name = r.req_str(n, "model_name", "profile");
        p.wifi_disconnect_rssi = r.req_num(n, "wifi_disconnect_rssi", p.model_name);
        p.wifi_disconnect_hold_s = r.req_num(n, "wifi_disconnect_hold_s", p.model_name);
        p.wifi_attach_rssi = r.req_num(n, "wifi_attach_rssi", p.model_name);
        p.cell_scan_interval_s = r.req_num(n, "cell_scan_interval_s", p.model_name);
        p.wifi_scan_interval_s = r.req_num(n, "wifi_scan_interval_s", p.model_name);
        p.cell_attach_delay_s = r.req_num(n, "cell_attach_delay_s", p.model_name);
        p.wifi_attach_delay_s = r.req_num(n, "wifi_attach_delay_s", p.model_name);
        p.cell_min_rsrp = r.num(n, "cell_min_rsrp", p.cell_min_rsrp);
        p.prefers_wifi = r.boolean(n, "prefers_wifi", p.prefers_wifi);
        p.supports_tunnel_client = r.boolean(n, "supports_tunnel_client", p.supports_tunnel_client);
        r.checked(n, [&] { p.validate(); });
        if (!out.emplace(p.model_name, p).second) r.fail(n, "duplicate profile '" + p.model_name + "'");
    }
    return out;
}

std::map<std::string, device::DeviceProfile> load_profile_library(const fs::path& path) {
    return parse_profile_library(read_file(path), path.string());
}

std::string emit_profile_library(const std::vector<device::DeviceProfile>& profiles) {
    std::string out = "profiles:\n";
    for (const auto& p : profiles) {
        out += "  - model_name: \"" + p.model_name + "\"\n";
        out += "    wifi_disconnect_rssi: " + fmt(p.wifi_disconnect_rssi) + "\n";
        out += "    wifi_disconnect_hold_s: " + fmt(p.wifi_disconnect_hold_s) + "\n";
        out += "    wifi_attach_rssi: " + fmt(p.wifi_attach_rssi) + "\n";
        out += "    cell_scan_interval_s: " + fmt(p.cell_scan_interval_s) + "\n";
        out += "    wifi_scan_interval_s: " + fmt(p.wifi_scan_interval_s) + "\n";
        out += "    cell_attach_delay_s: " + fmt(p.cell_attach_delay_s) + "\n";
        out += "    wifi_attach_delay_s: " + fmt(p.wifi_attach_delay_s) + "\n";
        out += "    cell_min_rsrp: " + fmt(p.cell_min_rsrp) + "\n";
        out += std::string("    prefers_wifi: ") + (p.prefers_wifi ? "true" : "false") + "\n";
        out += std::string("    supports_tunnel_client: ") + (p.supports_tunnel_client ? "true" : "false") + "\n";
    }
    return out;
}

Scenario parse_scenario(const std::string& text, const std::string& file_name, const fs::path& base_dir) {
    Reader r(file_name);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(file_name, e.mark.line + 1, e.msg);
    }
    if (!root || !root.IsMap()) throw ConfigError(file_name, 1, "scenario must be a mapping");
    r.allow_keys(root,
                 {"seed", "seeds", "tick_s", "duration_s", "mbb_overlap_s", "reference_edge", "profiles", "environment",
                  "traces", "flows", "tunnel", "policy", "devices"},
                 "scenario");
    Scenario sc;
    if (root["seed"]) sc.seed = static_cast<std::uint64_t>(r.integer(root["seed"], "seed"));
    if (root["seeds"]) {
        sc.seed_count = static_cast<int>(r.integer(root["seeds"], "seeds"));
        if (sc.seed_count < 1) r.fail(root["seeds"], "seeds must be >= 1");
    }
    sc.tick_s = r.num(root, "tick_s", sc.tick_s);
    if (!(sc.tick_s > 0.0)) r.fail(root["tick_s"], "tick_s must be > 0");
    sc.mbb_overlap_s = r.num(root, "mbb_overlap_s", sc.mbb_overlap_s);
    if (sc.mbb_overlap_s < 0.0) r.fail(root["mbb_overlap_s"], "mbb_overlap_s must be >= 0");
    if (const auto e = root["reference_edge"]) sc.reference_edge = r.point(e, "reference_edge");

    if (const auto p = root["profiles"]) {
        const fs::path path = base_dir / r.str(p, "profiles");
        if (!fs::exists(path)) r.fail(p, "profile library '" + path.string() + "' not found");
        sc.profiles = load_profile_library(path);
    }
    const auto env = root["environment"];
    if (!env) r.fail(root, "scenario: missing 'environment'");
    sc.env = environment(r, env);

    std::map<std::string, std::pair<MobilityTrace, YAML::Node>> traces;
    if (const auto t = root["traces"]) {
        r.require_map(t, "traces");
        for (const auto& kv : t) {
            const auto name = kv.first.as<std::string>();
            traces.emplace(name, std::make_pair(trace(r, kv.second, name), kv.second));
        }
    }
    std::map<std::string, traffic::FlowSpec> flows;
    if (const auto f = root["flows"]) {
        r.require_map(f, "flows");
        for (const auto& kv : f) {
            const auto id = kv.first.as<std::string>();
            flows.emplace(id, flow(r, kv.second, id));
        }
    }
    if (const auto t = root["tunnel"]) sc.tunnel = tunnel_config(r, t);
    if (const auto p = root["policy"]) sc.policy = policy_config(r, p, base_dir, sc.tunnel);

    double longest = 0.0;
    if (const auto devs = root["devices"]) {
        if (!devs.IsSequence()) r.fail(devs, "devices must be a list");
        std::set<std::string> ids;
        for (const auto& n : devs) {
            r.allow_keys(n, {"id", "profile", "trace", "flows", "mode"}, "device");
            DeviceConfig d;
            d.id = r.req_str(n, "id", "device");
            if (!ids.insert(d.id).second) r.fail(n, "duplicate device id '" + d.id + "'");
            d.profile_name = r.req_str(n, "profile", "device '" + d.id + "'");
            if (!sc.profiles.count(d.profile_name))
                r.fail(n["profile"], "device '" + d.id + "': unknown profile '" + d.profile_name + "'");
            d.trace_name = r.req_str(n, "trace", "device '" + d.id + "'");
            const auto tr = traces.find(d.trace_name);
            if (tr == traces.end()) r.fail(n["trace"], "device '" + d.id + "': unknown trace '" + d.trace_name + "'");
            d.trace = tr->second.first;
            if (const auto fl = n["flows"]) {
                if (!fl.IsSequence()) r.fail(fl, "device flows must be a list of flow names");
                for (const auto& f : fl) {
                    const auto name = r.str(f, "flow");
                    const auto it = flows.find(name);
                    if (it == flows.end()) r.fail(f, "device '" + d.id + "': unknown flow '" + name + "'");
                    d.flows.push_back(it->second);
                }
            }
            if (const auto m = n["mode"]) r.checked(m, [&] { d.mode = parse_mode(r.str(m, "mode")); });
            if (d.mode == Mode::Tunnel) {
                if (!sc.policy) r.fail(n, "device '" + d.id + "': TUNNEL mode needs a 'policy' section");
                if (!sc.profiles.at(d.profile_name).supports_tunnel_client)
                    r.fail(n, "device '" + d.id + "': profile '" + d.profile_name + "' has no tunnel client");
            }
            longest = std::max(longest, d.trace.end_time());
            sc.devices.push_back(std::move(d));
        }
    }
    if (const auto dur = root["duration_s"]) {
        sc.duration_s = r.num(dur, "duration_s");
        if (sc.duration_s + 1e-9 < longest)
            r.fail(dur, "duration_s " + fmt(sc.duration_s) + " is shorter than the longest trace (" + fmt(longest) + " s)");
    } else {
        sc.duration_s = longest;
    }
    return sc;
}

Scenario load_scenario(const fs::path& path) {
    const std::string text = read_file(path);
    return parse_scenario(text, path.string(), path.parent_path());
}

void Scenario::validate() const {
    if (!(tick_s > 0.0)) throw ConfigError("<scenario>", 0, "tick_s must be > 0");
    double longest = 0.0;
    for (const auto& d : devices) {
        if (!profiles.count(d.profile_name))
            throw ConfigError("<scenario>", 0, "device '" + d.id + "': unknown profile '" + d.profile_name + "'");
        longest = std::max(longest, d.trace.end_time());
        for (const auto& f : d.flows) f.validate();
        if (d.mode == Mode::Tunnel && !policy)
            throw ConfigError("<scenario>", 0, "device '" + d.id + "': TUNNEL mode needs a policy");
    }
    if (duration_s + 1e-9 < longest) throw ConfigError("<scenario>", 0, "duration shorter than longest trace");
    rf::validate_nodes(env.nodes);
    env.path_loss.validate();
    env.rates.validate();
    tunnel.validate();
}

std::size_t Scenario::tick_count() const {
    return static_cast<std::size_t>(std::floor(duration_s / tick_s + 1e-9)) + 1;
}

const device::DeviceProfile& Scenario::profile_of(const DeviceConfig& d) const { return profiles.at(d.profile_name); }

}  // namespace roamsim
