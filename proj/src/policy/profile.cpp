#include "roamsim/policy/profile.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <set>

namespace roamsim::policy {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

bool parse_number(std::string_view text, double& out) {
    text = trim(text);
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void check_name(std::string_view name, int line) {
    if (name.empty()) throw ProfileError(line, "empty network name");
    if (name.find_first_of(",;:=#[]") != std::string_view::npos)
        throw ProfileError(line, "network name '" + std::string(name) + "' contains a reserved character");
}

void check_range(Rat rat, double v, int line) {
    if (rat == Rat::Cbrs) {
        if (v < kMinRsrp || v > kMaxRsrp) throw ProfileError(line, "RSRP out of range [-156,-31]");
    } else if (v < kMinRssi || v > kMaxRssi) {
        throw ProfileError(line, "RSSI out of range [-90,-30]");
    }
}

void check_scan(double v, int line) {
    if (!(v > 0.0)) throw ProfileError(line, "scan_interval_s must be > 0");
}

std::string_view section_name(Rat r) { return r == Rat::Wifi ? "WLAN" : "WWAN"; }

Rat section_rat(std::string_view name, int line) {
    if (name == "WWAN") return Rat::Cbrs;
    if (name == "WLAN") return Rat::Wifi;
    throw ProfileError(line, "unknown section [" + std::string(name) + "]");
}

}  // namespace

RadioPreferenceProfile parse_profile(std::string_view text) {
    RadioPreferenceProfile p;
    std::optional<Rat> section;
    std::set<std::string> names[2];
    int line_no = 0;
    for (std::string_view raw : split(text, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ProfileError(line_no, "malformed section header");
            const Rat r = section_rat(trim(line.substr(1, line.size() - 2)), line_no);
            if (std::find(p.rat_order.begin(), p.rat_order.end(), r) != p.rat_order.end())
                throw ProfileError(line_no, "duplicate section [" + std::string(section_name(r)) + "]");
            p.rat_order.push_back(r);
            section = r;
            continue;
        }
        if (!section) throw ProfileError(line_no, "entry outside of a section");
        if (const auto eq = line.find('='); eq != std::string_view::npos) {
            const std::string_view key = trim(line.substr(0, eq));
            if (key != "scan_interval_s") throw ProfileError(line_no, "unknown key '" + std::string(key) + "'");
            if (*section != Rat::Wifi) throw ProfileError(line_no, "scan_interval_s is only valid in [WLAN]");
            double v = 0.0;
            if (!parse_number(line.substr(eq + 1), v)) throw ProfileError(line_no, "scan_interval_s is not a number");
            check_scan(v, line_no);
            p.wlan_scan_interval_s = v;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 2) throw ProfileError(line_no, "expected 'name,threshold_dbm'");
        const std::string_view name = trim(fields[0]);
        check_name(name, line_no);
        double v = 0.0;
        if (!parse_number(fields[1], v)) throw ProfileError(line_no, "threshold is not a number");
        check_range(*section, v, line_no);
        if (!names[*section == Rat::Wifi].insert(std::string(name)).second)
            throw ProfileError(line_no, "duplicate name '" + std::string(name) + "'");
        (*section == Rat::Wifi ? p.wlan : p.wwan).push_back({std::string(name), v});
    }
    return p;
}

void validate_profile(const RadioPreferenceProfile& p) {
    for (Rat r : {Rat::Cbrs, Rat::Wifi}) {
        std::set<std::string> seen;
        for (const auto& e : p.entries(r)) {
            check_name(e.name, 0);
            check_range(r, e.threshold_dbm, 0);
            if (!seen.insert(e.name).second) throw ProfileError(0, "duplicate name '" + e.name + "'");
        }
        const bool listed = std::find(p.rat_order.begin(), p.rat_order.end(), r) != p.rat_order.end();
        if (!listed && !p.entries(r).empty())
            throw ProfileError(0, "entries for [" + std::string(section_name(r)) + "] missing from rat_order");
    }
    std::set<Rat> order(p.rat_order.begin(), p.rat_order.end());
    if (order.size() != p.rat_order.size()) throw ProfileError(0, "rat_order repeats a RAT");
    for (Rat r : p.rat_order)
        if (r != Rat::Wifi && r != Rat::Cbrs) throw ProfileError(0, "rat_order may only contain WIFI and CBRS");
    check_scan(p.wlan_scan_interval_s, 0);
}

std::string emit_profile_text(const RadioPreferenceProfile& p) {
    validate_profile(p);
    std::string out;
    for (Rat r : p.rat_order) {
        out += "[" + std::string(section_name(r)) + "]\n";
        if (r == Rat::Wifi) out += "scan_interval_s=" + format_number(p.wlan_scan_interval_s) + "\n";
        for (const auto& e : p.entries(r)) out += e.name + "," + format_number(e.threshold_dbm) + "\n";
    }
    return out;
}

std::string emit_profile_payload(const RadioPreferenceProfile& p) {
    validate_profile(p);
    std::string out = "RPP/1;ORDER=";
    for (std::size_t i = 0; i < p.rat_order.size(); ++i) {
        if (i) out += ',';
        out += section_name(p.rat_order[i]);
    }
    out += ";SCAN=" + format_number(p.wlan_scan_interval_s);
    for (Rat r : p.rat_order) {
        out += ";" + std::string(section_name(r)) + "=";
        const auto& entries = p.entries(r);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (i) out += ',';
            out += entries[i].name + ":" + format_number(entries[i].threshold_dbm);
        }
    }
    return out;
}

RadioPreferenceProfile parse_profile_payload(std::string_view payload) {
    const auto parts = split(payload, ';');
    if (parts.size() < 3 || parts[0] != "RPP/1") throw ProfileError(0, "payload: bad header");
    RadioPreferenceProfile p;
    auto field = [&](std::string_view part, std::string_view key) -> std::string_view {
        if (part.substr(0, key.size() + 1) != std::string(key) + "=")
            throw ProfileError(0, "payload: expected " + std::string(key) + "=");
        return part.substr(key.size() + 1);
    };
    const std::string_view order = field(parts[1], "ORDER");
    if (!order.empty())
        for (std::string_view s : split(order, ',')) p.rat_order.push_back(section_rat(s, 0));
    if (!parse_number(field(parts[2], "SCAN"), p.wlan_scan_interval_s)) throw ProfileError(0, "payload: bad SCAN");
    if (parts.size() != 3 + p.rat_order.size()) throw ProfileError(0, "payload: section count mismatch");
    for (std::size_t i = 0; i < p.rat_order.size(); ++i) {
        const Rat r = p.rat_order[i];
        const std::string_view body = field(parts[3 + i], section_name(r));
        if (body.empty()) continue;
        for (std::string_view item : split(body, ',')) {
            const auto colon = item.rfind(':');
            if (colon == std::string_view::npos) throw ProfileError(0, "payload: entry without threshold");
            double v = 0.0;
            if (!parse_number(item.substr(colon + 1), v)) throw ProfileError(0, "payload: bad threshold");
            (r == Rat::Wifi ? p.wlan : p.wwan).push_back({std::string(item.substr(0, colon)), v});
        }
    }
    validate_profile(p);
    return p;
}

}  // namespace roamsim::policy
