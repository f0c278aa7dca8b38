// Acceptance run over the default scenario: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <tuple>
#include <string>
#include <vector>

#include "roamsim/calibrate.hpp"
#include "roamsim/geometry.hpp"
#include "roamsim/kernels.hpp"
#include "roamsim/policy/engine.hpp"
#include "roamsim/report.hpp"
#include "roamsim/sim.hpp"
#include "roamsim/tunnel/frame.hpp"

using namespace roamsim;

namespace {

// Pinned tolerances.
constexpr double kCellTolS = 0.5;
constexpr double kSeamlessS = 0.5;
constexpr double kRuntimeBudgetS = 60.0;
constexpr double kZoomLowS = 1.0;
constexpr double kZoomHighS = 16.0;
constexpr double kZoomTolS = 0.5;
constexpr double kTunnelMaxS = 2.0;
constexpr double kTunnelBestS = 1.0;
// One LIVE packet interval: gaps are quantized to packet arrivals.
constexpr double kPairSlackS = 0.02;
constexpr double kRssiLo = -90.0, kRssiHi = -88.0;
constexpr double kRsrpLo = -110.0, kRsrpHi = -98.0;
constexpr double kWifiEdgeMbps = 0.5, kCbrsEdgeMbps = 8.0, kRateRelTol = 0.05;
constexpr int kCodecFrames = 100000;
constexpr int kPolygons = 50, kPointsPerPolygon = 1000;

const std::string kShopping = "shopping";
const std::string kZoom = "zoom";
const std::string kYoutube = "youtube";

int failures = 0;

void verdict(int n, bool ok, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += !ok;
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

struct ModeRuns {
    std::vector<std::vector<sim::DeviceRun>> per_seed;
    std::vector<std::string> first_logs;  // jsonl of the first two seeds
    std::size_t reflection = 0;
    std::size_t inner_changes = 0;
    double seconds = 0.0;

    std::vector<sim::DeviceRun> all() const {
        std::vector<sim::DeviceRun> out;
        for (const auto& s : per_seed) out.insert(out.end(), s.begin(), s.end());
        return out;
    }
};

ModeRuns run_mode(const Scenario& sc, const std::vector<std::uint64_t>& seeds, Mode mode) {
    ModeRuns m;
    sim::RunOptions o;
    o.mode_override = mode;
    const auto t0 = std::chrono::steady_clock::now();
    const auto tracks = sim::precompute_tracks(sc);
    for (auto seed : seeds) {
        auto r = sim::run(sc, seed, o, tracks);
        m.reflection += sim::reflection_violations(r.log);
        m.inner_changes += sim::inner_address_changes(r.log);
        for (const auto& d : r.devices) m.reflection += d.tunnel.reflection_violations;
        if (m.first_logs.size() < 2) m.first_logs.push_back(r.log.to_jsonl());
        m.per_seed.push_back(std::move(r.devices));
    }
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return m;
}

const sim::DeviceRun* device_in(const std::vector<sim::DeviceRun>& runs, const std::string& id) {
    for (const auto& d : runs)
        if (d.device_id == id) return &d;
    return nullptr;
}

// Worst gap of one run in one direction; 0 when no measurable transition.
double seed_gap(const sim::DeviceRun& run, const std::string& flow, Rat from) {
    const auto rep = report::build({run});
    const auto* c = rep.find(run.device_id, run.mode, flow, from);
    return c && c->seeds() ? c->max_gap_s.front() : 0.0;
}

bool matches(const calibrate::CellTarget& t, const report::Cell* c, std::string& why) {
    if (!c || !c->seeds()) {
        why = "no transition";
        return false;
    }
    const double v = c->mean_gap_s;
    if (t.seamless) {
        why = fmt("%.2f", v) + "<0.5";
        return v < kSeamlessS;
    }
    why = fmt("%.2f", v) + " vs " + fmt("%.1f", t.seconds);
    return v >= kSeamlessS && std::abs(v - t.seconds) <= kCellTolS;
}

// Independent big-endian assembler for the wire layout.
std::vector<std::uint8_t> assemble(const tunnel::TunnelFrame& f) {
    std::vector<std::uint8_t> b{0xC3, 0x1A, 0x01};
    std::uint8_t flags = 0;
    if (f.direction == tunnel::FrameDirection::Dl) flags |= 1;
    if (f.rat == Rat::Cbrs) flags |= 1 << 1;
    if (f.duplicate) flags |= 1 << 3;
    if (f.probe) flags |= 1 << 4;
    b.push_back(flags);
    for (int i = 7; i >= 0; --i) b.push_back(static_cast<std::uint8_t>(f.session_id >> (8 * i)));
    for (int i = 3; i >= 0; --i) b.push_back(static_cast<std::uint8_t>(f.seq >> (8 * i)));
    for (int i = 7; i >= 0; --i) b.push_back(static_cast<std::uint8_t>(f.timestamp_ms >> (8 * i)));
    const auto len = static_cast<std::uint16_t>(f.payload.size());
    b.push_back(static_cast<std::uint8_t>(len >> 8));
    b.push_back(static_cast<std::uint8_t>(len));
    b.insert(b.end(), f.payload.begin(), f.payload.end());
    return b;
}

geometry::Polygon random_polygon(std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(0, 1);
    const int n = 4 + static_cast<int>(g() % 30);
    const Vec2 c{100 * u(g), 100 * u(g)};
    geometry::Polygon p;
    for (int i = 0; i < n; ++i) {
        const double a = 2 * std::numbers::pi * (i + 0.8 * u(g)) / n;
        const double r = 5 + 40 * u(g);
        p.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
    }
    return p;
}

bool rejects(const std::string& text) {
    try {
        policy::parse_profile(text);
    } catch (const policy::ProfileError&) {
        return true;
    }
    return false;
}

bool accepts(const std::string& text) { return !rejects(text); }

}  // namespace

int main(int argc, char** argv) {
    const std::string data = argc > 1 ? argv[1] : ROAMSIM_DATA_DIR;
    const Scenario sc = load_scenario(data + "/default_scenario.yaml");
    const auto targets = calibrate::load_targets(data + "/targets.yaml");
    const auto seeds = sim::default_seeds(sc);

    std::map<std::string, const calibrate::Target*> target_of;
    for (const auto& t : targets.targets) target_of[t.model_name] = &t;

    const ModeRuns trad = run_mode(sc, seeds, Mode::Traditional);
    const auto trad_rep = report::build(trad.all());

    // 1
    {
        int ok = 0, total = 0;
        std::string bad;
        for (const auto& d : sc.devices) {
            const auto& prof = sc.profile_of(d);
            const auto it = target_of.find(prof.model_name);
            if (it == target_of.end()) continue;
            for (const auto& dir : report::kDirections) {
                const auto& t = dir[0] == Rat::Wifi ? it->second->wifi_to_cell : it->second->cell_to_wifi;
                std::string why;
                ++total;
                if (matches(t, trad_rep.find(d.id, Mode::Traditional, kShopping, dir[0]), why))
                    ++ok;
                else
                    bad += " " + d.id + "/" + std::string(to_string(dir[0])) + "(" + why + ")";
            }
        }
        const bool pass = total == 14 && ok == total && trad.seconds < kRuntimeBudgetS;
        verdict(1, pass,
                std::to_string(ok) + "/" + std::to_string(total) + " shopping cells, " +
                    std::to_string(seeds.size()) + " seeds in " + fmt("%.1f", trad.seconds) + " s" + bad);
    }

    // 2
    {
        std::vector<std::pair<double, std::string>> zoom;
        for (const auto& d : sc.devices) {
            const auto* c = trad_rep.find(d.id, Mode::Traditional, kZoom, Rat::Wifi);
            zoom.emplace_back(c && c->seeds() ? c->mean_gap_s : 0.0, sc.profile_of(d).model_name);
        }
        std::sort(zoom.begin(), zoom.end());
        std::string detail;
        for (const auto& [v, name] : zoom) detail += " " + name + "=" + fmt("%.1f", v);
        bool pass = zoom.size() == 7;
        if (pass) {
            pass = std::abs(zoom.front().first - kZoomLowS) <= kZoomTolS &&
                   std::abs(zoom.back().first - kZoomHighS) <= kZoomTolS && zoom.back().second == "Model 3";
            const std::set<std::string> lowest{zoom[0].second, zoom[1].second};
            pass = pass && lowest == std::set<std::string>{"Model 6", "Model 7"};
        }
        verdict(2, pass, "zoom Wi-Fi->CBRS span" + detail);
    }

    // 3: profiles that keep Wi-Fi preferred are the sticky ones
    {
        std::size_t checked = 0, violations = 0;
        std::string bad;
        for (const auto& runs : trad.per_seed) {
            for (const auto& d : sc.devices) {
                if (!sc.profile_of(d).prefers_wifi) continue;
                const auto* r = device_in(runs, d.id);
                // LIVE flow only; request-paced gaps are quantized to the request interval.
                for (const auto& flow : {kZoom}) {
                    const double w2c = seed_gap(*r, flow, Rat::Wifi);
                    const double c2w = seed_gap(*r, flow, Rat::Cbrs);
                    ++checked;
                    if (w2c < c2w) {
                        ++violations;
                        if (bad.size() < 200)
                            bad += " " + d.id + "/" + flow + "/seed" + std::to_string(r->seed) + "(" +
                                   fmt("%.2f", w2c) + "<" + fmt("%.2f", c2w) + ")";
                    }
                }
            }
        }
        verdict(3, violations == 0 && checked > 0,
                std::to_string(checked - violations) + "/" + std::to_string(checked) +
                    " zoom seed runs with Wi-Fi->CBRS >= CBRS->Wi-Fi" + bad);
    }

    Scenario tsc = sc;
    tsc.devices.clear();
    for (const auto& d : sc.devices)
        if (sc.profile_of(d).supports_tunnel_client) tsc.devices.push_back(d);
    const ModeRuns tun = run_mode(tsc, seeds, Mode::Tunnel);
    const auto tun_rep = report::build(tun.all());

    // 4
    {
        double worst = 0.0, best = 1e9;
        std::string detail;
        bool pass = !tsc.devices.empty();
        for (const auto& d : tsc.devices) {
            const auto* c = tun_rep.find(d.id, Mode::Tunnel, kZoom, Rat::Wifi);
            const double v = c && c->seeds() ? c->mean_gap_s : 0.0;
            worst = std::max(worst, v);
            best = std::min(best, v);
            detail += " " + sc.profile_of(d).model_name + "=" + fmt("%.2f", v);
        }
        std::size_t pairs = 0, worse = 0;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            for (const auto& d : tsc.devices) {
                for (const auto& flow : {kShopping, kZoom}) {
                    const double t = seed_gap(*device_in(tun.per_seed[s], d.id), flow, Rat::Wifi);
                    const double r = seed_gap(*device_in(trad.per_seed[s], d.id), flow, Rat::Wifi);
                    ++pairs;
                    worse += t > r + kPairSlackS;
                }
            }
        }
        pass = pass && worst <= kTunnelMaxS && best < kTunnelBestS && worse == 0;
        verdict(4, pass,
                "tunnel zoom Wi-Fi->CBRS max " + fmt("%.2f", worst) + " best " + fmt("%.2f", best) + ", " +
                    std::to_string(pairs - worse) + "/" + std::to_string(pairs) + " seed pairs tunnel<=traditional;" +
                    detail);
    }

    // 5
    {
        std::size_t runs = 0, events = 0;
        for (const auto* rep : {&trad_rep, &tun_rep}) {
            for (const auto& r : rep->rebuffers) {
                if (r.flow != kYoutube) continue;
                runs += r.runs;
                events += r.events;
            }
        }
        verdict(5, runs > 0 && events == 0,
                std::to_string(events) + " rebuffer events over " + std::to_string(runs) + " buffered runs");
    }

    // 6
    {
        bool pass = sc.reference_edge.has_value();
        std::string detail = "no reference edge";
        if (pass) {
            const auto e = kernels::radio_at(sc.env, *sc.reference_edge);
            // The edge must lie on the walk.
            const auto& w = sc.devices.at(0).trace.waypoints;
            double off = 1e9;
            for (std::size_t i = 0; i + 1 < w.size(); ++i) {
                const Vec2 a = w[i], b = w[i + 1], p = *sc.reference_edge;
                const Vec2 ab = b - a;
                const double len2 = ab.x * ab.x + ab.y * ab.y;
                const double u = std::clamp(((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2, 0.0, 1.0);
                off = std::min(off, roamsim::distance(p, a + ab * u));
            }
            auto near = [](double v, double want) { return std::abs(v - want) <= kRateRelTol * want; };
            pass = off < 1e-6 && e.wifi_dbm >= kRssiLo && e.wifi_dbm <= kRssiHi && e.cbrs_dbm >= kRsrpLo &&
                   e.cbrs_dbm <= kRsrpHi && near(e.wifi_rate_mbps, kWifiEdgeMbps) &&
                   near(e.cbrs_rate_mbps, kCbrsEdgeMbps);
            detail = "RSSI " + fmt("%.2f", e.wifi_dbm) + " dBm, RSRP " + fmt("%.2f", e.cbrs_dbm) + " dBm, " +
                     fmt("%.2f", e.wifi_rate_mbps) + " vs " + fmt("%.2f", e.cbrs_rate_mbps) + " Mbps";
        }
        verdict(6, pass, detail);
    }

    // 7
    {
        std::mt19937_64 g(77);
        std::size_t mismatches = 0;
        for (int i = 0; i < kCodecFrames; ++i) {
            tunnel::TunnelFrame f;
            f.direction = g() & 1 ? tunnel::FrameDirection::Dl : tunnel::FrameDirection::Ul;
            f.rat = g() & 1 ? Rat::Cbrs : Rat::Wifi;
            f.probe = (g() % 5) == 0;
            f.duplicate = !f.probe && (g() & 1);
            f.session_id = g();
            f.seq = static_cast<std::uint32_t>(g());
            f.timestamp_ms = g();
            if (!f.probe) {
                f.payload.resize(g() % 300);
                for (auto& x : f.payload) x = static_cast<std::uint8_t>(g());
            }
            const auto wire = tunnel::encode_frame(f);
            mismatches += wire != assemble(f) || tunnel::decode_frame(wire) != f;
        }
        tunnel::TunnelFrame z;
        z.session_id = 1;
        const std::vector<std::uint8_t> golden{0xC3, 0x1A, 0x01, 0x00, 0, 0, 0, 0, 0, 0, 0, 1, 0,
                                               0,    0,    0,    0,    0, 0, 0, 0, 0, 0, 0, 0, 0};
        const bool golden_ok = tunnel::encode_frame(z) == golden && tunnel::decode_frame(golden) == z;
        const std::size_t refl = trad.reflection + tun.reflection;
        const std::size_t inner = trad.inner_changes + tun.inner_changes;
        verdict(7, mismatches == 0 && golden_ok && refl == 0 && inner == 0,
                std::to_string(mismatches) + " codec mismatches in " + std::to_string(kCodecFrames) + ", golden " +
                    (golden_ok ? "exact" : "WRONG") + ", " + std::to_string(refl) + " reflection violations, " +
                    std::to_string(inner) + " inner address changes");
    }

    // 8
    {
        const auto wwan = [](const char* v) { return std::string("[WWAN]\nCelonaPrivate,") + v + "\n"; };
        const auto wlan = [](const char* v) { return std::string("[WLAN]\nCelona,") + v + "\n"; };
        const bool bounds = accepts(wwan("-156")) && accepts(wwan("-31")) && accepts(wlan("-90")) &&
                            accepts(wlan("-30")) && rejects(wwan("-157")) && rejects(wwan("-30")) &&
                            rejects(wlan("-91")) && rejects(wlan("-29"));

        std::mt19937_64 g(3);
        std::uniform_real_distribution<double> u(-50, 150);
        std::size_t disagree = 0;
        for (int k = 0; k < kPolygons; ++k) {
            const auto poly = random_polygon(g);
            for (int i = 0; i < kPointsPerPolygon; ++i) {
                const Vec2 p{u(g), u(g)};
                disagree += geometry::contains_ray_cast(poly, p) != geometry::contains_winding(poly, p);
            }
        }

        const auto prof = policy::parse_profile("[WLAN]\nCelona,-90\n[WWAN]\nCelonaPrivate,-110\n");
        policy::PolicyState st;
        int flips = 0;
        Rat last = Rat::None;
        for (int i = 0; i <= 6000; ++i) {
            const double t = i * 0.01;
            const std::vector<policy::VisibleNetwork> sig{
                {Rat::Wifi, "Celona", -90 + std::sin(t * 2 * std::numbers::pi / 1.2)},
                {Rat::Cbrs, "CelonaPrivate", -100}};
            policy::PolicyInputs in;
            in.signals = sig;
            const auto ev = policy::evaluate(prof, in, st, t);
            st = ev.state;
            if (i > 0 && ev.decision.preferred_rat != last) ++flips;
            last = ev.decision.preferred_rat;
        }
        verdict(8, bounds && disagree == 0 && flips == 0,
                std::string("boundaries ") + (bounds ? "exact" : "WRONG") + ", " + std::to_string(disagree) +
                    " ray/winding disagreements in " + std::to_string(kPolygons * kPointsPerPolygon) + ", " +
                    std::to_string(flips) + " hysteresis flips");
    }

    // 9
    {
        std::size_t same = 0, total = 0;
        sim::RunOptions o;
        for (const auto& [scn, mode, logs] :
             {std::tuple<const Scenario*, Mode, const std::vector<std::string>*>{&sc, Mode::Traditional, &trad.first_logs},
              std::tuple<const Scenario*, Mode, const std::vector<std::string>*>{&tsc, Mode::Tunnel, &tun.first_logs}}) {
            o.mode_override = mode;
            for (std::size_t i = 0; i < logs->size(); ++i) {
                ++total;
                same += sim::run(*scn, seeds[i], o).log.to_jsonl() == (*logs)[i];
            }
        }
        verdict(9, total > 0 && same == total,
                std::to_string(same) + "/" + std::to_string(total) + " repeated runs byte-identical");
    }

    return failures == 0 ? 0 : 3;
}
