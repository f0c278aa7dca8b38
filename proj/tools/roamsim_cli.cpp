#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "roamsim/calibrate.hpp"
#include "roamsim/kernels.hpp"
#include "roamsim/policy/profile.hpp"
#include "roamsim/report.hpp"
#include "roamsim/scenario.hpp"
#include "roamsim/sim.hpp"

namespace fs = std::filesystem;
using namespace roamsim;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitFailure = 3;
constexpr int kExitUsage = 64;

struct Common {
    std::string scenario = "data/default_scenario.yaml";
    std::string out_dir;
    std::string format = "table";
    std::optional<std::uint64_t> seed;
    std::optional<int> seeds;
    int threads = 0;
};

std::string default_out_dir() {
    if (const char* env = std::getenv("ROAMSIM_OUT_DIR"); env && *env) return env;
    return "out";
}

fs::path out_path(const Common& c, const std::string& name) {
    const fs::path dir = c.out_dir.empty() ? fs::path(default_out_dir()) : fs::path(c.out_dir);
    fs::create_directories(dir);
    return dir / name;
}

std::vector<std::uint64_t> seed_list(const Scenario& sc, const Common& c) {
    const std::uint64_t first = c.seed.value_or(sc.seed);
    const int count = c.seeds.value_or(c.seed ? 1 : sc.seed_count);
    std::vector<std::uint64_t> out;
    for (int k = 0; k < count; ++k) out.push_back(first + static_cast<std::uint64_t>(k));
    return out;
}

// First INTERACTIVE flow id, the table layout's default.
std::string interactive_flow(const Scenario& sc) {
    for (const auto& d : sc.devices)
        for (const auto& f : d.flows)
            if (f.cls == traffic::FlowClass::Interactive) return f.id;
    return sc.devices.empty() || sc.devices[0].flows.empty() ? "" : sc.devices[0].flows[0].id;
}

std::string live_flow(const Scenario& sc) {
    for (const auto& d : sc.devices)
        for (const auto& f : d.flows)
            if (f.cls == traffic::FlowClass::Live) return f.id;
    return interactive_flow(sc);
}

void write(const fs::path& p, const std::string& text) {
    write_file_atomic(p, text);
    std::cerr << "wrote " << p.string() << "\n";
}

int cmd_run(const Common& c, bool all_logs) {
    const Scenario sc = load_scenario(c.scenario);
    const auto seeds = seed_list(sc, c);
    sim::RunOptions opts;
    const auto results = sim::run_seeds_parallel(sc, seeds, opts);
    std::vector<sim::DeviceRun> runs;
    for (const auto& r : results) runs.insert(runs.end(), r.devices.begin(), r.devices.end());
    report::Report rep = report::build(runs);
    if (!results.empty()) report::add_throughput(rep, results.front().log);

    write(out_path(c, "report.csv"), report::cells_csv(rep));
    write(out_path(c, "rebuffer.csv"), report::rebuffer_csv(rep));
    write(out_path(c, "throughput.csv"), report::throughput_csv(rep));
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (i > 0 && !all_logs) break;
        write(out_path(c, "events_seed" + std::to_string(results[i].seed) + ".jsonl"), results[i].log.to_jsonl());
    }

    if (c.format == "csv") {
        std::cout << report::cells_csv(rep);
    } else if (c.format == "jsonl") {
        if (!results.empty()) std::cout << results.front().log.to_jsonl();
    } else {
        std::set<Mode> modes;
        for (const auto& d : sc.devices) modes.insert(d.mode);
        for (Mode m : modes) {
            const std::string flow = interactive_flow(sc);
            std::cout << flow << " (" << to_string(m) << ", " << seeds.size() << " seeds)\n"
                      << report::human_table(rep, flow, m) << "\n";
        }
    }
    return 0;
}

int cmd_compare(const Common& c, std::string flow) {
    const Scenario sc = load_scenario(c.scenario);
    if (flow.empty()) flow = live_flow(sc);
    const auto seeds = seed_list(sc, c);

    sim::RunOptions trad;
    trad.keep_log = false;
    trad.mode_override = Mode::Traditional;
    std::vector<sim::DeviceRun> runs;
    for (auto& r : sim::run_seeds_parallel(sc, seeds, trad))
        for (auto& d : r.devices) runs.push_back(std::move(d));

    Scenario tunnel_sc = sc;
    tunnel_sc.devices.clear();
    for (const auto& d : sc.devices)
        if (sc.profile_of(d).supports_tunnel_client) tunnel_sc.devices.push_back(d);
    if (!tunnel_sc.devices.empty()) {
        if (!sc.policy) throw std::invalid_argument(c.scenario + ": compare needs a 'policy' section for tunnel rows");
        sim::RunOptions tun = trad;
        tun.mode_override = Mode::Tunnel;
        for (auto& r : sim::run_seeds_parallel(tunnel_sc, seeds, tun))
            for (auto& d : r.devices) runs.push_back(std::move(d));
    }
    report::Report rep = report::build(runs);
    std::erase_if(rep.cells, [&](const report::Cell& x) { return x.flow != flow; });
    const std::string csv = report::cells_csv(rep);
    write(out_path(c, "compare.csv"), csv);
    write(out_path(c, "compare_rebuffer.csv"), report::rebuffer_csv(rep));
    if (c.format == "csv") {
        std::cout << csv;
    } else {
        for (Mode m : {Mode::Traditional, Mode::Tunnel})
            std::cout << flow << " (" << to_string(m) << ", " << seeds.size() << " seeds)\n"
                      << report::human_table(rep, flow, m) << "\n";
    }
    return 0;
}

int cmd_calibrate(const Common& c, const std::string& targets_path, std::string library_out) {
    const Scenario sc = load_scenario(c.scenario);
    const auto targets = calibrate::load_targets(targets_path);
    const auto ref = calibrate::make_reference(sc, seed_list(sc, c));
    const auto lib = calibrate::calibrate_all(targets, ref);
    const std::string residuals = calibrate::residual_report(lib);
    write(out_path(c, "residuals.csv"), residuals);
    std::cout << residuals;
    if (!lib.ok) {
        std::cerr << "calibration failed: at least one model is outside tolerance; library not written\n";
        return kExitFailure;
    }
    if (library_out.empty()) library_out = out_path(c, "profiles.yaml").string();
    write(library_out, emit_profile_library(lib.profiles()));
    return 0;
}

int cmd_report(const Common& c, const std::vector<std::string>& logs) {
    std::vector<log::EventLog> parsed;
    for (const auto& p : logs) {
        try {
            parsed.push_back(log::parse_jsonl(read_file(p)));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(p + ": " + e.what());
        }
    }
    const report::Report rep = report::from_logs(parsed);
    write(out_path(c, "report.csv"), report::cells_csv(rep));
    write(out_path(c, "rebuffer.csv"), report::rebuffer_csv(rep));
    write(out_path(c, "throughput.csv"), report::throughput_csv(rep));
    if (c.format == "csv") {
        std::cout << report::cells_csv(rep);
    } else {
        std::set<std::string> flows;
        std::set<Mode> modes;
        for (const auto& x : rep.cells) {
            flows.insert(x.flow);
            modes.insert(x.mode);
        }
        for (const auto& f : flows)
            for (Mode m : modes) std::cout << f << " (" << to_string(m) << ")\n" << report::human_table(rep, f, m) << "\n";
    }
    return 0;
}

int cmd_validate(const std::string& path) {
    const fs::path p(path);
    if (p.extension() == ".txt") {
        const auto prof = load_policy_profile(p);
        std::cout << path << ": policy profile OK (" << prof.wwan.size() << " WWAN, " << prof.wlan.size()
                  << " WLAN entries)\n";
        return 0;
    }
    const std::string text = read_file(p);
    if (text.find("targets:") != std::string::npos && text.find("environment:") == std::string::npos) {
        const auto t = calibrate::parse_targets(text, path);
        std::cout << path << ": targets OK (" << t.targets.size() << " models)\n";
        return 0;
    }
    if (text.find("environment:") == std::string::npos && text.find("profiles:") != std::string::npos) {
        const auto lib = parse_profile_library(text, path);
        std::cout << path << ": profile library OK (" << lib.size() << " profiles)\n";
        return 0;
    }
    const Scenario sc = parse_scenario(text, path, p.parent_path());
    sc.validate();
    std::cout << path << ": scenario OK (" << sc.devices.size() << " devices, " << sc.env.nodes.size()
              << " nodes, " << sc.tick_count() << " ticks)\n";
    return 0;
}

int cmd_gen_profile(const Common& c, const std::string& input, bool write_out) {
    const auto prof = load_policy_profile(input);
    const std::string payload = policy::emit_profile_payload(prof);
    std::cout << payload << "\n";
    if (write_out) write(out_path(c, fs::path(input).stem().string() + ".payload"), payload + "\n");
    return 0;
}

std::vector<Vec2> read_points(const std::string& path) {
    std::vector<Vec2> pts;
    std::istringstream in(read_file(path));
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
        double x = 0, y = 0;
        char comma = 0;
        std::istringstream ls(line);
        if (!(ls >> x >> comma >> y) || comma != ',')
            throw ConfigError(path, n, "expected 'x,y', got '" + line + "'");
        pts.push_back({x, y});
    }
    return pts;
}

int cmd_geofence(const Common& c, const std::vector<double>& point, const std::string& points_file) {
    const Scenario sc = load_scenario(c.scenario);
    if (!sc.policy || !sc.policy->geofence)
        throw std::invalid_argument(c.scenario + ": no policy.geofence section");
    const auto& g = *sc.policy->geofence;
    std::vector<Vec2> pts;
    if (point.size() == 2) pts.push_back({point[0], point[1]});
    if (!points_file.empty()) {
        auto more = read_points(points_file);
        pts.insert(pts.end(), more.begin(), more.end());
    }
    if (pts.empty()) throw std::invalid_argument("geofence-check: give --point x,y or --points FILE");
    const auto inside = kernels::contains_batch_parallel(g, pts);
    std::string csv = "x,y,inside\n";
    char buf[96];
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6g,%.6g,%s\n", pts[i].x, pts[i].y, inside[i] ? "true" : "false");
        csv += buf;
    }
    if (!points_file.empty()) write(out_path(c, "geofence.csv"), csv);
    std::cout << csv;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"roamsim: dual-RAT roaming simulator"};
    app.require_subcommand(1);
    Common c;

    auto add_common = [&](CLI::App* s, bool scenario) {
        if (scenario) s->add_option("-s,--scenario", c.scenario, "scenario YAML");
        s->add_option("-o,--out", c.out_dir, "output directory (default $ROAMSIM_OUT_DIR or ./out)");
        s->add_option("-f,--format", c.format, "stdout format")->check(CLI::IsMember({"table", "csv", "jsonl"}));
        s->add_option("--threads", c.threads, "OpenMP threads for run fan-out (0 = runtime default)");
    };
    auto add_seeds = [&](CLI::App* s) {
        s->add_option("--seed", c.seed, "first seed (default: scenario seed)");
        s->add_option("--seeds", c.seeds, "number of seeds (default: scenario seeds, or 1 with --seed)");
    };

    auto* run = app.add_subcommand("run", "run a scenario and write report, logs and throughput samples");
    add_common(run, true);
    add_seeds(run);
    bool all_logs = false;
    run->add_flag("--all-logs", all_logs, "write the event log of every seed, not just the first");

    auto* compare = app.add_subcommand("compare", "traditional vs tunnel per device and direction");
    add_common(compare, true);
    add_seeds(compare);
    std::string flow;
    compare->add_option("--flow", flow, "flow id (default: first LIVE flow)");

    auto* cal = app.add_subcommand("calibrate", "fit device profiles to switch-time targets");
    add_common(cal, true);
    add_seeds(cal);
    std::string targets = "data/targets.yaml";
    std::string library;
    cal->add_option("-t,--targets", targets, "targets YAML");
    cal->add_option("--library", library, "where to write the profile library (default: <out>/profiles.yaml)");

    auto* rep = app.add_subcommand("report", "regenerate a report from event logs");
    add_common(rep, false);
    std::vector<std::string> logs;
    rep->add_option("logs", logs, "event log files (.jsonl)")->required()->check(CLI::ExistingFile);

    auto* val = app.add_subcommand("validate-config", "check a scenario, profile library, targets or policy file");
    std::string config;
    val->add_option("config", config, "file to validate")->required();

    auto* gen = app.add_subcommand("gen-profile", "parse a radio preference profile and print its payload");
    std::string profile_in;
    bool gen_write = false;
    gen->add_option("profile", profile_in, "profile .txt")->required();
    gen->add_option("-o,--out", c.out_dir, "output directory");
    gen->add_flag("-w,--write", gen_write, "also write <out>/<name>.payload");

    auto* geo = app.add_subcommand("geofence-check", "test points against the scenario geofence");
    add_common(geo, true);
    std::vector<double> point;
    std::string points_file;
    geo->add_option("--point", point, "x,y")->delimiter(',')->expected(2);
    geo->add_option("--points", points_file, "CSV of x,y points")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitUsage;
    }
    if (c.threads > 0) omp_set_num_threads(c.threads);

    try {
        if (*run) return cmd_run(c, all_logs);
        if (*compare) return cmd_compare(c, flow);
        if (*cal) return cmd_calibrate(c, targets, library);
        if (*rep) return cmd_report(c, logs);
        if (*val) return cmd_validate(config);
        if (*gen) return cmd_gen_profile(c, profile_in, gen_write);
        if (*geo) return cmd_geofence(c, point, points_file);
    } catch (const policy::ProfileError& e) {
        std::cerr << "error: " << (*gen ? profile_in : config) << ":" << e.line() << ": " << e.message() << "\n";
        return kExitValidation;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
